#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mseqa/corpus.hpp"
#include "mseqa/text.hpp"
#include "mseqa/errors.hpp"
#include "mseqa/tokenizer.hpp"

using namespace mseqa;

namespace {

Vocab corpus_vocab() {
  GenConfig cfg;
  cfg.seed = 9;
  cfg.n_passages = 30;
  const Dataset ds = build_dataset(default_catalog(), cfg);
  std::vector<std::string> texts;
  for (const auto& p : ds.passages) texts.push_back(p.full_text);
  for (const auto& qa : ds.qapairs) texts.push_back(qa.question);
  return build_vocab(texts, 1);
}

}  // namespace

TEST_CASE("tokenize lowercases and splits punctuation into single tokens") {
  const auto toks = tokenize("At 6 am, Jenny slept!");
  std::vector<std::string> surfaces;
  for (const auto& t : toks) surfaces.push_back(t.text);
  CHECK(surfaces == std::vector<std::string>{"at", "6", "am", ",", "jenny", "slept", "!"});
}

TEST_CASE("token offsets reconstruct every surface form") {
  const std::string text = "At 6:30 pm, Hugo said \"play some jazz\" in backyard.";
  for (const auto& t : tokenize(text))
    CHECK(to_lower_ascii(utf8_substr(text, t.char_start, t.char_end)) == t.text);
}

TEST_CASE("build_vocab ordering and min_count") {
  const Vocab v1 = build_vocab({"a b", "a"}, 1);
  CHECK(v1.size() == 6);  // 4 specials + a + b
  CHECK(v1.id_of("a") == 4);
  CHECK(v1.id_of("b") == 5);
  const Vocab v2 = build_vocab({"a b", "a"}, 2);
  CHECK(v2.size() == 5);
  CHECK(v2.id_of("b") == Vocab::kUnk);
  CHECK_THROWS_AS(build_vocab({}, 1), ConfigError);
}

TEST_CASE("vocab specials are reserved at ids 0-3") {
  const Vocab v = build_vocab({"x"}, 1);
  CHECK(v.id_to_token[Vocab::kCls] == "[CLS]");
  CHECK(v.id_to_token[Vocab::kSep] == "[SEP]");
  CHECK(v.id_to_token[Vocab::kPad] == "[PAD]");
  CHECK(v.id_to_token[Vocab::kUnk] == "[UNK]");
}

TEST_CASE("vocab save/load round trip byte-identical across runs") {
  const Vocab v = corpus_vocab();
  const std::string p1 = "/tmp/mseqa_vocab1.json", p2 = "/tmp/mseqa_vocab2.json";
  v.save(p1);
  corpus_vocab().save(p2);
  std::ifstream a(p1), b(p2);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  const Vocab back = Vocab::load(p1);
  CHECK(back.size() == v.size());
  CHECK(back.hash() == v.hash());
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("encode_pair framing") {
  const Vocab v = corpus_vocab();
  const Encoding e = encode_pair(v, "When?", "At 6 am, Jenny slept");
  REQUIRE(e.length() >= 4);
  CHECK(e.ids[0] == Vocab::kCls);
  int seps = 0;
  for (int id : e.ids) seps += id == Vocab::kSep ? 1 : 0;
  CHECK(seps == 2);
  CHECK(e.ids.back() == Vocab::kSep);
  // segment ids: 0 through the first SEP, then 1
  const int base = e.context_base();
  for (int i = 0; i < base; ++i) CHECK(e.segment_ids[i] == 0);
  for (int i = base; i < e.length(); ++i) CHECK(e.segment_ids[i] == 1);
  CHECK_FALSE(e.truncated);
  CHECK(e.ids.size() == e.offsets.size());
  CHECK(e.ids.size() == e.segment_ids.size());
  CHECK(e.ids.size() == e.attention_mask.size());
}

TEST_CASE("encode_pair truncates a 1000-token context to 512 total") {
  const Vocab v = corpus_vocab();
  std::string ctx;
  for (int i = 0; i < 1000; ++i) ctx += "jenny ";
  const Encoding e = encode_pair(v, "When was that?", ctx);
  CHECK(e.length() == 512);
  CHECK(e.truncated);
  CHECK(e.ids.back() == Vocab::kSep);
}

TEST_CASE("question truncated to 128 tokens before framing") {
  const Vocab v = corpus_vocab();
  std::string q;
  for (int i = 0; i < 300; ++i) q += "when ";
  const Encoding e = encode_pair(v, q, "jenny slept");
  CHECK(e.context_base() == 130);  // CLS + 128 + SEP
}

TEST_CASE("encode_sentence_pair limits the sentence to 64 tokens") {
  const Vocab v = corpus_vocab();
  std::string sent;
  for (int i = 0; i < 100; ++i) sent += "jazz ";
  const Encoding e = encode_sentence_pair(v, "What?", sent);
  const int base = e.context_base();
  int ctx_tokens = 0;
  for (int i = base; i < e.length(); ++i) ctx_tokens += e.ids[i] != Vocab::kSep ? 1 : 0;
  CHECK(ctx_tokens == 64);
}

TEST_CASE("encode_sentence_pair with an empty sentence") {
  const Vocab v = corpus_vocab();
  const Encoding e = encode_sentence_pair(v, "What?", "");
  const bool empty_ctx = e.context_base() == e.length() || e.length() - e.context_base() <= 1;
  CHECK(empty_ctx);
  CHECK(e.ids[0] == Vocab::kCls);
}

TEST_CASE("offset round trip over the desk corpus") {
  GenConfig cfg;
  cfg.seed = 4;
  cfg.n_passages = 20;
  const Dataset ds = build_dataset(default_catalog(), cfg);
  const Vocab v = corpus_vocab();
  for (const auto& p : ds.passages) {
    const Encoding e = encode_pair(v, "where was jenny", p.full_text);
    for (int i = 0; i < e.length(); ++i) {
      if (e.segment_ids[i] != 1) continue;  // offsets index the question there
      const auto [s, t] = e.offsets[i];
      if (s == 0 && t == 0) continue;  // special sentinel
      const std::string surface = to_lower_ascii(utf8_substr(p.full_text, s, t));
      CHECK(v.id_of(surface) == e.ids[i]);
    }
  }
}

TEST_CASE("char_span_to_token_span identity and brute-force agreement") {
  const Vocab v = corpus_vocab();
  const std::string ctx = "At 6 am, Jenny was exercising on the yoga mat in living room.";
  const Encoding e = encode_pair(v, "When was Jenny exercising?", ctx);

  SUBCASE("span covering exactly one token") {
    // find the context token for "jenny"
    for (int i = e.context_base(); i < e.length(); ++i) {
      const auto [s, t] = e.offsets[i];
      if (s == 0 && t == 0) continue;
      const auto [ts, te] = char_span_to_token_span(e, {s, t});
      CHECK(ts == i);
      CHECK(te == i);
    }
  }
  SUBCASE("multi-token span matches a brute-force scan") {
    const int s = 3, t = 7;  // "6 am"
    const auto [ts, te] = char_span_to_token_span(e, {s, t});
    int lo = -1, hi = -1;
    for (int i = 0; i < e.length(); ++i) {
      if (e.segment_ids[i] != 1) continue;  // question offsets index the question
      const auto [a, b] = e.offsets[i];
      if (a == 0 && b == 0) continue;
      if (a < t && b > s) {
        if (lo < 0) lo = i;
        hi = i;
      }
    }
    CHECK(ts == lo);
    CHECK(te == hi);
    CHECK(ts <= te);
  }
  SUBCASE("span past the truncation point is unmappable") {
    std::string long_ctx;
    for (int i = 0; i < 1000; ++i) long_ctx += "jenny ";
    const Encoding tr = encode_pair(v, "when", long_ctx);
    REQUIRE(tr.truncated);
    CHECK_THROWS_AS(char_span_to_token_span(tr, {5900, 5905}), UnmappableSpanError);
  }
}

TEST_CASE("token span expansion contains the original char span") {
  const Vocab v = corpus_vocab();
  GenConfig cfg;
  cfg.seed = 2;
  cfg.n_passages = 10;
  const Dataset ds = build_dataset(default_catalog(), cfg);
  std::map<std::string, const Passage*> by_id;
  for (const auto& p : ds.passages) by_id[p.id] = &p;
  for (const auto& qa : ds.qapairs) {
    const Passage& p = *by_id.at(qa.passage_id);
    const Encoding e = encode_pair(v, qa.question, p.full_text);
    for (const auto& g : qa.gold_spans) {
      if (e.truncated) continue;
      const auto [ts, te] = char_span_to_token_span(e, {g.char_start, g.char_end});
      CHECK(e.offsets[ts].first <= g.char_start);
      CHECK(e.offsets[te].second >= g.char_end);
    }
  }
}
