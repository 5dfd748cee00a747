#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "mseqa/inference.hpp"
#include "mseqa/rng.hpp"
#include "mseqa/text.hpp"

using namespace mseqa;

namespace {

// a small encoding over a known context with real offsets
struct DecodeFixture {
  std::string context = "At 6 am, Jenny was exercising on the yoga mat in living room.";
  Encoding enc;

  DecodeFixture() {
    enc.ids = {0};  // CLS
    enc.offsets = {{0, 0}};
    enc.segment_ids = {0};
    enc.attention_mask = {1};
    // question: "when" [SEP]
    enc.ids.push_back(4);
    enc.offsets.emplace_back(0, 0);
    enc.segment_ids.push_back(0);
    enc.attention_mask.push_back(1);
    enc.ids.push_back(1);  // SEP
    enc.offsets.emplace_back(0, 0);
    enc.segment_ids.push_back(0);
    enc.attention_mask.push_back(1);
    for (const auto& t : tokenize(context)) {
      enc.ids.push_back(5);
      enc.offsets.emplace_back(t.char_start, t.char_end);
      enc.segment_ids.push_back(1);
      enc.attention_mask.push_back(1);
    }
    enc.ids.push_back(1);  // SEP
    enc.offsets.emplace_back(0, 0);
    enc.segment_ids.push_back(1);
    enc.attention_mask.push_back(1);
  }

  SpanDistributions<float> uniform() const {
    const int T = enc.length();
    SpanDistributions<float> d;
    d.p_start = Vec<float>::Constant(T, 1.0f / T);
    d.p_end = Vec<float>::Constant(T, 1.0f / T);
    return d;
  }
};

// exhaustive search over the decode_single rule
Answer brute_force_single(const SpanDistributions<float>& d, const std::array<float, 3>& p_a,
                          const Encoding& enc, const std::string& context,
                          const DecodeConfig& cfg) {
  const int T = enc.length();
  const int base = enc.context_base();
  double best = -1e300;
  int bi = -1, bj = -1;
  for (int i = base; i < T; ++i) {
    if (!enc.attention_mask[i] || (enc.offsets[i] == std::pair<int, int>{0, 0})) continue;
    for (int j = i; j < T && j - i < cfg.max_answer_tokens; ++j) {
      if (!enc.attention_mask[j] || (enc.offsets[j] == std::pair<int, int>{0, 0})) continue;
      const double s = std::log(static_cast<double>(d.p_start[i])) +
                       std::log(static_cast<double>(d.p_end[j]));
      if (s > best) {
        best = s;
        bi = i;
        bj = j;
      }
    }
  }
  const double cls = std::log(static_cast<double>(d.p_start[0])) +
                     std::log(static_cast<double>(d.p_end[0]));
  Answer a;
  if (bi < 0 || cls >= best) {
    const int arg = static_cast<int>(std::max_element(p_a.begin(), p_a.end()) - p_a.begin());
    a.kind = arg == 0 ? Answer::Kind::yes : arg == 1 ? Answer::Kind::no_ : Answer::Kind::unknown;
    return a;
  }
  a.kind = Answer::Kind::span;
  GoldSpan g;
  g.char_start = enc.offsets[bi].first;
  g.char_end = enc.offsets[bj].second;
  g.text = utf8_substr(context, g.char_start, g.char_end);
  a.spans.push_back(g);
  return a;
}

Passage toy_passage() {
  Passage p;
  p.id = "p";
  const std::vector<std::string> sents = {"At 6 am, Jenny slept.", "At 7 am, Bob cooked.",
                                          "At 8 am, Ana read."};
  int off = 0;
  for (const auto& s : sents) {
    SentenceRecord r;
    r.text = s;
    p.sentences.push_back(r);
    p.sentence_offsets.push_back(off);
    if (!p.full_text.empty()) p.full_text += ' ';
    p.full_text += s;
    off += static_cast<int>(utf8_length(s)) + 1;
  }
  return p;
}

}  // namespace

TEST_CASE("decode_single routes to the answer-type head when CLS wins") {
  DecodeFixture f;
  auto d = f.uniform();
  d.p_start.setZero();
  d.p_end.setZero();
  d.p_start[0] = 1.0f;
  d.p_end[0] = 1.0f;
  const DecodeConfig cfg;
  CHECK(decode_single(d, {0.7f, 0.2f, 0.1f}, f.enc, f.context, cfg).kind == Answer::Kind::yes);
  CHECK(decode_single(d, {0.2f, 0.7f, 0.1f}, f.enc, f.context, cfg).kind == Answer::Kind::no_);
  CHECK(decode_single(d, {0.1f, 0.2f, 0.7f}, f.enc, f.context, cfg).kind ==
        Answer::Kind::unknown);
}

TEST_CASE("decode_single returns the peaked span with correct text") {
  DecodeFixture f;
  auto d = f.uniform();
  d.p_start.setZero();
  d.p_end.setZero();
  const int base = f.enc.context_base();
  d.p_start[base + 1] = 1.0f;  // "6"
  d.p_end[base + 2] = 1.0f;    // "am"
  const Answer a = decode_single(d, {0.3f, 0.3f, 0.4f}, f.enc, f.context, DecodeConfig{});
  REQUIRE(a.kind == Answer::Kind::span);
  REQUIRE(a.spans.size() == 1);
  CHECK(a.spans[0].text == "6 am");
  CHECK(utf8_substr(f.context, a.spans[0].char_start, a.spans[0].char_end) == "6 am");
}

TEST_CASE("decode_single equals the brute-force oracle on 1000 random distributions") {
  DecodeFixture f;
  Rng rng(77);
  const DecodeConfig cfg;
  const int T = f.enc.length();
  for (int t = 0; t < 1000; ++t) {
    SpanDistributions<float> d;
    d.p_start = Vec<float>(T);
    d.p_end = Vec<float>(T);
    float zs = 0, ze = 0;
    for (int i = 0; i < T; ++i) {
      d.p_start[i] = static_cast<float>(rng.next_real()) + 1e-4f;
      d.p_end[i] = static_cast<float>(rng.next_real()) + 1e-4f;
      zs += d.p_start[i];
      ze += d.p_end[i];
    }
    d.p_start /= zs;
    d.p_end /= ze;
    std::array<float, 3> p_a;
    float za = 0;
    for (auto& v : p_a) {
      v = static_cast<float>(rng.next_real()) + 1e-4f;
      za += v;
    }
    for (auto& v : p_a) v /= za;

    const Answer got = decode_single(d, p_a, f.enc, f.context, cfg);
    const Answer want = brute_force_single(d, p_a, f.enc, f.context, cfg);
    CHECK(got.kind == want.kind);
    if (got.kind == Answer::Kind::span) {
      REQUIRE(want.kind == Answer::Kind::span);
      CHECK(got.spans[0].char_start == want.spans[0].char_start);
      CHECK(got.spans[0].char_end == want.spans[0].char_end);
      CHECK(got.spans[0].text == want.spans[0].text);
    }
  }
}

TEST_CASE("decode_single respects max_answer_tokens") {
  DecodeFixture f;
  auto d = f.uniform();
  d.p_start.setZero();
  d.p_end.setZero();
  const int base = f.enc.context_base();
  d.p_start[base] = 1.0f;
  d.p_end[base + 5] = 1.0f;  // 6 tokens apart
  DecodeConfig cfg;
  cfg.max_answer_tokens = 3;
  const Answer a = decode_single(d, {0.1f, 0.1f, 0.8f}, f.enc, f.context, cfg);
  if (a.kind == Answer::Kind::span) {
    // any span returned must respect the bound
    const Answer want = brute_force_single(d, {0.1f, 0.1f, 0.8f}, f.enc, f.context, cfg);
    CHECK(a.spans[0].char_start == want.spans[0].char_start);
    CHECK(a.spans[0].char_end == want.spans[0].char_end);
  }
}

TEST_CASE("decode_multi thresholding, ordering and fallback") {
  const Passage p = toy_passage();
  const DecodeConfig cfg;
  SUBCASE("tags (0.9, 0.1, 0.8) select sentences 0 and 2") {
    const Answer a = decode_multi({{{0.1f, 0.9f}}, {{0.9f, 0.1f}}, {{0.2f, 0.8f}}}, p, cfg);
    REQUIRE(a.kind == Answer::Kind::multi_span);
    REQUIRE(a.spans.size() == 2);
    CHECK(a.spans[0].text == p.sentences[0].text);
    CHECK(a.spans[1].text == p.sentences[2].text);
    CHECK(a.spans[0].char_start < a.spans[1].char_start);
    for (const auto& g : a.spans)
      CHECK(utf8_substr(p.full_text, g.char_start, g.char_end) == g.text);
  }
  SUBCASE("all below threshold falls back to the argmax sentence") {
    const Answer a = decode_multi({{{0.8f, 0.2f}}, {{0.6f, 0.4f}}, {{0.9f, 0.1f}}}, p, cfg);
    REQUIRE(a.spans.size() == 1);
    CHECK(a.spans[0].text == p.sentences[1].text);
  }
  SUBCASE("raising the threshold never adds a sentence") {
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
      std::vector<std::array<float, 2>> tags;
      for (int i = 0; i < 3; ++i) {
        const float pa = static_cast<float>(rng.next_real());
        tags.push_back({1.0f - pa, pa});
      }
      DecodeConfig lo = cfg, hi = cfg;
      lo.tagger_threshold = 0.3;
      hi.tagger_threshold = 0.7;
      const Answer a_lo = decode_multi(tags, p, lo);
      const Answer a_hi = decode_multi(tags, p, hi);
      CHECK(a_hi.spans.size() <= std::max<size_t>(a_lo.spans.size(), 1));
      // every hi-selected sentence above threshold is also lo-selected
      for (const auto& g : a_hi.spans) {
        bool found = false;
        for (const auto& h : a_lo.spans) found |= h.char_start == g.char_start;
        if (a_hi.spans.size() > 1 || tags.size() == 1) CHECK(found);
      }
    }
  }
  SUBCASE("empty passage is rejected") {
    CHECK_THROWS_AS(decode_multi({}, Passage{}, cfg), DataError);
  }
}

TEST_CASE("decode config validation") {
  DecodeConfig cfg;
  cfg.tagger_threshold = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = DecodeConfig{};
  cfg.max_answer_tokens = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
