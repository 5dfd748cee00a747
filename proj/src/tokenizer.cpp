#include "mseqa/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "json.hpp"
#include "mseqa/errors.hpp"
#include "mseqa/text.hpp"

namespace mseqa {

static const char* kSpecialNames[4] = {"[CLS]", "[SEP]", "[PAD]", "[UNK]"};

std::vector<RawToken> tokenize(const std::string& text) {
  const std::vector<size_t> starts = utf8_scalar_starts(text);
  const size_t n = starts.size() - 1;
  std::vector<RawToken> out;
  size_t i = 0;
  auto scalar_at = [&](size_t k) { return text.substr(starts[k], starts[k + 1] - starts[k]); };
  auto classify = [&](size_t k) -> int {
    const std::string s = scalar_at(k);
    if (s.size() == 1) {
      const unsigned char c = static_cast<unsigned char>(s[0]);
      if (std::isspace(c)) return 0;   // separator
      if (std::isalnum(c)) return 2;   // word
      return 1;                        // punctuation, one token per scalar
    }
    return 2;  // non-ASCII scalars join words
  };
  while (i < n) {
    const int cls = classify(i);
    if (cls == 0) {
      ++i;
    } else if (cls == 1) {
      out.push_back(RawToken{scalar_at(i), static_cast<int>(i), static_cast<int>(i + 1)});
      ++i;
    } else {
      size_t j = i;
      std::string tok;
      while (j < n && classify(j) == 2) tok += scalar_at(j++);
      out.push_back(RawToken{to_lower_ascii(tok), static_cast<int>(i), static_cast<int>(j)});
      i = j;
    }
  }
  return out;
}

uint64_t Vocab::hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : id_to_token) {
    for (char c : t) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
    h = (h ^ 0x1F) * 0x100000001b3ULL;  // token boundary
  }
  return h;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  v.id_to_token = std::move(tokens);
  for (size_t i = 0; i < v.id_to_token.size(); ++i)
    v.token_to_id.emplace(v.id_to_token[i], static_cast<int>(i));
  for (int i = 0; i < 4; ++i)
    if (v.id_to_token.size() <= static_cast<size_t>(i) || v.id_to_token[i] != kSpecialNames[i])
      throw DataError("vocab: special tokens must occupy ids 0-3");
  return v;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << nlohmann::json(id_to_token).dump() << "\n";
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  return from_tokens(j.get<std::vector<std::string>>());
}

Vocab build_vocab(const std::vector<std::string>& corpus, int min_count) {
  if (corpus.empty()) throw ConfigError("build_vocab: empty corpus");
  std::map<std::string, int> freq;
  for (const auto& s : corpus)
    for (const auto& t : tokenize(s)) freq[t.text] += 1;
  std::vector<std::pair<std::string, int>> kept;
  for (const auto& [tok, c] : freq)
    if (c >= min_count) kept.emplace_back(tok, c);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens(kSpecialNames, kSpecialNames + 4);
  for (const auto& [tok, c] : kept) tokens.push_back(tok);
  return Vocab::from_tokens(std::move(tokens));
}

int Encoding::context_base() const {
  for (size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == Vocab::kSep) return static_cast<int>(i) + 1;
  return length();
}

namespace {

void push_token(Encoding& e, const Vocab& v, const RawToken& t, int segment) {
  e.ids.push_back(v.id_of(t.text));
  e.offsets.emplace_back(t.char_start, t.char_end);
  e.segment_ids.push_back(segment);
  e.attention_mask.push_back(1);
}

}  // namespace

Encoding encode_pair(const Vocab& vocab, const std::string& question, const std::string& context,
                     int max_question, int max_total) {
  std::vector<RawToken> q = tokenize(question);
  if (static_cast<int>(q.size()) > max_question) q.resize(max_question);
  std::vector<RawToken> c = tokenize(context);

  Encoding e;
  e.ids.push_back(Vocab::kCls);
  e.offsets.emplace_back(0, 0);
  e.segment_ids.push_back(0);
  e.attention_mask.push_back(1);
  for (const auto& t : q) push_token(e, vocab, t, 0);
  e.ids.push_back(Vocab::kSep);
  e.offsets.emplace_back(0, 0);
  e.segment_ids.push_back(0);
  e.attention_mask.push_back(1);

  const int budget = max_total - e.length() - 1;  // room for the final [SEP]
  if (static_cast<int>(c.size()) > budget) {
    c.resize(std::max(0, budget));
    e.truncated = true;
  }
  for (const auto& t : c) push_token(e, vocab, t, 1);
  e.ids.push_back(Vocab::kSep);
  e.offsets.emplace_back(0, 0);
  e.segment_ids.push_back(1);
  e.attention_mask.push_back(1);
  return e;
}

Encoding encode_sentence_pair(const Vocab& vocab, const std::string& question,
                              const std::string& sentence, int max_question, int max_sentence) {
  std::vector<RawToken> s = tokenize(sentence);
  Encoding e;
  if (static_cast<int>(s.size()) > max_sentence) {
    // Re-join is not needed; cap at token granularity via the pair encoder's
    // context budget.
    s.resize(max_sentence);
    e.truncated = true;
  }
  std::vector<RawToken> q = tokenize(question);
  if (static_cast<int>(q.size()) > max_question) q.resize(max_question);

  e.ids.push_back(Vocab::kCls);
  e.offsets.emplace_back(0, 0);
  e.segment_ids.push_back(0);
  e.attention_mask.push_back(1);
  for (const auto& t : q) push_token(e, vocab, t, 0);
  e.ids.push_back(Vocab::kSep);
  e.offsets.emplace_back(0, 0);
  e.segment_ids.push_back(0);
  e.attention_mask.push_back(1);
  for (const auto& t : s) push_token(e, vocab, t, 1);
  e.ids.push_back(Vocab::kSep);
  e.offsets.emplace_back(0, 0);
  e.segment_ids.push_back(1);
  e.attention_mask.push_back(1);
  return e;
}

std::pair<int, int> char_span_to_token_span(const Encoding& enc, std::pair<int, int> span) {
  int first = -1, last = -1;
  for (int i = 0; i < enc.length(); ++i) {
    if (enc.segment_ids[i] != 1 || enc.attention_mask[i] == 0) continue;
    const auto& [cs, ce] = enc.offsets[i];
    if (cs == 0 && ce == 0) continue;  // special
    if (cs < span.second && span.first < ce) {
      if (first < 0) first = i;
      last = i;
    }
  }
  if (first < 0)
    throw UnmappableSpanError("char span [" + std::to_string(span.first) + "," +
                              std::to_string(span.second) + ") has no surviving tokens");
  return {first, last};
}

}  // namespace mseqa
