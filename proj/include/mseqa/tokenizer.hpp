#ifndef MSEQA_TOKENIZER_HPP
#define MSEQA_TOKENIZER_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mseqa {

// Surface token with scalar-value offsets into its source string.
struct RawToken {
  std::string text;  // lowercased
  int char_start = 0;
  int char_end = 0;
};

// Whitespace + punctuation-splitting tokenization, lowercased.
std::vector<RawToken> tokenize(const std::string& text);

struct Vocab {
  std::vector<std::string> id_to_token;  // specials first
  std::unordered_map<std::string, int> token_to_id;

  static constexpr int kCls = 0;
  static constexpr int kSep = 1;
  static constexpr int kPad = 2;
  static constexpr int kUnk = 3;

  int size() const { return static_cast<int>(id_to_token.size()); }
  int id_of(const std::string& token) const {
    auto it = token_to_id.find(token);
    return it == token_to_id.end() ? kUnk : it->second;
  }

  // FNV-1a over the token list; detects checkpoint/vocab drift.
  uint64_t hash() const;

  void save(const std::string& path) const;  // JSON array, ids implicit
  static Vocab load(const std::string& path);
  static Vocab from_tokens(std::vector<std::string> tokens);  // incl. specials
};

Vocab build_vocab(const std::vector<std::string>& corpus, int min_count);

struct Encoding {
  std::vector<int> ids;
  std::vector<std::pair<int, int>> offsets;  // (0,0) sentinel for specials
  std::vector<int> segment_ids;              // 0 question, 1 context
  std::vector<int> attention_mask;           // 1 real, 0 padding
  bool truncated = false;

  int length() const { return static_cast<int>(ids.size()); }
  // Index of the first context token (one past the first [SEP]).
  int context_base() const;
};

constexpr int kMaxQuestionTokens = 128;
constexpr int kMaxTotalTokens = 512;
constexpr int kMaxSentenceTokens = 64;

// [CLS] question [SEP] context [SEP]; question capped first, then the
// context cut to fit the total budget.
Encoding encode_pair(const Vocab& vocab, const std::string& question, const std::string& context,
                     int max_question = kMaxQuestionTokens, int max_total = kMaxTotalTokens);

// [CLS] question [SEP] sentence [SEP] with a hard per-sentence cap.
Encoding encode_sentence_pair(const Vocab& vocab, const std::string& question,
                              const std::string& sentence,
                              int max_question = kMaxQuestionTokens,
                              int max_sentence = kMaxSentenceTokens);

// Maps a context char span to the inclusive context-token range covering it.
// Throws UnmappableSpanError when the span fell past the truncation point.
std::pair<int, int> char_span_to_token_span(const Encoding& enc, std::pair<int, int> span);

}  // namespace mseqa

#endif
