#include "mseqa/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace mseqa {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
}

template <typename T>
void get(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void parse_gen(const json& j, GenConfig& g) {
  reject_unknown(j,
                 {"seed", "n_passages", "sentences_per_passage", "question_families_enabled",
                  "fraction_boolean", "fraction_unknown", "multi_span_min_events",
                  "questions_per_passage"},
                 "gen");
  get(j, "seed", g.seed);
  get(j, "n_passages", g.n_passages);
  if (j.contains("sentences_per_passage")) {
    const auto& r = j.at("sentences_per_passage");
    if (!r.is_array() || r.size() != 2)
      throw ConfigError("config: gen.sentences_per_passage must be [lo, hi]");
    g.sentences_per_passage = {r.at(0).get<int>(), r.at(1).get<int>()};
  }
  get(j, "question_families_enabled", g.question_families_enabled);
  get(j, "fraction_boolean", g.fraction_boolean);
  get(j, "fraction_unknown", g.fraction_unknown);
  get(j, "multi_span_min_events", g.multi_span_min_events);
  get(j, "questions_per_passage", g.questions_per_passage);
}

void parse_encoder(const json& j, EncoderConfig& e) {
  reject_unknown(
      j, {"layers", "heads", "hidden", "ffn_dim", "max_positions", "vocab_size", "dropout_rate"},
      "encoder");
  get(j, "layers", e.layers);
  get(j, "heads", e.heads);
  get(j, "hidden", e.hidden);
  get(j, "ffn_dim", e.ffn_dim);
  get(j, "max_positions", e.max_positions);
  get(j, "vocab_size", e.vocab_size);
  get(j, "dropout_rate", e.dropout_rate);
}

void parse_training(const json& j, TrainingConfig& t) {
  reject_unknown(j,
                 {"lr_peak", "batch_size", "epochs", "warmup_fraction", "clip_norm", "lambda_q",
                  "lambda_a", "lambda_s", "lambda_t", "seed", "weight_decay", "adam_beta1",
                  "adam_beta2", "adam_epsilon", "tag_from_single"},
                 "training");
  get(j, "lr_peak", t.lr_peak);
  get(j, "batch_size", t.batch_size);
  get(j, "epochs", t.epochs);
  get(j, "warmup_fraction", t.warmup_fraction);
  get(j, "clip_norm", t.clip_norm);
  get(j, "lambda_q", t.lambda_q);
  get(j, "lambda_a", t.lambda_a);
  get(j, "lambda_s", t.lambda_s);
  get(j, "lambda_t", t.lambda_t);
  get(j, "seed", t.seed);
  get(j, "weight_decay", t.weight_decay);
  get(j, "adam_beta1", t.adam_beta1);
  get(j, "adam_beta2", t.adam_beta2);
  get(j, "adam_epsilon", t.adam_epsilon);
  get(j, "tag_from_single", t.tag_from_single);
}

void parse_decode(const json& j, DecodeConfig& d) {
  reject_unknown(j, {"max_answer_tokens", "tagger_threshold", "max_sentences"}, "decode");
  get(j, "max_answer_tokens", d.max_answer_tokens);
  get(j, "tagger_threshold", d.tagger_threshold);
  get(j, "max_sentences", d.max_sentences);
}

}  // namespace

void RunConfig::validate() const {
  gen.validate();
  // vocab_size is derived from the data at train time; skip encoder.validate()
  // when it is still unset.
  if (encoder.vocab_size > 0) encoder.validate();
  training.validate();
  decode.validate();
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: parse failure: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown(j, {"version", "gen", "encoder", "training", "decode"}, "top level");
  if (!j.contains("version")) throw ConfigError("config: missing required 'version'");
  RunConfig cfg;
  cfg.version = j.at("version").get<int>();
  if (cfg.version != 1) throw ConfigError("config: unsupported version");
  if (j.contains("gen")) parse_gen(j.at("gen"), cfg.gen);
  if (j.contains("encoder")) parse_encoder(j.at("encoder"), cfg.encoder);
  if (j.contains("training")) parse_training(j.at("training"), cfg.training);
  if (j.contains("decode")) parse_decode(j.at("decode"), cfg.decode);
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string RunConfig::to_json() const {
  json j{{"version", version},
         {"gen",
          {{"seed", gen.seed},
           {"n_passages", gen.n_passages},
           {"sentences_per_passage", {gen.sentences_per_passage.lo, gen.sentences_per_passage.hi}},
           {"question_families_enabled", gen.question_families_enabled},
           {"fraction_boolean", gen.fraction_boolean},
           {"fraction_unknown", gen.fraction_unknown},
           {"multi_span_min_events", gen.multi_span_min_events},
           {"questions_per_passage", gen.questions_per_passage}}},
         {"encoder",
          {{"layers", encoder.layers},
           {"heads", encoder.heads},
           {"hidden", encoder.hidden},
           {"ffn_dim", encoder.ffn_dim},
           {"max_positions", encoder.max_positions},
           {"vocab_size", encoder.vocab_size},
           {"dropout_rate", encoder.dropout_rate}}},
         {"training",
          {{"lr_peak", training.lr_peak},
           {"batch_size", training.batch_size},
           {"epochs", training.epochs},
           {"warmup_fraction", training.warmup_fraction},
           {"clip_norm", training.clip_norm},
           {"lambda_q", training.lambda_q},
           {"lambda_a", training.lambda_a},
           {"lambda_s", training.lambda_s},
           {"lambda_t", training.lambda_t},
           {"seed", training.seed},
           {"weight_decay", training.weight_decay},
           {"adam_beta1", training.adam_beta1},
           {"adam_beta2", training.adam_beta2},
           {"adam_epsilon", training.adam_epsilon},
           {"tag_from_single", training.tag_from_single}}},
         {"decode",
          {{"max_answer_tokens", decode.max_answer_tokens},
           {"tagger_threshold", decode.tagger_threshold},
           {"max_sentences", decode.max_sentences}}}};
  return j.dump(2);
}

}  // namespace mseqa
