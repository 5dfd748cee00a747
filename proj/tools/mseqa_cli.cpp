#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mseqa/config.hpp"
#include "mseqa/corpus.hpp"
#include "mseqa/errors.hpp"
#include "mseqa/inference.hpp"
#include "mseqa/metrics.hpp"
#include "mseqa/model.hpp"
#include "mseqa/training.hpp"

namespace {

using namespace mseqa;
using nlohmann::json;

int cmd_gen_data(const std::string& config_path, uint64_t seed, bool seed_set,
                 const std::string& out_path) {
  RunConfig cfg = load_run_config(config_path);
  if (seed_set) cfg.gen.seed = seed;
  const Dataset ds = build_dataset(default_catalog(), cfg.gen);
  save_dataset_jsonl(ds, cfg.gen, out_path);
  std::cerr << "gen-data: wrote " << ds.passages.size() << " passages, " << ds.qapairs.size()
            << " questions to " << out_path << "\n";
  return 0;
}

int cmd_stats(const std::string& data_path) {
  const Dataset ds = load_dataset_jsonl(data_path);
  json j = json::object();
  for (const auto& [prefix, count] : question_prefix_stats(ds)) j[prefix] = count;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_train(const std::string& data_path, const std::string& config_path,
              const std::string& ckpt_path, const std::string& log_path) {
  RunConfig cfg = load_run_config(config_path);
  const Dataset ds = load_dataset_jsonl(data_path);
  const TrainResult result = train(ds, cfg.encoder, cfg.training, log_path);
  save_checkpoint(result.best, ckpt_path);
  std::cerr << "train: best epoch " << result.best_epoch << ", skipped "
            << result.skipped_examples << " examples, checkpoint at " << ckpt_path << "\n";
  return 0;
}

int cmd_eval(const std::string& data_path, const std::string& ckpt_path,
             const std::string& report_path, const std::string& split_name) {
  const Dataset ds = load_dataset_jsonl(data_path);
  const Model model = load_checkpoint(ckpt_path);
  Split split = Split::test;
  if (split_name == "train") split = Split::train;
  else if (split_name == "val" || split_name == "validation") split = Split::validation;
  else if (split_name != "test") throw ConfigError("eval: unknown split '" + split_name + "'");
  const EvalReport rep = evaluate(ds, split, model_predictor(model, DecodeConfig{}));
  const std::string body = rep.to_json();
  if (report_path.empty() || report_path == "-") {
    std::cout << body << "\n";
  } else {
    std::ofstream out(report_path);
    if (!out) throw DataError("eval: cannot write " + report_path);
    out << body << "\n";
  }
  std::cerr << "eval: " << rep.n_examples << " examples, overall F1 " << rep.overall.f1 << "\n";
  return 0;
}

json answer_to_json(const Answer& ans) {
  const char* kind = "span";
  switch (ans.kind) {
    case Answer::Kind::span: kind = "span"; break;
    case Answer::Kind::multi_span: kind = "multi_span"; break;
    case Answer::Kind::yes: kind = "yes"; break;
    case Answer::Kind::no_: kind = "no"; break;
    case Answer::Kind::unknown: kind = "unknown"; break;
  }
  json spans = json::array();
  for (const auto& s : ans.spans)
    spans.push_back({{"text", s.text}, {"char_start", s.char_start}, {"char_end", s.char_end}});
  return json{{"kind", kind}, {"spans", spans}, {"confidence", ans.confidence}};
}

int cmd_ask(const std::string& ckpt_path, const std::string& passage_path,
            const std::string& question) {
  const Model model = load_checkpoint(ckpt_path);
  const Dataset ds = load_dataset_jsonl(passage_path);
  if (ds.passages.empty()) throw DataError("ask: no passages in " + passage_path);
  const Passage& passage = ds.passages.front();
  const DecodeConfig dcfg;
  auto answer_one = [&](const std::string& q) {
    std::cout << answer_to_json(answer(model, passage, q, dcfg)).dump() << "\n";
  };
  if (!question.empty()) {
    answer_one(question);
    return 0;
  }
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    answer_one(line);
  }
  return 0;
}

int cmd_validate(const std::string& data_path) {
  const auto violations = validate_dataset(data_path);
  for (const auto& v : violations) std::cout << v << "\n";
  std::cerr << "validate: " << violations.size() << " violation(s)\n";
  return violations.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MSEQA: multi-span extraction question answering"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_path, ckpt_path, log_path, report_path, question;
  std::string split_name = "test";
  uint64_t seed = 0;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic SmartHome dataset");
  gen->add_option("--config", config_path, "Run config JSON")->required();
  auto* seed_opt = gen->add_option("--seed", seed, "Override gen.seed");
  gen->add_option("--out", out_path, "Output JSONL path")->required();

  auto* stats = app.add_subcommand("stats", "Question trigram-prefix histogram as JSON");
  stats->add_option("--data", data_path, "Dataset JSONL")->required();

  auto* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("--data", data_path, "Dataset JSONL")->required();
  tr->add_option("--config", config_path, "Run config JSON")->required();
  tr->add_option("--out", ckpt_path, "Checkpoint output path")->required();
  tr->add_option("--log", log_path, "Training log JSONL path");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--data", data_path, "Dataset JSONL")->required();
  ev->add_option("--ckpt", ckpt_path, "Checkpoint path")->required();
  ev->add_option("--report", report_path, "Report JSON path ('-' = stdout)");
  ev->add_option("--split", split_name, "train|val|test (default test)");

  auto* ask = app.add_subcommand("ask", "Answer questions about the first passage in a file");
  ask->add_option("--ckpt", ckpt_path, "Checkpoint path")->required();
  ask->add_option("--passage-file", data_path, "Dataset JSONL with the passage")->required();
  ask->add_option("--question", question, "One-shot question (omit for a REPL)");

  auto* val = app.add_subcommand("validate", "Re-check all dataset invariants");
  val->add_option("--data", data_path, "Dataset JSONL")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);  // CLI11 prints the one-line message; nonzero on error
  }

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, seed, seed_opt->count() > 0, out_path);
    if (stats->parsed()) return cmd_stats(data_path);
    if (tr->parsed()) return cmd_train(data_path, config_path, ckpt_path, log_path);
    if (ev->parsed()) return cmd_eval(data_path, ckpt_path, report_path, split_name);
    if (ask->parsed()) return cmd_ask(ckpt_path, data_path, question);
    if (val->parsed()) return cmd_validate(data_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
