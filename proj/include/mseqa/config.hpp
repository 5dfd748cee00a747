#ifndef MSEQA_CONFIG_HPP
#define MSEQA_CONFIG_HPP

#include <string>

#include "mseqa/corpus.hpp"
#include "mseqa/encoder.hpp"
#include "mseqa/inference.hpp"
#include "mseqa/training.hpp"

namespace mseqa {

// One config file drives every subcommand; sections are optional and default
// to the module defaults. Unknown keys anywhere are errors.
struct RunConfig {
  int version = 1;
  GenConfig gen;
  EncoderConfig encoder;
  TrainingConfig training;
  DecodeConfig decode;

  void validate() const;
  std::string to_json() const;  // effective config with defaults applied
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

}  // namespace mseqa

#endif
