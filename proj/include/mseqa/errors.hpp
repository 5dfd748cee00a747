#ifndef MSEQA_ERRORS_HPP
#define MSEQA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mseqa {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& m) : std::runtime_error(m) {}
};

// A gold span that cannot be mapped to token coordinates (truncated away).
struct UnmappableSpanError : std::runtime_error {
  explicit UnmappableSpanError(const std::string& m) : std::runtime_error(m) {}
};

struct TrainingDivergenceError : std::runtime_error {
  explicit TrainingDivergenceError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace mseqa

#endif
