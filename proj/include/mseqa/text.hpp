#ifndef MSEQA_TEXT_HPP
#define MSEQA_TEXT_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace mseqa {

// All char offsets in the project count Unicode scalar values, not bytes.
// The byte index of each scalar (plus one past-the-end entry) is enough to
// slice any scalar range out of the UTF-8 buffer.
std::vector<size_t> utf8_scalar_starts(const std::string& s);

// Number of Unicode scalar values in s.
size_t utf8_length(const std::string& s);

// Substring [start, end) in scalar-value coordinates.
std::string utf8_substr(const std::string& s, size_t start, size_t end);

std::string to_lower_ascii(std::string s);

// Split on runs of whitespace.
std::vector<std::string> split_ws(const std::string& s);

}  // namespace mseqa

#endif
