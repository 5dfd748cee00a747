#include "mseqa/text.hpp"

#include <cctype>

namespace mseqa {

std::vector<size_t> utf8_scalar_starts(const std::string& s) {
  std::vector<size_t> starts;
  starts.reserve(s.size() + 1);
  size_t i = 0;
  while (i < s.size()) {
    starts.push_back(i);
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) i += 1;
    else if ((c >> 5) == 0x6) i += 2;
    else if ((c >> 4) == 0xE) i += 3;
    else if ((c >> 3) == 0x1E) i += 4;
    else i += 1;  // invalid lead byte, treat as one scalar
  }
  starts.push_back(s.size());
  return starts;
}

size_t utf8_length(const std::string& s) { return utf8_scalar_starts(s).size() - 1; }

std::string utf8_substr(const std::string& s, size_t start, size_t end) {
  const auto starts = utf8_scalar_starts(s);
  if (start > end || end >= starts.size()) return std::string();
  return s.substr(starts[start], starts[end] - starts[start]);
}

std::string to_lower_ascii(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace mseqa
