#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace vipsim::text {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

/// Splits on `sep`, keeping empty fields.
inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

/// Splits a list field; an empty (or blank) field yields no elements.
inline std::vector<std::string_view> split_list(std::string_view s, char sep) {
  s = trim(s);
  if (s.empty()) return {};
  auto parts = split(s, sep);
  std::vector<std::string_view> out;
  for (auto p : parts) {
    p = trim(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

/// Iterates the non-blank, non-comment lines of a stream, passing the
/// 1-based line number alongside the trimmed content.
template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    fn(lineno, t);
  }
}

}  // namespace vipsim::text
