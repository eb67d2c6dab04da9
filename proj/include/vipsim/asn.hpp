#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace vipsim {

/// Autonomous system number. Always non-zero.
struct Asn {
  std::uint32_t value = 0;

  constexpr Asn() = default;
  constexpr explicit Asn(std::uint32_t v) : value(v) {}

  friend constexpr auto operator<=>(Asn, Asn) = default;

  std::string str() const { return std::to_string(value); }
};

inline std::ostream& operator<<(std::ostream& os, Asn a) { return os << a.value; }

/// Parses a decimal ASN in [1, 2^32-1]. Leading/trailing blanks are tolerated.
inline std::optional<Asn> parse_asn(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  if (v == 0 || v > 0xffffffffULL) return std::nullopt;
  return Asn(static_cast<std::uint32_t>(v));
}

}  // namespace vipsim

template <>
struct std::hash<vipsim::Asn> {
  std::size_t operator()(vipsim::Asn a) const noexcept { return std::hash<std::uint32_t>{}(a.value); }
};
