#pragma once

#include <arpa/inet.h>

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "vipsim/error.hpp"
#include "vipsim/text.hpp"

namespace vipsim {

enum class Family : std::uint8_t { V4 = 4, V6 = 6 };

constexpr int bit_width(Family f) { return f == Family::V4 ? 32 : 128; }

/// An IPv4 or IPv6 address. IPv4 occupies the first four bytes.
struct Address {
  Family family = Family::V4;
  std::array<std::uint8_t, 16> bytes{};

  friend auto operator<=>(const Address&, const Address&) = default;

  bool bit(int i) const { return (bytes[i / 8] >> (7 - i % 8)) & 1U; }

  std::string str() const {
    char buf[INET6_ADDRSTRLEN] = {};
    inet_ntop(family == Family::V4 ? AF_INET : AF_INET6, bytes.data(), buf, sizeof buf);
    return buf;
  }
};

inline std::optional<Address> parse_address(std::string_view text) {
  std::string s(text::trim(text));
  Address a;
  if (s.find(':') != std::string::npos) {
    a.family = Family::V6;
    if (inet_pton(AF_INET6, s.c_str(), a.bytes.data()) != 1) return std::nullopt;
  } else {
    a.family = Family::V4;
    if (inet_pton(AF_INET, s.c_str(), a.bytes.data()) != 1) return std::nullopt;
  }
  return a;
}

/// Zeroes every bit of `bytes` at or beyond position `length`.
inline std::array<std::uint8_t, 16> mask_bits(std::array<std::uint8_t, 16> bytes, int length) {
  for (int i = 0; i < 16; ++i) {
    int lo = i * 8;
    if (length >= lo + 8) continue;
    if (length <= lo) {
      bytes[i] = 0;
    } else {
      bytes[i] &= static_cast<std::uint8_t>(0xffU << (8 - (length - lo)));
    }
  }
  return bytes;
}

/// A canonical address block: all host bits are zero.
class Prefix {
 public:
  Prefix() = default;

  /// Throws vipsim::Error unless `base` is canonical for `length`.
  Prefix(Address base, int length) : family_(base.family), length_(static_cast<std::uint8_t>(length)) {
    if (length < 0 || length > bit_width(base.family)) throw Error("prefix length out of range");
    if (mask_bits(base.bytes, length) != base.bytes)
      throw Error("prefix " + base.str() + "/" + std::to_string(length) + " has host bits set");
    bytes_ = base.bytes;
  }

  Family family() const { return family_; }
  int length() const { return length_; }
  Address base() const { return Address{family_, bytes_}; }
  /// Numerically lowest address of the block.
  Address lowest_address() const { return base(); }

  bool contains(const Address& a) const {
    return a.family == family_ && mask_bits(a.bytes, length_) == bytes_;
  }

  /// True when `other` lies inside this block (including equality).
  bool contains(const Prefix& other) const {
    return other.family_ == family_ && other.length_ >= length_ && mask_bits(other.bytes_, length_) == bytes_;
  }

  /// The covering prefix of this one truncated to `len` bits.
  Prefix truncated(int len) const {
    Prefix p;
    p.family_ = family_;
    p.length_ = static_cast<std::uint8_t>(len);
    p.bytes_ = mask_bits(bytes_, len);
    return p;
  }

  std::string str() const { return base().str() + "/" + std::to_string(length_); }

  friend auto operator<=>(const Prefix&, const Prefix&) = default;

 private:
  Family family_ = Family::V4;
  std::array<std::uint8_t, 16> bytes_{};
  std::uint8_t length_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, const Prefix& p) { return os << p.str(); }

/// Parses `addr/len`. Non-canonical input (host bits set) is rejected.
inline std::optional<Prefix> parse_prefix(std::string_view text) {
  text = text::trim(text);
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto addr = parse_address(text.substr(0, slash));
  if (!addr) return std::nullopt;
  auto len_text = text.substr(slash + 1);
  if (len_text.empty() || len_text.size() > 3) return std::nullopt;
  int len = 0;
  for (char c : len_text) {
    if (c < '0' || c > '9') return std::nullopt;
    len = len * 10 + (c - '0');
  }
  if (len > bit_width(addr->family)) return std::nullopt;
  if (mask_bits(addr->bytes, len) != addr->bytes) return std::nullopt;
  return Prefix(*addr, len);
}

/// Throwing variant for trusted literals and tests.
inline Prefix prefix(std::string_view text) {
  auto p = parse_prefix(text);
  if (!p) throw Error("invalid prefix: " + std::string(text));
  return *p;
}

}  // namespace vipsim
