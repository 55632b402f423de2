#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace secpm {

inline constexpr std::size_t kLineBytes = 64;
inline constexpr std::size_t kPageBytes = 4096;
inline constexpr std::size_t kLinesPerPage = kPageBytes / kLineBytes;

using Addr = std::uint64_t;
using Nanos = std::int64_t;

/// One 64-byte memory line. Unit of flushes, encryption and NVM writes.
using Line = std::array<std::uint8_t, kLineBytes>;

inline constexpr Line kZeroLine{};

constexpr bool is_line_aligned(Addr a) { return a % kLineBytes == 0; }
constexpr Addr page_of(Addr a) { return a / kPageBytes; }
constexpr std::size_t line_in_page(Addr a) { return (a / kLineBytes) % kLinesPerPage; }

/// Raised for accesses outside the mapped data/counter regions.
class AddressError : public std::out_of_range {
 public:
  explicit AddressError(const std::string& what) : std::out_of_range(what) {}
};

// little-endian helpers used by every on-media layout
inline void store_le64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
inline void store_le32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
inline std::uint64_t load_le64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
inline std::uint32_t load_le32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace secpm
