#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "secpm/types.hpp"

namespace secpm {

class WriteQueue;

/// PCM timing in ns. Only tRCD, tCL and tWR gate the simplified bank model;
/// the rest are carried for reporting.
struct NvmTiming {
  double tRCD = 48;
  double tCL = 15;
  double tCWD = 13;
  double tFAW = 50;
  double tWTR = 7.5;
  double tWR = 300;

  Nanos read_latency() const { return static_cast<Nanos>(tRCD + tCL); }
  Nanos write_latency() const { return static_cast<Nanos>(tWR); }
  friend bool operator==(const NvmTiming&, const NvmTiming&) = default;
};

struct ReadResult {
  Line payload{};
  Nanos completion = 0;
};

inline constexpr std::size_t kRsrImageBytes = 20;
using RsrImage = std::array<std::uint8_t, kRsrImageBytes>;

/// Durable state after a power failure: NVM contents with every queued entry
/// applied in FIFO order, plus the ADR-backed RSR image (also mirrored into
/// its reserved line in `store`).
struct CrashSnapshot {
  std::map<Addr, Line> store;
  std::optional<RsrImage> rsr;
  Nanos timestamp = 0;

  friend bool operator==(const CrashSnapshot&, const CrashSnapshot&) = default;
};

class NvmDevice {
 public:
  static constexpr std::size_t kBanks = 16;
  static constexpr std::size_t kRanks = 2;

  explicit NvmDevice(NvmTiming timing = {}, std::uint64_t capacity_bytes = 16ULL << 30)
      : timing_(timing), capacity_(capacity_bytes) {}

  static std::size_t bank_of(Addr a) { return static_cast<std::size_t>((a / kLineBytes) % kBanks); }

  /// Pre: bank free at `now`. The line is visible to reads from `now` on;
  /// reads of the same bank wait until completion anyway.
  Nanos write(Addr address, const Line& payload, Nanos now);
  ReadResult read(Addr address, Nanos now);

  Nanos bank_busy_until(std::size_t bank) const { return busy_until_[bank]; }
  bool bank_free(std::size_t bank, Nanos now) const { return busy_until_[bank] <= now; }

  /// Untimed inspection; never-written lines read as zero.
  Line peek(Addr address) const;
  bool written(Addr address) const { return store_.count(address) != 0; }
  const std::unordered_map<Addr, Line>& contents() const { return store_; }

  /// Replace the whole store (recovery from a snapshot). Timing state resets.
  void restore(const std::map<Addr, Line>& image);

  std::uint64_t writes_issued() const { return writes_; }
  std::uint64_t reads_issued() const { return reads_; }
  const NvmTiming& timing() const { return timing_; }
  std::uint64_t capacity() const { return capacity_; }

 private:
  NvmTiming timing_;
  std::uint64_t capacity_;
  std::array<Nanos, kBanks> busy_until_{};
  std::unordered_map<Addr, Line> store_;
  std::uint64_t writes_ = 0;
  std::uint64_t reads_ = 0;
};

CrashSnapshot take_crash_snapshot(const NvmDevice& device, const WriteQueue& queue,
                                  const std::optional<RsrImage>& rsr, Addr rsr_line_address, Nanos now);

/// Flat binary image: repeated records of little-endian u64 address followed
/// by the 64-byte payload, ascending by address.
void dump_snapshot(const CrashSnapshot& snap, std::ostream& out);
CrashSnapshot load_snapshot(std::istream& in, Addr rsr_line_address);

}  // namespace secpm
