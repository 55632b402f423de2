#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "secpm/crypto.hpp"
#include "secpm/types.hpp"

namespace secpm {

class WriteQueue;

inline constexpr std::uint8_t kMinorMax = 127;

/// Per-page split counter: one 64-bit major plus 64 seven-bit minors,
/// packed into exactly one 64-byte line.
struct CounterLine {
  std::uint64_t major = 0;
  std::array<std::uint8_t, kLinesPerPage> minors{};

  CounterValue value_for(std::size_t minor_index) const { return {major, minors[minor_index]}; }

  /// bytes 0..7 major (LE), bytes 8..63 the minors as a 448-bit LSB-first bit string
  Line serialize() const;
  static CounterLine deserialize(const Line& raw);

  friend bool operator==(const CounterLine&, const CounterLine&) = default;
};

/// Copy of `line` with one minor bumped, or nullopt when that minor is
/// already at 127 (the page must be re-encrypted first).
std::optional<CounterLine> increment_minor(const CounterLine& line, std::size_t minor_index);

struct CounterLocation {
  Addr counter_line_address = 0;
  std::size_t minor_index = 0;
  friend bool operator==(const CounterLocation&, const CounterLocation&) = default;
};

/// Physical layout: data region [0, data_pages*4K), then one counter line per
/// data page, then two metadata lines (re-encryption shadow, persisted RSR).
struct CounterAddressMap {
  Addr counter_region_base = 0;
  std::uint64_t data_pages = 0;

  static CounterAddressMap for_data_bytes(std::uint64_t data_bytes);

  Addr data_end() const { return data_pages * kPageBytes; }
  bool in_data_region(Addr a) const { return a < data_end(); }
  bool in_counter_region(Addr a) const {
    return a >= counter_region_base && a < counter_region_base + (data_pages + 2) * kLineBytes;
  }
  Addr counter_line_of_page(std::uint64_t page) const { return counter_region_base + kLineBytes * page; }
  Addr reencrypt_shadow_address() const { return counter_region_base + kLineBytes * data_pages; }
  Addr rsr_image_address() const { return reencrypt_shadow_address() + kLineBytes; }
};

CounterLocation locate_counter(const CounterAddressMap& map, Addr data_line_address);

/// Set-associative LRU counter cache.
class CounterCache {
 public:
  CounterCache(std::size_t capacity_bytes, std::size_t ways);

  std::optional<CounterLine> lookup(Addr counter_line_address);
  /// Installs or overwrites; returns the evicted entry, if any.
  struct Evicted {
    Addr address;
    CounterLine line;
    bool dirty;
  };
  std::optional<Evicted> insert(Addr counter_line_address, const CounterLine& line, bool dirty = false);
  /// Updates a resident entry in place without touching recency. Returns false on miss.
  bool update(Addr counter_line_address, const CounterLine& line, bool dirty);
  bool contains(Addr counter_line_address) const;

  /// Dirty entries (write-back mode only), in set/way order.
  std::vector<std::pair<Addr, CounterLine>> dirty_entries() const;
  void mark_all_clean();

  std::size_t capacity_lines() const { return sets_ * ways_; }
  std::size_t size() const;
  std::size_t ways() const { return ways_; }
  std::size_t sets() const { return sets_; }
  std::size_t set_index(Addr counter_line_address) const {
    return static_cast<std::size_t>((counter_line_address / kLineBytes) % sets_);
  }

  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }

 private:
  struct Way {
    bool valid = false;
    bool dirty = false;
    Addr address = 0;
    std::uint64_t last_use = 0;
    CounterLine line;
  };
  Way* find(Addr a);
  const Way* find(Addr a) const;

  std::size_t sets_;
  std::size_t ways_;
  std::vector<Way> ways_store_;
  std::uint64_t tick_ = 0;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

/// CWT: replace the cached entry and deliver the same counter line to the
/// write queue as a COUNTER entry. The caller guarantees a free slot.
void write_through(CounterCache& cache, WriteQueue& queue, Addr counter_line_address,
                   const CounterLine& updated, Nanos now);

}  // namespace secpm
