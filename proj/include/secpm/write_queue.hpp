#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <utility>

#include "secpm/counters.hpp"
#include "secpm/types.hpp"

namespace secpm {

class NvmDevice;

/// One-bit origin flag carried by every queue entry. CWR scans only COUNTER entries.
enum class Origin : std::uint8_t { Data, Counter };

struct WriteQueueEntry {
  Addr address = 0;
  Line payload{};
  Origin origin = Origin::Data;
  Nanos enqueue_time = 0;

  friend bool operator==(const WriteQueueEntry&, const WriteQueueEntry&) = default;
};

/// ADR-backed memory-controller write queue. Everything appended here is durable.
class WriteQueue {
 public:
  /// capacity 0 means unbounded.
  WriteQueue(std::size_t capacity, bool cwr_enabled) : capacity_(capacity), cwr_(cwr_enabled) {}

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t capacity() const { return capacity_; }
  bool unbounded() const { return capacity_ == 0; }
  bool cwr_enabled() const { return cwr_; }
  std::size_t free_slots() const;
  bool full() const { return !unbounded() && entries_.size() >= capacity_; }

  /// Appends at the tail, merging first when CWR applies. Throws if full:
  /// the caller is responsible for stalling.
  void append(const WriteQueueEntry& entry);

  /// Removes the co-resident COUNTER entry with the incoming address, if any.
  std::size_t cwr_merge(const WriteQueueEntry& incoming_counter);

  /// Slots an append of `origin` at `address` would consume after merging.
  std::size_t slots_needed(Addr address, Origin origin) const;

  /// Newest queued payload for the address (read forwarding).
  std::optional<Line> forward(Addr address, Origin origin) const;

  const std::deque<WriteQueueEntry>& entries() const { return entries_; }
  const WriteQueueEntry& front() const { return entries_.front(); }
  WriteQueueEntry pop_front();

  std::uint64_t data_appended() const { return data_appended_; }
  std::uint64_t counter_appended() const { return counter_appended_; }
  std::uint64_t merged() const { return merged_; }
  std::uint64_t drained() const { return drained_; }

 private:
  std::size_t capacity_;
  bool cwr_;
  std::deque<WriteQueueEntry> entries_;
  std::uint64_t data_appended_ = 0;
  std::uint64_t counter_appended_ = 0;
  std::uint64_t merged_ = 0;
  std::uint64_t drained_ = 0;
};

/// Two-line volatile buffer in front of the queue. Lost on crash.
struct StagingRegister {
  std::optional<std::pair<Addr, Line>> data_slot;
  std::optional<std::pair<Addr, CounterLine>> counter_slot;

  bool empty() const { return !data_slot && !counter_slot; }
  void clear() {
    data_slot.reset();
    counter_slot.reset();
  }
};

/// Moves both staged lines into the queue as one indivisible step
/// (data first, then its counter) and clears the register. Throws
/// std::logic_error if either slot is empty or the pair does not fit.
void atomic_append_pair(WriteQueue& queue, StagingRegister& reg, Nanos now);

/// Pops the head if its bank is free at `now` and writes it to NVM.
std::optional<WriteQueueEntry> drain_one(WriteQueue& queue, NvmDevice& nvm, Nanos now);

}  // namespace secpm
