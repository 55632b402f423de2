#include "secpm/write_queue.hpp"

#include <algorithm>
#include <stdexcept>

#include "secpm/nvm.hpp"

namespace secpm {

std::size_t WriteQueue::free_slots() const {
  if (unbounded()) return SIZE_MAX;
  return capacity_ > entries_.size() ? capacity_ - entries_.size() : 0;
}

std::size_t WriteQueue::slots_needed(Addr address, Origin origin) const {
  if (origin == Origin::Counter && cwr_) {
    for (const auto& e : entries_) {
      if (e.origin == Origin::Counter && e.address == address) return 0;
    }
  }
  return 1;
}

std::size_t WriteQueue::cwr_merge(const WriteQueueEntry& incoming_counter) {
  if (incoming_counter.origin != Origin::Counter) return 0;
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const WriteQueueEntry& e) {
    return e.origin == Origin::Counter && e.address == incoming_counter.address;
  });
  if (it == entries_.end()) return 0;
  entries_.erase(it);
  ++merged_;
  return 1;
}

void WriteQueue::append(const WriteQueueEntry& entry) {
  if (cwr_ && entry.origin == Origin::Counter) cwr_merge(entry);
  if (full()) throw std::logic_error("append to a full write queue");
  entries_.push_back(entry);
  if (entry.origin == Origin::Counter) {
    ++counter_appended_;
  } else {
    ++data_appended_;
  }
}

std::optional<Line> WriteQueue::forward(Addr address, Origin origin) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->address == address && it->origin == origin) return it->payload;
  }
  return std::nullopt;
}

WriteQueueEntry WriteQueue::pop_front() {
  WriteQueueEntry e = entries_.front();
  entries_.pop_front();
  ++drained_;
  return e;
}

void atomic_append_pair(WriteQueue& queue, StagingRegister& reg, Nanos now) {
  if (!reg.data_slot || !reg.counter_slot) {
    throw std::logic_error("staging register must hold both the data line and its counter line");
  }
  const Addr caddr = reg.counter_slot->first;
  const std::size_t need = 1 + queue.slots_needed(caddr, Origin::Counter);
  if (!queue.unbounded() && queue.free_slots() < need) {
    throw std::logic_error("write queue lacks room for an atomic pair");
  }
  // append() merges the counter before checking capacity, so a full queue
  // with a stale copy of this counter still admits the pair.
  queue.append(WriteQueueEntry{reg.data_slot->first, reg.data_slot->second, Origin::Data, now});
  queue.append(WriteQueueEntry{caddr, reg.counter_slot->second.serialize(), Origin::Counter, now});
  reg.clear();
}

std::optional<WriteQueueEntry> drain_one(WriteQueue& queue, NvmDevice& nvm, Nanos now) {
  if (queue.empty()) return std::nullopt;
  if (!nvm.bank_free(NvmDevice::bank_of(queue.front().address), now)) return std::nullopt;
  WriteQueueEntry e = queue.pop_front();
  nvm.write(e.address, e.payload, now);
  return e;
}

}  // namespace secpm
