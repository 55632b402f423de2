#include "secpm/counters.hpp"

#include <algorithm>
#include <sstream>

#include "secpm/write_queue.hpp"

namespace secpm {

Line CounterLine::serialize() const {
  Line out{};
  store_le64(out.data(), major);
  for (std::size_t i = 0; i < kLinesPerPage; ++i) {
    const std::size_t bit = 64 + 7 * i;
    for (std::size_t b = 0; b < 7; ++b) {
      if ((minors[i] >> b) & 1U) {
        const std::size_t pos = bit + b;
        out[pos / 8] |= static_cast<std::uint8_t>(1U << (pos % 8));
      }
    }
  }
  return out;
}

CounterLine CounterLine::deserialize(const Line& raw) {
  CounterLine c;
  c.major = load_le64(raw.data());
  for (std::size_t i = 0; i < kLinesPerPage; ++i) {
    const std::size_t bit = 64 + 7 * i;
    std::uint8_t v = 0;
    for (std::size_t b = 0; b < 7; ++b) {
      const std::size_t pos = bit + b;
      v |= static_cast<std::uint8_t>(((raw[pos / 8] >> (pos % 8)) & 1U) << b);
    }
    c.minors[i] = v;
  }
  return c;
}

std::optional<CounterLine> increment_minor(const CounterLine& line, std::size_t minor_index) {
  if (line.minors.at(minor_index) >= kMinorMax) return std::nullopt;
  CounterLine next = line;
  ++next.minors[minor_index];
  return next;
}

CounterAddressMap CounterAddressMap::for_data_bytes(std::uint64_t data_bytes) {
  CounterAddressMap m;
  m.data_pages = (data_bytes + kPageBytes - 1) / kPageBytes;
  m.counter_region_base = m.data_pages * kPageBytes;
  return m;
}

CounterLocation locate_counter(const CounterAddressMap& map, Addr data_line_address) {
  if (!is_line_aligned(data_line_address) || !map.in_data_region(data_line_address)) {
    std::ostringstream os;
    os << "address 0x" << std::hex << data_line_address << " is not an aligned data-region line";
    throw AddressError(os.str());
  }
  return {map.counter_line_of_page(page_of(data_line_address)), line_in_page(data_line_address)};
}

CounterCache::CounterCache(std::size_t capacity_bytes, std::size_t ways) : ways_(ways) {
  if (ways == 0 || capacity_bytes < ways * kLineBytes) {
    throw std::invalid_argument("counter cache must hold at least one full set");
  }
  sets_ = capacity_bytes / kLineBytes / ways;
  ways_store_.resize(sets_ * ways_);
}

CounterCache::Way* CounterCache::find(Addr a) {
  const std::size_t s = set_index(a);
  for (std::size_t w = 0; w < ways_; ++w) {
    Way& way = ways_store_[s * ways_ + w];
    if (way.valid && way.address == a) return &way;
  }
  return nullptr;
}

const CounterCache::Way* CounterCache::find(Addr a) const {
  return const_cast<CounterCache*>(this)->find(a);
}

std::optional<CounterLine> CounterCache::lookup(Addr counter_line_address) {
  if (Way* w = find(counter_line_address)) {
    ++hits_;
    w->last_use = ++tick_;
    return w->line;
  }
  ++misses_;
  return std::nullopt;
}

bool CounterCache::contains(Addr counter_line_address) const { return find(counter_line_address) != nullptr; }

std::optional<CounterCache::Evicted> CounterCache::insert(Addr a, const CounterLine& line, bool dirty) {
  if (Way* w = find(a)) {
    w->line = line;
    w->dirty = w->dirty || dirty;
    w->last_use = ++tick_;
    return std::nullopt;
  }
  const std::size_t s = set_index(a);
  Way* victim = nullptr;
  for (std::size_t w = 0; w < ways_; ++w) {
    Way& way = ways_store_[s * ways_ + w];
    if (!way.valid) {
      victim = &way;
      break;
    }
    if (!victim || way.last_use < victim->last_use) victim = &way;
  }
  std::optional<Evicted> out;
  if (victim->valid) out = Evicted{victim->address, victim->line, victim->dirty};
  *victim = Way{true, dirty, a, ++tick_, line};
  return out;
}

bool CounterCache::update(Addr a, const CounterLine& line, bool dirty) {
  Way* w = find(a);
  if (!w) return false;
  w->line = line;
  w->dirty = w->dirty || dirty;
  return true;
}

std::vector<std::pair<Addr, CounterLine>> CounterCache::dirty_entries() const {
  std::vector<std::pair<Addr, CounterLine>> out;
  for (const Way& w : ways_store_) {
    if (w.valid && w.dirty) out.emplace_back(w.address, w.line);
  }
  return out;
}

void CounterCache::mark_all_clean() {
  for (Way& w : ways_store_) w.dirty = false;
}

std::size_t CounterCache::size() const {
  return static_cast<std::size_t>(
      std::count_if(ways_store_.begin(), ways_store_.end(), [](const Way& w) { return w.valid; }));
}

void write_through(CounterCache& cache, WriteQueue& queue, Addr counter_line_address,
                   const CounterLine& updated, Nanos now) {
  if (!cache.update(counter_line_address, updated, false)) cache.insert(counter_line_address, updated, false);
  queue.append(WriteQueueEntry{counter_line_address, updated.serialize(), Origin::Counter, now});
}

}  // namespace secpm
