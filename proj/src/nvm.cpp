#include "secpm/nvm.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "secpm/write_queue.hpp"

namespace secpm {

Nanos NvmDevice::write(Addr address, const Line& payload, Nanos now) {
  const std::size_t bank = bank_of(address);
  if (busy_until_[bank] > now) throw std::logic_error("NVM write issued to a busy bank");
  store_[address] = payload;
  busy_until_[bank] = now + timing_.write_latency();
  ++writes_;
  return busy_until_[bank];
}

ReadResult NvmDevice::read(Addr address, Nanos now) {
  const std::size_t bank = bank_of(address);
  const Nanos start = std::max(now, busy_until_[bank]);
  busy_until_[bank] = start + timing_.read_latency();
  ++reads_;
  return {peek(address), busy_until_[bank]};
}

Line NvmDevice::peek(Addr address) const {
  auto it = store_.find(address);
  return it == store_.end() ? kZeroLine : it->second;
}

void NvmDevice::restore(const std::map<Addr, Line>& image) {
  store_.clear();
  store_.reserve(image.size());
  for (const auto& [a, l] : image) store_.emplace(a, l);
  busy_until_.fill(0);
}

CrashSnapshot take_crash_snapshot(const NvmDevice& device, const WriteQueue& queue,
                                  const std::optional<RsrImage>& rsr, Addr rsr_line_address, Nanos now) {
  CrashSnapshot snap;
  snap.timestamp = now;
  for (const auto& [a, l] : device.contents()) snap.store.emplace(a, l);
  for (const WriteQueueEntry& e : queue.entries()) snap.store[e.address] = e.payload;
  snap.rsr = rsr;
  if (rsr) {
    Line img{};
    std::copy(rsr->begin(), rsr->end(), img.begin());
    img[kRsrImageBytes] = 1;  // valid marker
    snap.store[rsr_line_address] = img;
  } else if (auto it = snap.store.find(rsr_line_address); it != snap.store.end()) {
    it->second = kZeroLine;
  }
  return snap;
}

void dump_snapshot(const CrashSnapshot& snap, std::ostream& out) {
  std::array<std::uint8_t, 8> addr{};
  for (const auto& [a, l] : snap.store) {
    store_le64(addr.data(), a);
    out.write(reinterpret_cast<const char*>(addr.data()), addr.size());
    out.write(reinterpret_cast<const char*>(l.data()), static_cast<std::streamsize>(l.size()));
  }
}

CrashSnapshot load_snapshot(std::istream& in, Addr rsr_line_address) {
  CrashSnapshot snap;
  std::array<std::uint8_t, 8 + kLineBytes> rec{};
  while (in.read(reinterpret_cast<char*>(rec.data()), rec.size())) {
    Line l;
    std::copy(rec.begin() + 8, rec.end(), l.begin());
    snap.store[load_le64(rec.data())] = l;
  }
  if (in.gcount() != 0) throw std::runtime_error("truncated snapshot record");
  if (auto it = snap.store.find(rsr_line_address); it != snap.store.end() && it->second[kRsrImageBytes] == 1) {
    RsrImage img;
    std::copy(it->second.begin(), it->second.begin() + kRsrImageBytes, img.begin());
    snap.rsr = img;
  }
  return snap;
}

}  // namespace secpm
