#include "secpm/controller.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace secpm {

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::UnsecPm: return "unsec-pm";
    case Mode::SecPmNoCwt: return "secpm-no-cwt";
    case Mode::SecPmNoCwr: return "secpm-no-cwr";
    case Mode::SecPm: return "secpm";
  }
  return "?";
}

std::optional<Mode> parse_mode(std::string_view s) {
  for (Mode m : {Mode::UnsecPm, Mode::SecPmNoCwt, Mode::SecPmNoCwr, Mode::SecPm}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

std::string_view to_string(Boundary b) {
  switch (b) {
    case Boundary::RegisterStore: return "register-store";
    case Boundary::QueueAppend: return "queue-append";
    case Boundary::Drain: return "drain";
    case Boundary::Fence: return "fence";
    case Boundary::RsrUpdate: return "rsr-update";
  }
  return "?";
}

std::string_view to_string(DrainPolicy p) {
  switch (p) {
    case DrainPolicy::Eager: return "eager";
    case DrainPolicy::OnDemand: return "on-demand";
    case DrainPolicy::Idle: return "idle";
  }
  return "?";
}

std::optional<DrainPolicy> parse_drain_policy(std::string_view s) {
  for (DrainPolicy p : {DrainPolicy::Eager, DrainPolicy::OnDemand, DrainPolicy::Idle}) {
    if (s == to_string(p)) return p;
  }
  return std::nullopt;
}

RsrImage Rsr::serialize() const {
  RsrImage img{};
  store_le32(img.data(), page);
  store_le64(img.data() + 4, old_major);
  store_le64(img.data() + 12, done_bits);
  return img;
}

Rsr Rsr::deserialize(const RsrImage& image) {
  Rsr r;
  r.page = load_le32(image.data());
  r.old_major = load_le64(image.data() + 4);
  r.done_bits = load_le64(image.data() + 12);
  r.active = true;
  return r;
}

Controller::Controller(ControllerConfig cfg, const EncryptionKey& key)
    : cfg_(cfg),
      map_(CounterAddressMap::for_data_bytes(cfg.data_bytes)),
      otp_(key),
      cache_(cfg.counter_cache_bytes, cfg.counter_cache_ways),
      queue_(cfg.queue_capacity, cfg.mode == Mode::SecPm),
      nvm_(cfg.timing, cfg.nvm_capacity) {}

Controller Controller::recover_from(const ControllerConfig& cfg, const EncryptionKey& key,
                                    const CrashSnapshot& snapshot) {
  Controller c(cfg, key);
  c.nvm_.restore(snapshot.store);
  if (snapshot.rsr) {
    c.rsr_ = Rsr::deserialize(*snapshot.rsr);
    const CounterLine shadow = CounterLine::deserialize(c.nvm_.peek(c.map_.reencrypt_shadow_address()));
    if (shadow.major != c.rsr_.old_major) {
      throw std::runtime_error("re-encryption shadow line does not match the persisted RSR");
    }
    c.rsr_old_minors_ = shadow.minors;
  }
  c.quiesce(snapshot.timestamp);
  return c;
}

void Controller::check_data_address(Addr a) const {
  if (!is_line_aligned(a) || !map_.in_data_region(a)) {
    std::ostringstream os;
    os << "unmapped or unaligned data address 0x" << std::hex << a;
    throw AddressError(os.str());
  }
}

void Controller::mark(Boundary b, Addr a, Nanos t) {
  ++counters_.boundary_events;
  if (event_log_) *event_log_ << t << ' ' << to_string(b) << " 0x" << std::hex << a << std::dec << '\n';
  if (hook_) hook_(b, t);
}

Nanos Controller::next_drain_time() const {
  const WriteQueueEntry& head = queue_.front();
  return std::max({head.enqueue_time, nvm_.bank_busy_until(NvmDevice::bank_of(head.address)), last_issue_});
}

void Controller::drain_until(Nanos floor, Nanos t) {
  while (!queue_.empty()) {
    const Nanos issue = std::max(next_drain_time(), floor);
    if (issue > t) break;
    drain_head(issue);
  }
}

void Controller::advance(Nanos t) {
  if (cfg_.drain == DrainPolicy::Eager) drain_until(0, t);
}

void Controller::on_request(Nanos t) {
  if (cfg_.drain == DrainPolicy::Eager) drain_until(0, t);
  else if (cfg_.drain == DrainPolicy::Idle && t > busy_until_) drain_until(busy_until_, t);
}

Nanos Controller::drain_head(Nanos floor) {
  const Nanos issue = std::max(next_drain_time(), floor);
  auto e = drain_one(queue_, nvm_, issue);
  last_issue_ = issue;
  mark(Boundary::Drain, e->address, issue);
  return issue;
}

Nanos Controller::wait_for_slots(std::size_t n, Nanos t) {
  advance(t);
  while (queue_.free_slots() < n) t = drain_head(t);
  return t;
}

Nanos Controller::wait_for_pair(Addr counter_address, Nanos t) {
  advance(t);
  while (queue_.free_slots() < 1 + queue_.slots_needed(counter_address, Origin::Counter)) t = drain_head(t);
  return t;
}

Controller::Fetched Controller::fetch_counter(Addr caddr, Nanos t) {
  const Nanos hit = cfg_.counter_hit_ns();
  if (auto c = cache_.lookup(caddr)) return {*c, t + hit};
  Fetched f;
  if (auto fwd = queue_.forward(caddr, Origin::Counter)) {
    f = {CounterLine::deserialize(*fwd), t + hit};
  } else {
    ReadResult r = nvm_.read(caddr, t + hit);
    f = {CounterLine::deserialize(r.payload), r.completion};
  }
  if (auto ev = cache_.insert(caddr, f.line, false); ev && ev->dirty) {
    // write-back counter cache (no CWT): dirty victims go to the queue
    f.ready = wait_for_slots(queue_.slots_needed(ev->address, Origin::Counter), f.ready);
    queue_.append(WriteQueueEntry{ev->address, ev->line.serialize(), Origin::Counter, f.ready});
    ++counters_.counter_writebacks;
    mark(Boundary::QueueAppend, ev->address, f.ready);
  }
  return f;
}

ReadResult Controller::fetch_data(Addr address, Nanos t) {
  if (auto fwd = queue_.forward(address, Origin::Data)) return {*fwd, t};
  return nvm_.read(address, t);
}

Pad Controller::encryption_pad(Addr address, CounterValue ctr) {
  const OtpInput in{address, ctr};
  if (otp_log_) otp_log_->push_back(in);
  return otp_.generate(in);
}

Line Controller::decrypt_at(Addr address, CounterValue ctr, const Line& ciphertext) const {
  // counter (0,0) is never used to encrypt: the line is still zero-initialised
  if (ctr.major == 0 && ctr.minor == 0) return kZeroLine;
  return decrypt_line(ciphertext, otp_.generate(OtpInput{address, ctr}));
}

Nanos Controller::persist(Addr address, const Line& ciphertext, Addr caddr, const CounterLine& updated, Nanos t,
                          const std::function<void()>& on_commit) {
  switch (cfg_.mode) {
    case Mode::UnsecPm:
      throw std::logic_error("persist() is for encrypted modes");
    case Mode::SecPmNoCwt: {
      cache_.update(caddr, updated, true);
      t += cfg_.aes_ns;
      t = wait_for_slots(1, t);
      queue_.append(WriteQueueEntry{address, ciphertext, Origin::Data, t});
      if (on_commit) on_commit();
      mark(Boundary::QueueAppend, address, t);
      return t;
    }
    case Mode::SecPmNoCwr:
    case Mode::SecPm:
      break;
  }
  if (cfg_.staging_register) {
    register_.counter_slot = {caddr, updated};
    cache_.update(caddr, updated, false);
    mark(Boundary::RegisterStore, caddr, t);
    t += cfg_.aes_ns;
    register_.data_slot = {address, ciphertext};
    mark(Boundary::RegisterStore, address, t);
    t = wait_for_pair(caddr, t);
    atomic_append_pair(queue_, register_, t);
    if (on_commit) on_commit();
    mark(Boundary::QueueAppend, address, t);
    return t;
  }
  // counter goes out during encryption, data after it
  t = wait_for_slots(queue_.slots_needed(caddr, Origin::Counter), t);
  write_through(cache_, queue_, caddr, updated, t);
  mark(Boundary::QueueAppend, caddr, t);
  t += cfg_.aes_ns;
  t = wait_for_slots(1, t);
  queue_.append(WriteQueueEntry{address, ciphertext, Origin::Data, t});
  if (on_commit) on_commit();
  mark(Boundary::QueueAppend, address, t);
  return t;
}

Nanos Controller::handle_flush(Addr address, const Line& plaintext, Nanos now) {
  check_data_address(address);
  Nanos t = std::max(now, pipeline_free_);
  on_request(t);
  ++counters_.flushes;

  if (cfg_.mode == Mode::UnsecPm) {
    t = wait_for_slots(1, t);
    queue_.append(WriteQueueEntry{address, plaintext, Origin::Data, t});
    mark(Boundary::QueueAppend, address, t);
    pipeline_free_ = t;
    busy_until_ = std::max(busy_until_, t);
    return t;
  }

  const CounterLocation loc = locate_counter(map_, address);
  const std::uint64_t page = page_of(address);
  if (rsr_.active && rsr_.page == page && !rsr_.done(loc.minor_index)) {
    t = reencrypt_line(loc.minor_index, t);
  }
  Fetched f = fetch_counter(loc.counter_line_address, t);
  t = f.ready;
  std::optional<CounterLine> next = increment_minor(f.line, loc.minor_index);
  if (!next) {
    t = reencrypt_page(page, t);
    f = fetch_counter(loc.counter_line_address, t);
    t = f.ready;
    next = increment_minor(f.line, loc.minor_index);
  }
  const Line ciphertext = encrypt_line(plaintext, encryption_pad(address, next->value_for(loc.minor_index)));
  t = persist(address, ciphertext, loc.counter_line_address, *next, t);
  pipeline_free_ = t;
  busy_until_ = std::max(busy_until_, t);
  return t;
}

ReadResult Controller::handle_read(Addr address, Nanos now) {
  check_data_address(address);
  on_request(now);
  ++counters_.reads;
  ReadResult r = read_path(address, now);
  busy_until_ = std::max(busy_until_, r.completion);
  return r;
}

ReadResult Controller::read_path(Addr address, Nanos now) {
  if (cfg_.mode == Mode::UnsecPm) return fetch_data(address, now);

  Nanos t = now;
  const CounterLocation loc = locate_counter(map_, address);
  if (rsr_.active && rsr_.page == page_of(address) && !rsr_.done(loc.minor_index)) {
    t = reencrypt_line(loc.minor_index, t);
  }
  // the OTP is computed while the data read is in flight
  const Fetched f = fetch_counter(loc.counter_line_address, t);
  const ReadResult d = fetch_data(address, t);
  const Nanos completion = std::max(d.completion, f.ready + cfg_.aes_ns);
  return {decrypt_at(address, f.line.value_for(loc.minor_index), d.payload), completion};
}

Nanos Controller::fence(Nanos now) {
  mark(Boundary::Fence, 0, now);
  return now;
}

CounterLine Controller::reencryption_target(const CounterLine& current) const {
  if (current.major != rsr_.old_major) return current;
  CounterLine fresh;
  fresh.major = rsr_.old_major + 1;
  return fresh;
}

Nanos Controller::begin_reencryption(std::uint64_t page, Nanos now) {
  if (!is_secure(cfg_.mode)) throw std::logic_error("re-encryption requires an encrypted mode");
  if (page >= map_.data_pages) throw AddressError("re-encryption of an unmapped page");
  Nanos t = now;
  if (rsr_.active) t = finish_reencryption(t);
  const Addr caddr = map_.counter_line_of_page(page);
  const Fetched f = fetch_counter(caddr, t);
  t = f.ready;
  // durable copy of the pre-reset minors, needed to decrypt not-yet-done lines after a crash
  const Addr shadow = map_.reencrypt_shadow_address();
  t = wait_for_slots(queue_.slots_needed(shadow, Origin::Counter), t);
  queue_.append(WriteQueueEntry{shadow, f.line.serialize(), Origin::Counter, t});
  ++counters_.reencryption_appends;
  mark(Boundary::QueueAppend, shadow, t);

  rsr_ = Rsr{static_cast<std::uint32_t>(page), f.line.major, 0, true};
  rsr_old_minors_ = f.line.minors;
  ++counters_.reencryptions;
  mark(Boundary::RsrUpdate, caddr, t);
  return t;
}

Nanos Controller::reencrypt_line(std::size_t idx, Nanos now) {
  if (!rsr_.active) throw std::logic_error("no page re-encryption in progress");
  if (rsr_.done(idx)) return now;
  const Addr address = static_cast<Addr>(rsr_.page) * kPageBytes + idx * kLineBytes;
  const Addr caddr = map_.counter_line_of_page(rsr_.page);

  const ReadResult d = fetch_data(address, now);
  const Line plain = decrypt_at(address, {rsr_.old_major, rsr_old_minors_[idx]}, d.payload);
  Nanos t = std::max(d.completion, now + cfg_.aes_ns);

  const Fetched f = fetch_counter(caddr, t);
  t = f.ready;
  const CounterLine target = reencryption_target(f.line);
  const Line ciphertext = encrypt_line(plain, encryption_pad(address, target.value_for(idx)));
  const std::uint64_t before = queue_.data_appended() + queue_.counter_appended();
  t = persist(address, ciphertext, caddr, target, t, [&] { rsr_.done_bits |= 1ULL << idx; });
  counters_.reencryption_appends += queue_.data_appended() + queue_.counter_appended() - before;

  if (rsr_.complete()) {
    rsr_.active = false;
    mark(Boundary::RsrUpdate, caddr, t);
  }
  return t;
}

Nanos Controller::finish_reencryption(Nanos now) {
  Nanos t = now;
  for (std::size_t i = 0; rsr_.active && i < kLinesPerPage; ++i) t = reencrypt_line(i, t);
  return t;
}

Nanos Controller::reencrypt_page(std::uint64_t page, Nanos now) {
  Nanos t = begin_reencryption(page, now);
  return finish_reencryption(t);
}

Nanos Controller::quiesce(Nanos now) {
  Nanos t = std::max(now, pipeline_free_);
  advance(t);
  t = finish_reencryption(t);
  if (cfg_.mode == Mode::SecPmNoCwt) {
    for (const auto& [caddr, line] : cache_.dirty_entries()) {
      t = wait_for_slots(queue_.slots_needed(caddr, Origin::Counter), t);
      queue_.append(WriteQueueEntry{caddr, line.serialize(), Origin::Counter, t});
      ++counters_.counter_writebacks;
      mark(Boundary::QueueAppend, caddr, t);
    }
    cache_.mark_all_clean();
  }
  while (!queue_.empty()) t = drain_head(t);
  Nanos done = t;
  for (std::size_t b = 0; b < NvmDevice::kBanks; ++b) done = std::max(done, nvm_.bank_busy_until(b));
  pipeline_free_ = std::max(pipeline_free_, t);
  busy_until_ = std::max(busy_until_, t);
  return done;
}

CrashSnapshot Controller::crash_snapshot(Nanos now) const {
  std::optional<RsrImage> img;
  if (rsr_.active) img = rsr_.serialize();
  return take_crash_snapshot(nvm_, queue_, img, map_.rsr_image_address(), now);
}

CounterLine Controller::durable_counter_line(std::uint64_t page) const {
  const Addr caddr = map_.counter_line_of_page(page);
  if (auto fwd = queue_.forward(caddr, Origin::Counter)) return CounterLine::deserialize(*fwd);
  return CounterLine::deserialize(nvm_.peek(caddr));
}

}  // namespace secpm
