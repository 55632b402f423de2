#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "secpm/counters.hpp"
#include "secpm/crypto.hpp"
#include "secpm/nvm.hpp"
#include "secpm/write_queue.hpp"

namespace secpm {

enum class Mode { UnsecPm, SecPmNoCwt, SecPmNoCwr, SecPm };

std::string_view to_string(Mode m);
std::optional<Mode> parse_mode(std::string_view s);
inline bool is_secure(Mode m) { return m != Mode::UnsecPm; }
inline bool uses_write_through(Mode m) { return m == Mode::SecPmNoCwr || m == Mode::SecPm; }

/// Re-encryption status register. Serialized image: u32 page, u64 old major,
/// u64 done bits (little-endian), 20 bytes total.
struct Rsr {
  std::uint32_t page = 0;
  std::uint64_t old_major = 0;
  std::uint64_t done_bits = 0;
  bool active = false;

  bool done(std::size_t line) const { return (done_bits >> line) & 1ULL; }
  bool complete() const { return done_bits == ~0ULL; }
  RsrImage serialize() const;
  static Rsr deserialize(const RsrImage& image);
};

/// When queued writes go to NVM. FIFO order and per-bank blocking hold under
/// every policy.
///  - Eager: the head issues as soon as its bank is free.
///  - OnDemand: writes issue only when an append needs room (or on quiesce).
///  - Idle: OnDemand, plus eager draining while no request is in flight.
enum class DrainPolicy { Eager, OnDemand, Idle };
std::string_view to_string(DrainPolicy p);
std::optional<DrainPolicy> parse_drain_policy(std::string_view s);

/// Durability-relevant state changes. A crash point sits after any of these.
enum class Boundary { RegisterStore, QueueAppend, Drain, Fence, RsrUpdate };
std::string_view to_string(Boundary b);

struct ControllerConfig {
  Mode mode = Mode::SecPm;
  /// Stage data and counter and append them as one pair when true; when
  /// false the counter is appended while the data is still being encrypted.
  bool staging_register = true;
  std::size_t queue_capacity = 32;  // 0 = unbounded
  DrainPolicy drain = DrainPolicy::Idle;
  std::size_t counter_cache_bytes = 1 << 20;
  std::size_t counter_cache_ways = 8;
  NvmTiming timing;
  Nanos aes_ns = 40;
  unsigned counter_cache_hit_cycles = 12;
  double cpu_ghz = 2.0;
  std::uint64_t data_bytes = 1ULL << 30;
  std::uint64_t nvm_capacity = 16ULL << 30;

  Nanos counter_hit_ns() const { return std::llround(counter_cache_hit_cycles / cpu_ghz); }
};

struct ControllerCounters {
  std::uint64_t flushes = 0;
  std::uint64_t reads = 0;
  std::uint64_t reencryptions = 0;
  std::uint64_t reencryption_appends = 0;
  std::uint64_t counter_writebacks = 0;
  std::uint64_t boundary_events = 0;
};

class Controller {
 public:
  Controller(ControllerConfig cfg, const EncryptionKey& key);

  /// Cold-cache controller over a crash image. Resumes an interrupted page
  /// re-encryption from the persisted RSR and drains before returning.
  static Controller recover_from(const ControllerConfig& cfg, const EncryptionKey& key,
                                 const CrashSnapshot& snapshot);

  /// Flush of one data line; returns the ack time (both entries enqueued).
  Nanos handle_flush(Addr line_address, const Line& plaintext, Nanos now);
  ReadResult handle_read(Addr line_address, Nanos now);
  /// Fence retirement. Acks are synchronous, so this only records the boundary.
  Nanos fence(Nanos now);

  Nanos begin_reencryption(std::uint64_t page, Nanos now);
  Nanos reencrypt_line(std::size_t line_index, Nanos now);
  Nanos reencrypt_page(std::uint64_t page, Nanos now);
  Nanos finish_reencryption(Nanos now);

  /// Completes re-encryption, writes back dirty counters (write-back mode)
  /// and drains the queue. Returns when the last NVM write completes.
  Nanos quiesce(Nanos now);

  CrashSnapshot crash_snapshot(Nanos now) const;

  void set_boundary_hook(std::function<void(Boundary, Nanos)> hook) { hook_ = std::move(hook); }
  void set_otp_log(std::vector<OtpInput>* log) { otp_log_ = log; }
  void set_event_log(std::ostream* log) { event_log_ = log; }

  const ControllerConfig& config() const { return cfg_; }
  const CounterAddressMap& address_map() const { return map_; }
  const WriteQueue& queue() const { return queue_; }
  const NvmDevice& nvm() const { return nvm_; }
  const CounterCache& counter_cache() const { return cache_; }
  const StagingRegister& staging_register() const { return register_; }
  const Rsr& rsr() const { return rsr_; }
  const ControllerCounters& counters() const { return counters_; }

  /// Counter line as it would be after a drain (queue forwarding over NVM).
  CounterLine durable_counter_line(std::uint64_t page) const;

 private:
  struct Fetched {
    CounterLine line;
    Nanos ready;
  };

  void check_data_address(Addr a) const;
  void mark(Boundary b, Addr a, Nanos t);
  /// Eager policy only: drain everything that can issue by `t`.
  void advance(Nanos t);
  /// Request arrival at `t`: under Idle, drain what fits in the gap since the
  /// last request finished.
  void on_request(Nanos t);
  void drain_until(Nanos floor, Nanos t);
  /// Forced drain of the head, issued no earlier than `floor`. Returns the issue time.
  Nanos drain_head(Nanos floor);
  Nanos next_drain_time() const;
  Nanos wait_for_slots(std::size_t n, Nanos t);
  Nanos wait_for_pair(Addr counter_address, Nanos t);
  Fetched fetch_counter(Addr counter_address, Nanos t);
  ReadResult fetch_data(Addr address, Nanos t);
  ReadResult read_path(Addr address, Nanos now);
  Pad encryption_pad(Addr address, CounterValue ctr);
  Line decrypt_at(Addr address, CounterValue ctr, const Line& ciphertext) const;
  CounterLine reencryption_target(const CounterLine& current) const;
  /// Counter-cache update, encryption delay and the mode's enqueue sequence.
  /// `on_commit` runs in the same indivisible step as the data append.
  Nanos persist(Addr address, const Line& ciphertext, Addr counter_address, const CounterLine& updated,
                Nanos t, const std::function<void()>& on_commit = {});

  ControllerConfig cfg_;
  CounterAddressMap map_;
  OtpGenerator otp_;
  CounterCache cache_;
  WriteQueue queue_;
  NvmDevice nvm_;
  StagingRegister register_;
  Rsr rsr_;
  std::array<std::uint8_t, kLinesPerPage> rsr_old_minors_{};

  Nanos pipeline_free_ = 0;
  Nanos last_issue_ = 0;
  Nanos busy_until_ = 0;  // completion of the latest request
  ControllerCounters counters_;
  std::function<void(Boundary, Nanos)> hook_;
  std::vector<OtpInput>* otp_log_ = nullptr;
  std::ostream* event_log_ = nullptr;
};

}  // namespace secpm
