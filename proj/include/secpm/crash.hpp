#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "secpm/controller.hpp"
#include "secpm/txn.hpp"

namespace secpm::crash {

struct CrashPlan {
  enum class Strategy { AtEvent, Exhaustive, Random };
  Strategy strategy = Strategy::Exhaustive;
  std::uint64_t index = 0;  // AtEvent
  std::uint64_t count = 0;  // Random
  std::uint64_t seed = 1;   // Random

  /// "exhaustive", "random:N" or "at:K".
  static std::optional<CrashPlan> parse(std::string_view text, std::uint64_t seed = 1);
  std::string render() const;
};

/// What a scenario body sees while it runs.
struct BodyContext {
  Controller& controller;
  Nanos start = 0;
  /// Set by the body; reports the transaction stage at each boundary.
  std::function<TxnStage()> stage;
};

/// A deterministic run split into a crash-free setup prefix and a body
/// whose boundary events are the crash points.
struct Scenario {
  std::string name;
  ControllerConfig config;
  EncryptionKey key;
  std::vector<LogRegion> log_regions;
  std::function<Nanos(Controller&)> setup;
  std::function<void(BodyContext&)> body;
  std::vector<TxnExpectation> expectations;
};

struct CrashResult {
  std::uint64_t crash_point = 0;  // number of body events that happened before the crash
  std::optional<Boundary> last_event;
  TxnStage stage = TxnStage::None;
  CrashSnapshot snapshot;
  std::vector<RecoveryVerdict> verdicts;

  bool consistent() const;
};

/// Number of boundary events the body produces (crash points are 0..N).
std::uint64_t count_events(const Scenario& s);

std::vector<std::uint64_t> crash_points(const CrashPlan& plan, std::uint64_t event_count);

/// Replays to one crash point and snapshots there (no recovery).
CrashResult replay_to(const Scenario& s, std::uint64_t crash_point);
/// Replays, crashes, recovers and judges one point.
CrashResult run_point(const Scenario& s, std::uint64_t crash_point);

/// Serial reference driver.
std::vector<CrashResult> inject_serial(const CrashPlan& plan, const Scenario& s);
/// OpenMP driver; identical results to inject_serial.
std::vector<CrashResult> inject_parallel(const CrashPlan& plan, const Scenario& s);
std::vector<CrashResult> inject(const CrashPlan& plan, const Scenario& s, bool parallel = true);

std::vector<RecoveryVerdict> flatten_verdicts(const std::vector<CrashResult>& results);

/// Deterministic, non-zero pre-image value for a line.
Line fill_line(Addr address, std::uint64_t salt);

/// One durable transaction over a pre-populated image.
Scenario txn_scenario(const TxnDescriptor& txn, ControllerConfig cfg, std::uint64_t seed = 7);
/// Logless single-line overwrite; relies on counter-atomicity alone.
Scenario atomic_write_scenario(Addr address, ControllerConfig cfg, std::uint64_t seed = 7);
/// Drives one line of a page to minor-counter overflow; the body is the
/// write that triggers page re-encryption.
Scenario reencryption_scenario(std::uint64_t page, std::size_t hot_line, ControllerConfig cfg,
                               std::uint64_t seed = 7);

/// A small contiguous transaction used by crash checks: `lines` data lines
/// starting at `data_base`, log at `log_base`.
TxnDescriptor make_contiguous_txn(std::uint64_t txn_id, Addr data_base, std::size_t lines, Addr log_base,
                                  std::uint64_t seed = 11);

}  // namespace secpm::crash
