// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "secpm/config.hpp"
#include "secpm/crash.hpp"
#include "secpm/experiment.hpp"
#include "secpm/stats.hpp"

using namespace secpm;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " [" << id << "] " << what << " -- " << detail << std::endl;
  failures += !ok;
}

std::string fmt(double x, int prec = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, x);
  return buf;
}

const std::vector<std::uint64_t> kSizes{64, 256, 1024, 4096};
constexpr std::uint64_t kSweepTxns = 10000;

struct Key {
  WorkloadKind w;
  Mode m;
  std::uint64_t size;
  std::size_t queue;
  auto operator<=>(const Key&) const = default;
};

std::map<Key, RunStats> index_rows(const std::vector<ReportRow>& rows) {
  std::map<Key, RunStats> out;
  for (const ReportRow& r : rows) out[{r.key.workload, r.key.mode, r.key.txn_size, r.key.queue_len}] = r.stats;
  return out;
}

// ---------------------------------------------------------------------------

void full_page_write_count() {
  const auto t0 = Clock::now();
  std::uint64_t writes[2] = {};
  for (int cwr = 0; cwr < 2; ++cwr) {
    ControllerConfig cfg;
    cfg.mode = cwr ? Mode::SecPm : Mode::SecPmNoCwr;
    cfg.queue_capacity = 0;
    cfg.drain = DrainPolicy::OnDemand;
    cfg.data_bytes = 64ULL << 20;
    Controller c(cfg, EncryptionKey::from_seed(1));
    const Addr page = 5 * kPageBytes;
    Nanos t = 0;
    for (std::size_t l = 0; l < kLinesPerPage; ++l) {
      t = c.handle_flush(page + l * kLineBytes, crash::fill_line(page + l * kLineBytes, 1), t);
    }
    c.quiesce(t);
    writes[cwr] = c.nvm().writes_issued();
  }
  const double secs = seconds_since(t0);
  report(1, writes[0] == 128 && writes[1] == 65 && secs < 1.0, "full 4 KiB page flush: 128 writes without CWR, 65 with",
         "without=" + std::to_string(writes[0]) + " with=" + std::to_string(writes[1]) + " time=" + fmt(secs, 3) + "s");
}

void write_amplification(const std::map<Key, RunStats>& rows) {
  bool ok = true;
  std::size_t checked = 0, skipped = 0;
  std::string worst;
  for (WorkloadKind w : kAllWorkloads) {
    for (std::uint64_t s : kSizes) {
      const RunStats& u = rows.at({w, Mode::UnsecPm, s, 32});
      const RunStats& n = rows.at({w, Mode::SecPmNoCwr, s, 32});
      if (n.reencryptions) {
        ++skipped;
        continue;
      }
      ++checked;
      if (n.nvm_writes_total != 2 * u.nvm_writes_total) {
        ok = false;
        worst += std::string(to_string(w)) + "/" + std::to_string(s) + " ";
      }
    }
  }
  report(2, ok && checked > 0, "NO_CWR writes are exactly 2x UNSEC on every workload/size",
         "cells=" + std::to_string(checked) + " skipped(overflow)=" + std::to_string(skipped) +
             (worst.empty() ? "" : " mismatched: " + worst));
}

void recoverability_tables() {
  const auto t0 = Clock::now();
  const TxnDescriptor txn = crash::make_contiguous_txn(1, 0, 4, 1 << 20);
  auto count = [&](Mode m) {
    ControllerConfig cfg;
    cfg.mode = m;
    cfg.data_bytes = 64ULL << 20;
    std::map<TxnStage, std::size_t> bad;
    std::size_t points = 0;
    for (const RecoveryVerdict& v : crash::flatten_verdicts(crash::inject(crash::CrashPlan{}, crash::txn_scenario(txn, cfg)))) {
      ++points;
      bad[v.stage] += v.outcome == Outcome::Inconsistent;
    }
    return std::pair{points, bad};
  };
  auto [np, nocwt] = count(Mode::SecPmNoCwt);
  auto [sp, secpm] = count(Mode::SecPm);
  std::size_t secpm_bad = 0;
  for (auto& [stage, n] : secpm) secpm_bad += n;
  const double secs = seconds_since(t0);
  const bool ok = nocwt[TxnStage::Mutate] >= 1 && nocwt[TxnStage::Commit] >= 1 && nocwt[TxnStage::Prepare] == 0 &&
                  secpm_bad == 0 && secs < 30;
  report(3, ok, "4-line txn crash tables: NO_CWT breaks in MUTATE and COMMIT only, SECPM never",
         "no-cwt points=" + std::to_string(np) + " inconsistent prepare/mutate/commit=" +
             std::to_string(nocwt[TxnStage::Prepare]) + "/" + std::to_string(nocwt[TxnStage::Mutate]) + "/" +
             std::to_string(nocwt[TxnStage::Commit]) + "; secpm points=" + std::to_string(sp) +
             " inconsistent=" + std::to_string(secpm_bad) + " time=" + fmt(secs) + "s");
}

void register_atomicity() {
  std::size_t bad[2] = {};
  std::size_t points[2] = {};
  for (int reg = 0; reg < 2; ++reg) {
    ControllerConfig cfg;
    cfg.staging_register = reg;
    cfg.data_bytes = 64ULL << 20;
    for (const RecoveryVerdict& v :
         crash::flatten_verdicts(crash::inject(crash::CrashPlan{}, crash::atomic_write_scenario(5 * kLineBytes, cfg)))) {
      ++points[reg];
      bad[reg] += v.outcome == Outcome::Inconsistent;
    }
  }
  report(4, bad[0] >= 1 && bad[1] == 0, "logless atomic write: register off tears, register on never",
         "off: " + std::to_string(bad[0]) + "/" + std::to_string(points[0]) + " undecryptable; on: " +
             std::to_string(bad[1]) + "/" + std::to_string(points[1]));
}

void reduction_vs_size(const std::map<Key, RunStats>& rows, double secs) {
  bool ok = secs < 300;
  std::string detail;
  for (WorkloadKind w : kAllWorkloads) {
    double prev = -1;
    detail += std::string(to_string(w)) + "=";
    for (std::uint64_t s : kSizes) {
      const auto r = reduction_percentage(rows.at({w, Mode::SecPm, s, 32}));
      const double v = r.value_or(-1);
      ok = ok && r && v >= prev;
      prev = v;
      detail += fmt(v, 1) + (s == 4096 ? " " : "/");
    }
    ok = ok && prev >= 85.0;
  }
  report(5, ok, "CWR reduction non-decreasing in txn size, >= 85% at 4 KiB",
         detail + "sweep_time=" + fmt(secs, 1) + "s");
}

void latency_ordering(const std::map<Key, RunStats>& rows) {
  bool ok = true;
  double lo = 1e9, hi = 0;
  std::string broken;
  for (WorkloadKind w : kAllWorkloads) {
    for (std::uint64_t s : kSizes) {
      const double u = rows.at({w, Mode::UnsecPm, s, 32}).mean_latency();
      const double n = rows.at({w, Mode::SecPmNoCwr, s, 32}).mean_latency();
      const double p = rows.at({w, Mode::SecPm, s, 32}).mean_latency();
      if (!(u <= p && p < n)) {
        ok = false;
        broken += std::string(to_string(w)) + "/" + std::to_string(s) + " ";
      }
      if (s == 1024) {
        lo = std::min(lo, n / p);
        hi = std::max(hi, n / p);
      }
    }
  }
  ok = ok && lo >= 1.2 && hi <= 3.0;
  report(6, ok, "latency UNSEC <= SECPM < NO_CWR; NO_CWR/SECPM in [1.2, 3.0] at 1 KiB",
         "1KiB ratio range=" + fmt(lo) + ".." + fmt(hi) + (broken.empty() ? "" : " order broken: " + broken));
}

void reduction_vs_queue() {
  Config c;
  c.workloads.assign(std::begin(kAllWorkloads), std::end(kAllWorkloads));
  c.txn_sizes = {1024};
  c.queue_lens = {8, 16, 32, 64, 128};
  c.txn_count = kSweepTxns;
  const auto rows = index_rows(run_sweep(expand_cells(c)));
  bool ok = true;
  std::string detail;
  for (WorkloadKind w : kAllWorkloads) {
    double prev = -1;
    detail += std::string(to_string(w)) + "=";
    for (std::size_t q : c.queue_lens) {
      const double v = reduction_percentage(rows.at({w, Mode::SecPm, 1024, q})).value_or(-1);
      ok = ok && v >= 0 && v >= prev;
      prev = v;
      detail += fmt(v, 1) + (q == 128 ? " " : "/");
    }
  }
  report(7, ok, "CWR reduction non-decreasing in queue length 8..128 (1 KiB txns)", detail);
}

void cache_locality(const std::map<Key, RunStats>& rows) {
  auto rate = [&](WorkloadKind w) { return rows.at({w, Mode::SecPm, 1024, 32}).cache_hit_rate().value_or(0); };
  const double q = rate(WorkloadKind::Queue), b = rate(WorkloadKind::BTree);
  const double others = std::max({rate(WorkloadKind::Array), rate(WorkloadKind::HashTable), rate(WorkloadKind::RBTree)});
  report(8, q > others && b > others, "counter-cache hit rate: QUEUE and BTREE above ARRAY, HASHTABLE, RBTREE (1 MiB)",
         "queue=" + fmt(q, 5) + " btree=" + fmt(b, 5) + " array=" + fmt(rate(WorkloadKind::Array), 5) +
             " hashtable=" + fmt(rate(WorkloadKind::HashTable), 5) + " rbtree=" + fmt(rate(WorkloadKind::RBTree), 5));
}

void reencryption_consistency() {
  const auto t0 = Clock::now();
  ControllerConfig cfg;
  cfg.data_bytes = 64ULL << 20;
  const crash::Scenario s = crash::reencryption_scenario(3, 7, cfg);
  const auto results = crash::inject(crash::CrashPlan{}, s);
  std::size_t bad = 0, mid = 0;
  for (const auto& r : results) {
    for (const RecoveryVerdict& v : r.verdicts) bad += v.outcome == Outcome::Inconsistent;
    mid += r.snapshot.rsr.has_value();
  }
  const double secs = seconds_since(t0);
  report(9, bad == 0 && mid >= kLinesPerPage && secs < 10,
         "page re-encryption after the 128th write: every crash point recovers",
         "points=" + std::to_string(results.size()) + " with_active_rsr=" + std::to_string(mid) +
             " inconsistent=" + std::to_string(bad) + " time=" + fmt(secs) + "s");
}

// --- criterion 10 ----------------------------------------------------------

bool round_trip_lines(std::string& detail) {
  std::mt19937_64 rng(2024);
  const OtpGenerator gen(EncryptionKey::from_seed(rng()));
  std::size_t bad = 0;
  for (int i = 0; i < 100000; ++i) {
    Line l;
    for (auto& b : l) b = static_cast<std::uint8_t>(rng());
    const OtpInput in{(rng() >> 20) * kLineBytes, {rng(), static_cast<std::uint8_t>(rng() & 0x7f)}};
    bad += decrypt_line(encrypt_line(l, gen.generate(in)), gen.generate(in)) != l;
  }
  detail += "roundtrip_bad=" + std::to_string(bad) + "/100000";
  return bad == 0;
}

bool otp_uniqueness(std::string& detail) {
  std::size_t total = 0, dups = 0;
  for (WorkloadKind w : kAllWorkloads) {
    CellConfig cell;
    cell.key = {w, Mode::SecPm, 1024, 32, 1 << 20, 1};
    cell.txn_count = 2000;
    std::vector<OtpInput> log;
    run_cell(cell, {&log, nullptr});
    std::sort(log.begin(), log.end());
    total += log.size();
    dups += log.end() - std::unique(log.begin(), log.end());
  }
  detail += " otp_tuples=" + std::to_string(total) + " duplicates=" + std::to_string(dups);
  return dups == 0 && total > 0;
}

// Final counter-region bytes, CWR on vs off, for the same random flush trace.
bool merge_oracle(std::string& detail) {
  std::size_t mismatched = 0;
  std::uint64_t merged = 0;
  for (int trace = 0; trace < 1000; ++trace) {
    std::mt19937_64 rng(trace);
    const std::size_t pages = 1 + rng() % 4;
    const std::size_t len = 20 + rng() % 200;
    std::vector<std::pair<Addr, Nanos>> ops;
    for (std::size_t i = 0; i < len; ++i) {
      ops.push_back({(rng() % pages) * kPageBytes + (rng() % kLinesPerPage) * kLineBytes, static_cast<Nanos>(rng() % 400)});
    }
    const std::size_t queue = 2 + rng() % 31;
    std::map<Addr, Line> region[2];
    for (int cwr = 0; cwr < 2; ++cwr) {
      ControllerConfig cfg;
      cfg.mode = cwr ? Mode::SecPm : Mode::SecPmNoCwr;
      cfg.queue_capacity = queue;
      cfg.data_bytes = 64ULL << 20;
      Controller c(cfg, EncryptionKey::from_seed(trace));
      Nanos t = 0;
      for (auto [a, gap] : ops) t = c.handle_flush(a, crash::fill_line(a, t), t + gap);
      c.quiesce(t);
      for (const auto& [addr, line] : c.nvm().contents()) {
        if (c.address_map().in_counter_region(addr)) region[cwr][addr] = line;
      }
      if (cwr) merged += c.queue().merged();
    }
    mismatched += region[0] != region[1];
  }
  detail += " merge_oracle_mismatch=" + std::to_string(mismatched) + "/1000 (merged=" + std::to_string(merged) + ")";
  return mismatched == 0 && merged > 0;
}

bool seeded_determinism(std::string& detail) {
  Config c;
  c.modes = {Mode::UnsecPm, Mode::SecPmNoCwr, Mode::SecPm};
  c.workloads.assign(std::begin(kAllWorkloads), std::end(kAllWorkloads));
  c.txn_sizes = {256};
  c.txn_count = 500;
  c.seed = 17;
  auto csv = [&](bool parallel) {
    std::ostringstream o;
    emit_csv(o, run_sweep(expand_cells(c), parallel));
    return o.str();
  };
  const std::string a = csv(true), b = csv(true), s = csv(false);
  const bool ok = a == b && a == s;
  detail += std::string(" csv_identical=") + (ok ? "yes" : "no") + " (" + std::to_string(a.size()) + " bytes)";
  return ok;
}

void property_suites() {
  std::string detail;
  bool ok = round_trip_lines(detail);
  ok = otp_uniqueness(detail) && ok;
  ok = merge_oracle(detail) && ok;
  ok = seeded_determinism(detail) && ok;
  report(10, ok, "property suites: round trip, OTP uniqueness, CWR merge oracle, seeded determinism", detail);
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  full_page_write_count();

  // one default-config sweep shared by criteria 2, 5, 6, 8
  const auto sweep_start = Clock::now();
  Config c;
  c.modes = {Mode::UnsecPm, Mode::SecPmNoCwr, Mode::SecPm};
  c.workloads.assign(std::begin(kAllWorkloads), std::end(kAllWorkloads));
  c.txn_sizes = kSizes;
  c.txn_count = kSweepTxns;
  const auto rows = index_rows(run_sweep(expand_cells(c)));
  const double sweep_secs = seconds_since(sweep_start);

  write_amplification(rows);
  recoverability_tables();
  register_atomicity();
  reduction_vs_size(rows, sweep_secs);
  latency_ordering(rows);
  reduction_vs_queue();
  cache_locality(rows);
  reencryption_consistency();
  property_suites();

  std::cout << (failures ? "FAILED " : "ALL PASSED ") << 10 - failures << "/10 criteria, " << fmt(seconds_since(t0), 1)
            << "s" << std::endl;
  return failures;
}
