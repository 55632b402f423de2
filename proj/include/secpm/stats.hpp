#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "secpm/controller.hpp"
#include "secpm/workloads.hpp"

namespace secpm {

struct RunStats {
  std::uint64_t data_writes = 0;
  std::uint64_t counter_writes_appended = 0;
  std::uint64_t counter_writes_merged = 0;
  std::uint64_t nvm_writes_total = 0;
  std::vector<Nanos> txn_latencies;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  std::uint64_t reencryptions = 0;
  Nanos elapsed_ns = 0;

  /// Simulated transactions per second.
  double throughput() const;
  double mean_latency() const;
  std::optional<double> cache_hit_rate() const;
  bool accounting_holds() const {
    return nvm_writes_total == data_writes + (counter_writes_appended - counter_writes_merged);
  }
};

/// merged / appended; nullopt when nothing was appended (reported as N/A).
std::optional<double> reduction_percentage(const RunStats& s);

/// Gathers counters from a quiesced controller.
RunStats collect(const Controller& c);

/// Identifies one experiment cell in reports.
struct CellKey {
  WorkloadKind workload = WorkloadKind::Array;
  Mode mode = Mode::SecPm;
  std::uint64_t txn_size = 0;
  std::size_t queue_len = 0;
  std::size_t cache_bytes = 0;
  std::size_t cores = 1;

  /// Same cell apart from the mode.
  bool same_point(const CellKey& o) const {
    return workload == o.workload && txn_size == o.txn_size && queue_len == o.queue_len &&
           cache_bytes == o.cache_bytes && cores == o.cores;
  }
};

struct ReportRow {
  CellKey key;
  RunStats stats;
};

inline constexpr const char* kCsvHeader = "workload,mode,txn_size,queue_len,cache_bytes,cores,metric,value";

/// One row per (cell, metric). Cells whose point also has an unsec-pm cell
/// additionally get `normalized_writes` (NVM writes over the unsec-pm run).
void emit_csv(std::ostream& out, std::span<const ReportRow> rows);

}  // namespace secpm
