#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "secpm/stats.hpp"
#include "secpm/txn.hpp"
#include "secpm/workloads.hpp"

namespace secpm {

/// CPU-side costs charged by the executor: 1.4 us of non-memory work per
/// transaction (key generation, traversal in cache, allocation, begin and
/// commit bookkeeping), nothing extra per line. The controller idles during
/// that time, which is when the queue drains opportunistically. Below ~1.2 us
/// queue stalls dominate every mode; above ~1.5 us a 64 B transaction's
/// writes always drain before the next one starts.
ExecutorOptions default_executor_options();

struct CellConfig {
  CellKey key;
  std::uint64_t txn_count = 1000;  // per core
  std::uint64_t seed = 1;
  bool staging_register = true;
  DrainPolicy drain = DrainPolicy::Idle;
  std::size_t cache_ways = 8;
  NvmTiming timing;
  Nanos aes_ns = 40;
  double cpu_ghz = 2.0;
  ExecutorOptions exec = default_executor_options();
  /// Replaces the generated stream (trace import).
  std::shared_ptr<const TxnStream> stream;

  WorkloadSpec workload_spec() const;
  ControllerConfig controller_config(std::uint64_t data_bytes) const;
};

struct CellObservers {
  std::vector<OtpInput>* otp_log = nullptr;
  std::ostream* event_log = nullptr;
};

/// Generates the stream (all cores' transactions, dealt round-robin),
/// runs it to completion, quiesces and collects statistics.
RunStats run_cell(const CellConfig& cell, const CellObservers& obs = {});

/// Serial reference.
std::vector<ReportRow> run_sweep_serial(const std::vector<CellConfig>& cells);
/// Cells in parallel (OpenMP); each cell stays single-threaded, so the
/// rows are identical to the serial sweep.
std::vector<ReportRow> run_sweep_parallel(const std::vector<CellConfig>& cells);
std::vector<ReportRow> run_sweep(const std::vector<CellConfig>& cells, bool parallel = true);

}  // namespace secpm
