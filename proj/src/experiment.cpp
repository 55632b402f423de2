#include "secpm/experiment.hpp"

#include <algorithm>
#include <exception>

namespace secpm {

ExecutorOptions default_executor_options() {
  ExecutorOptions o;
  o.cpu_ns_per_line = 0;
  o.cpu_ns_per_txn = 1400;
  return o;
}

WorkloadSpec CellConfig::workload_spec() const {
  WorkloadSpec w;
  w.kind = key.workload;
  w.txn_size = key.txn_size;
  w.txn_count = txn_count * std::max<std::size_t>(key.cores, 1);
  w.seed = seed;
  return w;
}

ControllerConfig CellConfig::controller_config(std::uint64_t data_bytes) const {
  ControllerConfig c;
  c.mode = key.mode;
  c.staging_register = staging_register;
  c.drain = drain;
  c.queue_capacity = key.queue_len;
  c.counter_cache_bytes = key.cache_bytes;
  c.counter_cache_ways = cache_ways;
  c.timing = timing;
  c.aes_ns = aes_ns;
  c.cpu_ghz = cpu_ghz;
  c.data_bytes = data_bytes;
  c.nvm_capacity = std::max<std::uint64_t>(c.nvm_capacity, 2 * data_bytes);
  return c;
}

RunStats run_cell(const CellConfig& cell, const CellObservers& obs) {
  const WorkloadSpec spec = cell.workload_spec();
  TxnStream generated;
  const TxnStream* stream = cell.stream.get();
  if (!stream) {
    generated = generate(spec);
    stream = &generated;
  }
  std::uint64_t data_bytes = required_data_bytes(spec);
  for (const TxnDescriptor& t : *stream) {
    const Addr end = t.log_base + t.log_lines() * kLineBytes;
    data_bytes = std::max<std::uint64_t>(data_bytes, (end + kPageBytes) / kPageBytes * kPageBytes);
  }

  Controller ctl(cell.controller_config(data_bytes), EncryptionKey::from_seed(cell.seed));
  ctl.set_otp_log(obs.otp_log);
  ctl.set_event_log(obs.event_log);

  const std::size_t cores = std::max<std::size_t>(cell.key.cores, 1);
  Executor ex(ctl, cores, cell.exec);
  for (std::size_t i = 0; i < stream->size(); ++i) ex.submit(i % cores, (*stream)[i]);
  const Nanos finish = ex.run();
  ctl.quiesce(finish);

  RunStats s = collect(ctl);
  s.elapsed_ns = finish;
  s.txn_latencies.reserve(ex.completed().size());
  for (const TxnRecord& r : ex.completed()) s.txn_latencies.push_back(r.end - r.start);
  return s;
}

std::vector<ReportRow> run_sweep_serial(const std::vector<CellConfig>& cells) {
  std::vector<ReportRow> rows;
  rows.reserve(cells.size());
  for (const CellConfig& c : cells) rows.push_back({c.key, run_cell(c)});
  return rows;
}

std::vector<ReportRow> run_sweep_parallel(const std::vector<CellConfig>& cells) {
  std::vector<ReportRow> rows(cells.size());
  std::exception_ptr failure;
  const auto n = static_cast<std::int64_t>(cells.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      rows[idx] = {cells[idx].key, run_cell(cells[idx])};
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::vector<ReportRow> run_sweep(const std::vector<CellConfig>& cells, bool parallel) {
  return parallel ? run_sweep_parallel(cells) : run_sweep_serial(cells);
}

}  // namespace secpm
