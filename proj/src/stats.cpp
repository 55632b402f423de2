#include "secpm/stats.hpp"

#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

namespace secpm {

double RunStats::throughput() const {
  if (elapsed_ns <= 0) return 0.0;
  return static_cast<double>(txn_latencies.size()) * 1e9 / static_cast<double>(elapsed_ns);
}

double RunStats::mean_latency() const {
  if (txn_latencies.empty()) return 0.0;
  const long double sum = std::accumulate(txn_latencies.begin(), txn_latencies.end(), 0.0L);
  return static_cast<double>(sum / static_cast<long double>(txn_latencies.size()));
}

std::optional<double> RunStats::cache_hit_rate() const {
  const std::uint64_t n = cache_hits + cache_misses;
  if (n == 0) return std::nullopt;
  return static_cast<double>(cache_hits) / static_cast<double>(n);
}

std::optional<double> reduction_percentage(const RunStats& s) {
  if (s.counter_writes_appended == 0) return std::nullopt;
  return 100.0 * static_cast<double>(s.counter_writes_merged) / static_cast<double>(s.counter_writes_appended);
}

RunStats collect(const Controller& c) {
  RunStats s;
  const WriteQueue& q = c.queue();
  s.data_writes = q.data_appended();
  s.counter_writes_appended = q.counter_appended();
  s.counter_writes_merged = q.merged();
  s.nvm_writes_total = c.nvm().writes_issued();
  s.cache_hits = c.counter_cache().hits();
  s.cache_misses = c.counter_cache().misses();
  s.reencryptions = c.counters().reencryptions;
  return s;
}

namespace {

std::string fmt(double v) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(4) << v;
  return o.str();
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "N/A"; }

}  // namespace

void emit_csv(std::ostream& out, std::span<const ReportRow> rows) {
  out << kCsvHeader << '\n';
  for (const ReportRow& r : rows) {
    const CellKey& k = r.key;
    const RunStats& s = r.stats;
    auto row = [&](const char* metric, const std::string& value) {
      out << to_string(k.workload) << ',' << to_string(k.mode) << ',' << k.txn_size << ',' << k.queue_len << ','
          << k.cache_bytes << ',' << k.cores << ',' << metric << ',' << value << '\n';
    };
    row("data_writes", std::to_string(s.data_writes));
    row("counter_writes_appended", std::to_string(s.counter_writes_appended));
    row("counter_writes_merged", std::to_string(s.counter_writes_merged));
    row("nvm_writes_total", std::to_string(s.nvm_writes_total));
    row("reduction_pct", fmt(reduction_percentage(s)));
    row("mean_txn_latency_ns", fmt(s.mean_latency()));
    row("throughput_txn_per_s", fmt(s.throughput()));
    row("cache_hit_rate", fmt(s.cache_hit_rate()));
    row("reencryptions", std::to_string(s.reencryptions));
    for (const ReportRow& base : rows) {
      if (base.key.mode == Mode::UnsecPm && base.key.same_point(k) && base.stats.nvm_writes_total > 0) {
        row("normalized_writes", fmt(static_cast<double>(s.nvm_writes_total) /
                                     static_cast<double>(base.stats.nvm_writes_total)));
        break;
      }
    }
  }
}

}  // namespace secpm
