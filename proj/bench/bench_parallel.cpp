// Serial reference vs OpenMP kernels: experiment sweeps and crash-point
// replay. Also checks that both produce identical results.
//
//   bench_parallel [txn_count] [repeats]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "secpm/config.hpp"
#include "secpm/crash.hpp"
#include "secpm/experiment.hpp"

using namespace secpm;

namespace {

double best_of(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void line(const char* name, double serial, double parallel, bool same) {
  std::printf("%-28s serial %8.3fs  parallel %8.3fs  speedup %5.2fx  %s\n", name, serial, parallel, serial / parallel,
              same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const std::uint64_t txns = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 2000;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;
  std::printf("threads=%d txn_count=%llu repeats=%d\n", omp_get_max_threads(), static_cast<unsigned long long>(txns),
              repeats);
  int status = 0;

  {
    Config c;
    c.modes = {Mode::UnsecPm, Mode::SecPmNoCwr, Mode::SecPm};
    c.workloads.assign(std::begin(kAllWorkloads), std::end(kAllWorkloads));
    c.txn_sizes = {256, 1024};
    c.txn_count = txns;
    const auto cells = expand_cells(c);
    std::vector<ReportRow> a, b;
    const double ts = best_of(repeats, [&] { a = run_sweep_serial(cells); });
    const double tp = best_of(repeats, [&] { b = run_sweep_parallel(cells); });
    std::ostringstream sa, sb;
    emit_csv(sa, a);
    emit_csv(sb, b);
    line("sweep (30 cells)", ts, tp, sa.str() == sb.str());
    status |= sa.str() != sb.str();
  }

  auto crash_case = [&](const char* name, const crash::Scenario& s) {
    std::vector<crash::CrashResult> a, b;
    const double ts = best_of(repeats, [&] { a = crash::inject_serial(crash::CrashPlan{}, s); });
    const double tp = best_of(repeats, [&] { b = crash::inject_parallel(crash::CrashPlan{}, s); });
    const bool same = crash::flatten_verdicts(a) == crash::flatten_verdicts(b);
    line(name, ts, tp, same);
    status |= !same;
  };
  ControllerConfig cfg;
  cfg.data_bytes = 64ULL << 20;
  crash_case("crash: 64-line txn", crash::txn_scenario(crash::make_contiguous_txn(1, 0, 64, 32 << 20), cfg));
  crash_case("crash: page re-encryption", crash::reencryption_scenario(3, 7, cfg));
  return status;
}
