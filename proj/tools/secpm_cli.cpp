// secpm: run workload experiments and crash-consistency checks against the
// secure persistent memory controller model.
//
// Exit status: 0 ok, 1 consistency violation, 2 usage or I/O error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "secpm/config.hpp"
#include "secpm/crash.hpp"
#include "secpm/experiment.hpp"
#include "secpm/stats.hpp"
#include "secpm/workloads.hpp"

namespace {

using namespace secpm;

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flags that map one-to-one onto config keys. Values stay strings so the
/// config parser does all validation.
struct Flags {
  std::map<std::string, std::string> values;
  std::string config_path;
  bool no_register = false;
  bool serial = false;
  bool print_config = false;
  bool strict = false;

  void add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    app.add_option(flag, values[key], help);
  }
};

void add_common(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config_path, "flat key = value file; flags override it");
  f.add(app, "--mode", "mode", "unsec-pm|secpm-no-cwt|secpm-no-cwr|secpm (comma list sweeps)");
  f.add(app, "--workload", "workload", "array|queue|btree|hashtable|rbtree (comma list)");
  f.add(app, "--txn-size", "txn_size", "bytes per transaction: 64,256,1K,4K (comma list)");
  f.add(app, "--txn-count", "txn_count", "transactions per core");
  f.add(app, "--queue-len", "queue_len", "write queue entries (comma list)");
  f.add(app, "--cache-size", "cache_size", "counter cache bytes, e.g. 1KiB..4MiB (comma list)");
  f.add(app, "--cache-ways", "cache_ways", "counter cache associativity");
  f.add(app, "--cores", "cores", "logical requesters (comma list)");
  f.add(app, "--seed", "seed", "workload and key seed");
  f.add(app, "--drain", "drain", "write queue drain policy: idle|on-demand|eager");
  f.add(app, "--cpu-ns-per-txn", "cpu_ns_per_txn", "CPU work per transaction (ns)");
  f.add(app, "--cpu-ns-per-line", "cpu_ns_per_line", "CPU work per line access (ns)");
  f.add(app, "--aes-ns", "aes_ns", "OTP generation latency (ns)");
  f.add(app, "--out", "out", "output CSV path (default stdout)");
  f.add(app, "--event-log", "event_log", "per-event trace log path (single cell only)");
  app.add_flag("--no-register", f.no_register, "disable the atomic staging register");
  app.add_flag("--serial", f.serial, "run cells / crash points serially instead of in parallel");
  app.add_flag("--print-config", f.print_config, "print the effective config and exit");
}

Config resolve(const Flags& f) {
  Config cfg;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw UsageError("cannot read config file " + f.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = parse_config(ss.str(), cfg);
  }
  for (const auto& [key, value] : f.values) {
    if (!value.empty()) set_key(cfg, key, value);
  }
  if (f.no_register) cfg.staging_register = false;
  return cfg;
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw std::runtime_error("cannot write " + path);
  return file;
}

int cmd_run(const Config& cfg, bool serial) {
  std::vector<CellConfig> cells = expand_cells(cfg);
  const bool single_stream = cfg.workloads.size() == 1 && cfg.txn_sizes.size() == 1 && cfg.cores.size() == 1;

  if (!cfg.trace_in.empty() || !cfg.trace_out.empty()) {
    if (!single_stream) throw UsageError("--trace-in/--trace-out need a single workload, txn size and core count");
    const WorkloadSpec spec = cells.front().workload_spec();
    std::shared_ptr<TxnStream> stream;
    if (!cfg.trace_in.empty()) {
      std::ifstream in(cfg.trace_in);
      if (!in) throw UsageError("cannot read trace " + cfg.trace_in);
      stream = std::make_shared<TxnStream>(read_trace(in, cfg.seed, {0}));
      Addr top = default_log_layout(spec).log_area_base;
      for (const TxnDescriptor& t : *stream) {
        for (const LineWrite& w : t.write_set) top = std::max(top, w.address + kLineBytes);
        for (Addr a : t.read_set) top = std::max(top, a + kLineBytes);
      }
      assign_logs(*stream, {(top + kPageBytes - 1) / kPageBytes * kPageBytes});
    } else {
      stream = std::make_shared<TxnStream>(generate(spec));
    }
    if (!cfg.trace_out.empty()) {
      std::ofstream out(cfg.trace_out);
      if (!out) throw std::runtime_error("cannot write " + cfg.trace_out);
      write_trace(out, *stream);
    }
    for (CellConfig& c : cells) c.stream = stream;
  }

  std::vector<ReportRow> rows;
  if (!cfg.event_log.empty()) {
    if (cells.size() != 1) throw UsageError("--event-log needs a single cell");
    std::ofstream log(cfg.event_log);
    if (!log) throw std::runtime_error("cannot write " + cfg.event_log);
    rows.push_back({cells.front().key, run_cell(cells.front(), CellObservers{nullptr, &log})});
  } else {
    rows = run_sweep(cells, !serial);
  }

  std::ofstream file;
  std::ostream& out = open_out(cfg.out, file);
  emit_csv(out, rows);
  return kOk;
}

/// Modes that promise every crash point recovers to the pre- or post-image.
bool promises_consistency(const Config& cfg, Mode m) {
  return m != Mode::SecPmNoCwt && cfg.staging_register;
}

int cmd_crashcheck(const Config& cfg, bool serial, bool strict) {
  if (cfg.modes.size() != 1) throw UsageError("crashcheck takes exactly one --mode");
  if (cfg.txn_sizes.size() != 1) throw UsageError("crashcheck takes exactly one --txn-size");
  const Mode mode = cfg.modes.front();
  const auto plan = crash::CrashPlan::parse(cfg.crash, cfg.seed);
  if (!plan) throw UsageError("invalid crash plan " + cfg.crash);

  ControllerConfig cc = expand_cells(cfg).front().controller_config(64ULL << 20);
  crash::Scenario scenario;
  switch (cfg.scope) {
    case CrashScope::Txn: {
      const std::size_t lines = cfg.txn_sizes.front() / kLineBytes;
      scenario = crash::txn_scenario(crash::make_contiguous_txn(1, 0, lines, 32ULL << 20, cfg.seed), cc, cfg.seed);
      break;
    }
    case CrashScope::Atomic:
      scenario = crash::atomic_write_scenario(5 * kLineBytes, cc, cfg.seed);
      break;
    case CrashScope::Reencrypt:
      if (!is_secure(mode)) throw UsageError("re-encryption scope needs an encrypted mode");
      scenario = crash::reencryption_scenario(3, 7, cc, cfg.seed);
      break;
  }

  std::vector<crash::CrashResult> results;
  try {
    results = crash::inject(*plan, scenario, !serial);
  } catch (const std::out_of_range& e) {
    throw UsageError(e.what());
  }
  const auto verdicts = crash::flatten_verdicts(results);

  std::ofstream file;
  std::ostream& out = open_out(cfg.out, file);
  write_verdicts_csv(out, verdicts);

  std::size_t bad = 0;
  for (const RecoveryVerdict& v : verdicts) bad += v.outcome == Outcome::Inconsistent;
  const bool promised = strict || promises_consistency(cfg, mode);
  std::cerr << "mode=" << to_string(mode) << " scope=" << to_string(cfg.scope) << " plan=" << plan->render()
            << " crash_points=" << results.size() << " inconsistent=" << bad;
  if (bad && !promised) std::cerr << " EXPECTED";
  std::cerr << '\n';
  return bad && promised ? kViolation : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secure persistent memory simulator"};
  app.require_subcommand(1);

  Flags run_flags, crash_flags;
  CLI::App* run = app.add_subcommand("run", "run workloads and write a statistics CSV");
  add_common(*run, run_flags);
  run_flags.add(*run, "--trace-in", "trace_in", "replay a TXN trace instead of generating");
  run_flags.add(*run, "--trace-out", "trace_out", "write the generated TXN trace");

  CLI::App* check = app.add_subcommand("crashcheck", "enumerate crash points and verify recovery");
  add_common(*check, crash_flags);
  crash_flags.add(*check, "--crash", "crash", "exhaustive | random:N | at:K");
  crash_flags.add(*check, "--scope", "scope", "txn | atomic | reencrypt");
  check->add_flag("--strict", crash_flags.strict, "treat any inconsistent verdict as a violation, whatever the mode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  const bool is_run = run->parsed();
  const Flags& flags = is_run ? run_flags : crash_flags;
  try {
    const Config cfg = resolve(flags);
    if (flags.print_config) {
      std::cout << render(cfg);
      return kOk;
    }
    return is_run ? cmd_run(cfg, flags.serial) : cmd_crashcheck(cfg, flags.serial, flags.strict);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}
