#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "secpm/experiment.hpp"

namespace secpm {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CrashScope { Txn, Atomic, Reencrypt };
std::string_view to_string(CrashScope s);
std::optional<CrashScope> parse_scope(std::string_view s);

/// Everything a run or crash check needs. List-valued fields are swept
/// (cross product, one cell per combination).
struct Config {
  std::vector<Mode> modes{Mode::SecPm};
  std::vector<WorkloadKind> workloads{WorkloadKind::Array};
  std::vector<std::uint64_t> txn_sizes{1024};
  std::uint64_t txn_count = 1000;  // per core
  std::vector<std::size_t> queue_lens{32};
  std::vector<std::size_t> cache_sizes{1 << 20};
  std::size_t cache_ways = 8;
  std::vector<std::size_t> cores{1};  // logical requesters; sweep 1,2,4,8 for throughput
  std::uint64_t seed = 1;

  bool staging_register = true;
  DrainPolicy drain = DrainPolicy::Idle;
  Nanos cpu_ns_per_txn = default_executor_options().cpu_ns_per_txn;
  Nanos cpu_ns_per_line = default_executor_options().cpu_ns_per_line;
  Nanos aes_ns = 40;
  double cpu_ghz = 2.0;
  NvmTiming timing;

  std::string crash = "exhaustive";
  CrashScope scope = CrashScope::Txn;

  std::string out;
  std::string trace_in;
  std::string trace_out;
  std::string event_log;

  friend bool operator==(const Config&, const Config&) = default;
};

/// "4096", "4K", "4KiB", "1M", "1MiB", "2GiB" -> bytes.
std::uint64_t parse_size(std::string_view text);

/// Flat `key = value` lines; `#` starts a comment. Keys absent from the
/// text keep their value from `base`. Throws ConfigError.
Config parse_config(std::string_view text, Config base = {});
std::string render(const Config& c);

/// Assigns one key (shared by the file parser and the command line).
void set_key(Config& c, std::string_view key, std::string_view value);

/// Cross product of the list-valued fields, in a fixed order.
std::vector<CellConfig> expand_cells(const Config& c);

}  // namespace secpm
