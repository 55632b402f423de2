#include "secpm/config.hpp"

#include "secpm/crash.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

namespace secpm {

std::string_view to_string(CrashScope s) {
  switch (s) {
    case CrashScope::Txn: return "txn";
    case CrashScope::Atomic: return "atomic";
    case CrashScope::Reencrypt: return "reencrypt";
  }
  return "?";
}

std::optional<CrashScope> parse_scope(std::string_view s) {
  for (CrashScope c : {CrashScope::Txn, CrashScope::Atomic, CrashScope::Reencrypt}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

[[noreturn]] void bad(std::string_view key, std::string_view value) {
  throw ConfigError("invalid value for " + std::string(key) + ": '" + std::string(value) + "'");
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) bad(key, v);
  return x;
}

double parse_double(std::string_view key, std::string_view v) {
  double x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size() || !(x >= 0)) bad(key, v);
  return x;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  bad(key, v);
}

template <class T, class F>
std::vector<T> parse_list(std::string_view key, std::string_view v, F one) {
  std::vector<T> out;
  for (std::string_view item : split(v)) out.push_back(one(item));
  if (out.empty()) bad(key, v);
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F one) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += one(xs[i]);
  }
  return s;
}

std::string fmt_double(double d) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, p);
}

}  // namespace

std::uint64_t parse_size(std::string_view text) {
  std::string_view t = trim(text);
  std::size_t digits = 0;
  while (digits < t.size() && std::isdigit(static_cast<unsigned char>(t[digits]))) ++digits;
  if (digits == 0) throw ConfigError("invalid size '" + std::string(text) + "'");
  const std::uint64_t n = parse_u64("size", t.substr(0, digits));
  std::string_view unit = t.substr(digits);
  std::uint64_t mult = 1;
  if (unit.empty() || unit == "B") mult = 1;
  else if (unit == "K" || unit == "KiB" || unit == "KB") mult = 1ULL << 10;
  else if (unit == "M" || unit == "MiB" || unit == "MB") mult = 1ULL << 20;
  else if (unit == "G" || unit == "GiB" || unit == "GB") mult = 1ULL << 30;
  else throw ConfigError("invalid size unit in '" + std::string(text) + "'");
  return n * mult;
}

void set_key(Config& c, std::string_view key, std::string_view value) {
  const std::string_view v = trim(value);
  auto size = [&](std::string_view item) {
    try {
      return static_cast<std::size_t>(parse_size(item));
    } catch (const ConfigError&) {
      bad(key, item);
    }
  };
  if (key == "mode") {
    c.modes = parse_list<Mode>(key, v, [&](std::string_view s) {
      auto m = parse_mode(s);
      if (!m) bad(key, s);
      return *m;
    });
  } else if (key == "workload") {
    c.workloads = parse_list<WorkloadKind>(key, v, [&](std::string_view s) {
      auto w = parse_workload(s);
      if (!w) bad(key, s);
      return *w;
    });
  } else if (key == "txn_size") {
    c.txn_sizes = parse_list<std::uint64_t>(key, v, [&](std::string_view s) {
      const std::uint64_t n = size(s);
      if (n == 0 || n % kLineBytes || n > kPageBytes) bad(key, s);
      return n;
    });
  } else if (key == "txn_count") {
    c.txn_count = parse_u64(key, v);
    if (c.txn_count == 0) bad(key, v);
  } else if (key == "queue_len") {
    c.queue_lens = parse_list<std::size_t>(key, v, [&](std::string_view s) {
      const auto n = static_cast<std::size_t>(parse_u64(key, s));
      if (n < 2) bad(key, s);  // a data/counter pair must fit
      return n;
    });
  } else if (key == "cache_size") {
    c.cache_sizes = parse_list<std::size_t>(key, v, [&](std::string_view s) {
      const std::size_t n = size(s);
      if (n < kLineBytes * c.cache_ways) bad(key, s);
      return n;
    });
  } else if (key == "cache_ways") {
    c.cache_ways = static_cast<std::size_t>(parse_u64(key, v));
    if (c.cache_ways == 0) bad(key, v);
  } else if (key == "cores") {
    c.cores = parse_list<std::size_t>(key, v, [&](std::string_view s) {
      const auto n = static_cast<std::size_t>(parse_u64(key, s));
      if (n == 0) bad(key, s);
      return n;
    });
  } else if (key == "seed") {
    c.seed = parse_u64(key, v);
  } else if (key == "register") {
    c.staging_register = parse_bool(key, v);
  } else if (key == "drain") {
    auto p = parse_drain_policy(v);
    if (!p) bad(key, v);
    c.drain = *p;
  } else if (key == "cpu_ns_per_txn") {
    c.cpu_ns_per_txn = static_cast<Nanos>(parse_u64(key, v));
  } else if (key == "cpu_ns_per_line") {
    c.cpu_ns_per_line = static_cast<Nanos>(parse_u64(key, v));
  } else if (key == "aes_ns") {
    c.aes_ns = static_cast<Nanos>(parse_u64(key, v));
  } else if (key == "cpu_ghz") {
    c.cpu_ghz = parse_double(key, v);
    if (c.cpu_ghz == 0) bad(key, v);
  } else if (key == "t_rcd") {
    c.timing.tRCD = parse_double(key, v);
  } else if (key == "t_cl") {
    c.timing.tCL = parse_double(key, v);
  } else if (key == "t_cwd") {
    c.timing.tCWD = parse_double(key, v);
  } else if (key == "t_faw") {
    c.timing.tFAW = parse_double(key, v);
  } else if (key == "t_wtr") {
    c.timing.tWTR = parse_double(key, v);
  } else if (key == "t_wr") {
    c.timing.tWR = parse_double(key, v);
  } else if (key == "crash") {
    if (!crash::CrashPlan::parse(v)) bad(key, v);
    c.crash = std::string(v);
  } else if (key == "scope") {
    auto s = parse_scope(v);
    if (!s) bad(key, v);
    c.scope = *s;
  } else if (key == "out") {
    c.out = std::string(v);
  } else if (key == "trace_in") {
    c.trace_in = std::string(v);
  } else if (key == "trace_out") {
    c.trace_out = std::string(v);
  } else if (key == "event_log") {
    c.event_log = std::string(v);
  } else {
    throw ConfigError("unknown key '" + std::string(key) + "'");
  }
}

Config parse_config(std::string_view text, Config base) {
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      set_key(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

std::string render(const Config& c) {
  std::ostringstream o;
  auto num = [](auto x) { return std::to_string(x); };
  o << "mode = " << join(c.modes, [](Mode m) { return std::string(to_string(m)); }) << '\n';
  o << "workload = " << join(c.workloads, [](WorkloadKind w) { return std::string(to_string(w)); }) << '\n';
  o << "txn_size = " << join(c.txn_sizes, num) << '\n';
  o << "txn_count = " << c.txn_count << '\n';
  o << "queue_len = " << join(c.queue_lens, num) << '\n';
  o << "cache_size = " << join(c.cache_sizes, num) << '\n';
  o << "cache_ways = " << c.cache_ways << '\n';
  o << "cores = " << join(c.cores, num) << '\n';
  o << "seed = " << c.seed << '\n';
  o << "register = " << (c.staging_register ? "true" : "false") << '\n';
  o << "drain = " << to_string(c.drain) << '\n';
  o << "cpu_ns_per_txn = " << c.cpu_ns_per_txn << '\n';
  o << "cpu_ns_per_line = " << c.cpu_ns_per_line << '\n';
  o << "aes_ns = " << c.aes_ns << '\n';
  o << "cpu_ghz = " << fmt_double(c.cpu_ghz) << '\n';
  o << "t_rcd = " << fmt_double(c.timing.tRCD) << '\n';
  o << "t_cl = " << fmt_double(c.timing.tCL) << '\n';
  o << "t_cwd = " << fmt_double(c.timing.tCWD) << '\n';
  o << "t_faw = " << fmt_double(c.timing.tFAW) << '\n';
  o << "t_wtr = " << fmt_double(c.timing.tWTR) << '\n';
  o << "t_wr = " << fmt_double(c.timing.tWR) << '\n';
  o << "crash = " << c.crash << '\n';
  o << "scope = " << to_string(c.scope) << '\n';
  // empty paths are written too so that a rendered file fully pins the config
  o << "out = " << c.out << '\n';
  o << "trace_in = " << c.trace_in << '\n';
  o << "trace_out = " << c.trace_out << '\n';
  o << "event_log = " << c.event_log << '\n';
  return o.str();
}

std::vector<CellConfig> expand_cells(const Config& c) {
  std::vector<CellConfig> cells;
  for (WorkloadKind w : c.workloads)
    for (std::uint64_t size : c.txn_sizes)
      for (std::size_t q : c.queue_lens)
        for (std::size_t cache : c.cache_sizes)
          for (std::size_t cores : c.cores)
            for (Mode m : c.modes) {
              CellConfig cell;
              cell.key = CellKey{w, m, size, q, cache, cores};
              cell.txn_count = c.txn_count;
              cell.seed = c.seed;
              cell.staging_register = c.staging_register;
              cell.drain = c.drain;
              cell.cache_ways = c.cache_ways;
              cell.timing = c.timing;
              cell.aes_ns = c.aes_ns;
              cell.cpu_ghz = c.cpu_ghz;
              cell.exec.cpu_ns_per_txn = c.cpu_ns_per_txn;
              cell.exec.cpu_ns_per_line = c.cpu_ns_per_line;
              cells.push_back(std::move(cell));
            }
  return cells;
}

}  // namespace secpm
