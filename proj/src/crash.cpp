#include "secpm/crash.hpp"

#include <algorithm>
#include <charconv>
#include <exception>
#include <numeric>
#include <random>
#include <stdexcept>

namespace secpm::crash {

namespace {

struct CrashSignal {};

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

}  // namespace

std::optional<CrashPlan> CrashPlan::parse(std::string_view text, std::uint64_t seed) {
  CrashPlan p;
  p.seed = seed;
  if (text == "exhaustive") return p;
  if (text.starts_with("random:")) {
    auto n = parse_u64(text.substr(7));
    if (!n || *n == 0) return std::nullopt;
    p.strategy = Strategy::Random;
    p.count = *n;
    return p;
  }
  if (text.starts_with("at:")) {
    auto k = parse_u64(text.substr(3));
    if (!k) return std::nullopt;
    p.strategy = Strategy::AtEvent;
    p.index = *k;
    return p;
  }
  return std::nullopt;
}

std::string CrashPlan::render() const {
  switch (strategy) {
    case Strategy::Exhaustive: return "exhaustive";
    case Strategy::Random: return "random:" + std::to_string(count);
    case Strategy::AtEvent: return "at:" + std::to_string(index);
  }
  return "?";
}

bool CrashResult::consistent() const {
  return std::none_of(verdicts.begin(), verdicts.end(),
                      [](const RecoveryVerdict& v) { return v.outcome == Outcome::Inconsistent; });
}

std::uint64_t count_events(const Scenario& s) {
  Controller c(s.config, s.key);
  const Nanos t = s.setup ? s.setup(c) : 0;
  std::uint64_t n = 0;
  c.set_boundary_hook([&n](Boundary, Nanos) { ++n; });
  BodyContext ctx{c, t, {}};
  s.body(ctx);
  return n;
}

std::vector<std::uint64_t> crash_points(const CrashPlan& plan, std::uint64_t event_count) {
  std::vector<std::uint64_t> all(event_count + 1);
  std::iota(all.begin(), all.end(), 0);
  switch (plan.strategy) {
    case CrashPlan::Strategy::Exhaustive:
      return all;
    case CrashPlan::Strategy::AtEvent:
      if (plan.index > event_count) throw std::out_of_range("crash point beyond the scenario's events");
      return {plan.index};
    case CrashPlan::Strategy::Random: {
      std::mt19937_64 rng(plan.seed);
      const std::size_t n = std::min<std::size_t>(plan.count, all.size());
      for (std::size_t i = 0; i < n; ++i) std::swap(all[i], all[i + rng() % (all.size() - i)]);
      all.resize(n);
      std::sort(all.begin(), all.end());
      return all;
    }
  }
  return all;
}

CrashResult replay_to(const Scenario& s, std::uint64_t crash_point) {
  CrashResult r;
  r.crash_point = crash_point;
  Controller c(s.config, s.key);
  const Nanos t = s.setup ? s.setup(c) : 0;
  BodyContext ctx{c, t, {}};
  if (crash_point == 0) {
    r.snapshot = c.crash_snapshot(t);
    return r;
  }
  std::uint64_t seen = 0;
  c.set_boundary_hook([&](Boundary b, Nanos now) {
    if (++seen != crash_point) return;
    r.snapshot = c.crash_snapshot(now);
    r.last_event = b;
    r.stage = ctx.stage ? ctx.stage() : TxnStage::None;
    throw CrashSignal{};
  });
  try {
    s.body(ctx);
  } catch (const CrashSignal&) {
    return r;
  }
  throw std::out_of_range("crash point beyond the scenario's events");
}

CrashResult run_point(const Scenario& s, std::uint64_t crash_point) {
  CrashResult r = replay_to(s, crash_point);
  Controller rc = Controller::recover_from(s.config, s.key, r.snapshot);
  const RecoveryReport rep = recover_logs(rc, s.log_regions, r.snapshot.timestamp);
  (void)rep;
  for (const TxnExpectation& e : s.expectations) {
    RecoveryVerdict v = judge(rc, e);
    v.crash_point = crash_point;
    v.stage = r.stage;
    r.verdicts.push_back(v);
  }
  return r;
}

std::vector<CrashResult> inject_serial(const CrashPlan& plan, const Scenario& s) {
  const auto points = crash_points(plan, count_events(s));
  std::vector<CrashResult> out;
  out.reserve(points.size());
  for (std::uint64_t k : points) out.push_back(run_point(s, k));
  return out;
}

std::vector<CrashResult> inject_parallel(const CrashPlan& plan, const Scenario& s) {
  const auto points = crash_points(plan, count_events(s));
  std::vector<CrashResult> out(points.size());
  std::exception_ptr failure;
  const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = run_point(s, points[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<CrashResult> inject(const CrashPlan& plan, const Scenario& s, bool parallel) {
  return parallel ? inject_parallel(plan, s) : inject_serial(plan, s);
}

std::vector<RecoveryVerdict> flatten_verdicts(const std::vector<CrashResult>& results) {
  std::vector<RecoveryVerdict> out;
  for (const CrashResult& r : results) out.insert(out.end(), r.verdicts.begin(), r.verdicts.end());
  return out;
}

Line fill_line(Addr address, std::uint64_t salt) {
  Line l;
  std::uint64_t x = address * 0x9e3779b97f4a7c15ULL ^ (salt + 0x632be59bd9b4e019ULL);
  for (std::size_t i = 0; i < kLineBytes; i += 8) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    store_le64(l.data() + i, z ^ (z >> 31));
  }
  l[0] |= 1;  // never the zero line
  return l;
}

TxnDescriptor make_contiguous_txn(std::uint64_t txn_id, Addr data_base, std::size_t lines, Addr log_base,
                                  std::uint64_t seed) {
  TxnDescriptor t;
  t.txn_id = txn_id;
  t.log_base = log_base;
  for (std::size_t i = 0; i < lines; ++i) {
    const Addr a = data_base + i * kLineBytes;
    t.write_set.push_back({a, fill_line(a, seed * 1000003 + txn_id)});
  }
  return t;
}

Scenario txn_scenario(const TxnDescriptor& txn, ControllerConfig cfg, std::uint64_t seed) {
  Scenario s;
  s.name = "txn";
  s.config = cfg;
  s.key = EncryptionKey::from_seed(seed);
  s.log_regions = {LogRegion{txn.log_base, txn.log_lines() * kLineBytes}};

  TxnExpectation e;
  e.txn_id = txn.txn_id;
  for (const LineWrite& w : txn.write_set) {
    e.addresses.push_back(w.address);
    e.pre.push_back(fill_line(w.address, seed));
    e.post.push_back(w.value);
  }
  s.expectations = {e};

  s.setup = [e](Controller& c) {
    Nanos t = 0;
    for (std::size_t i = 0; i < e.addresses.size(); ++i) t = c.handle_flush(e.addresses[i], e.pre[i], t);
    return c.quiesce(t);
  };
  s.body = [txn](BodyContext& ctx) {
    Executor ex(ctx.controller, 1);
    ex.set_start_time(ctx.start);
    ex.submit(0, txn);
    ctx.stage = [&ex] { return ex.stage(0); };
    const Nanos t = ex.run();
    ctx.controller.quiesce(t);
  };
  return s;
}

Scenario atomic_write_scenario(Addr address, ControllerConfig cfg, std::uint64_t seed) {
  Scenario s;
  s.name = "atomic";
  s.config = cfg;
  s.key = EncryptionKey::from_seed(seed);
  TxnExpectation e;
  e.addresses = {address};
  e.pre = {fill_line(address, seed)};
  e.post = {fill_line(address, seed + 1)};
  s.expectations = {e};
  s.setup = [e](Controller& c) { return c.quiesce(c.handle_flush(e.addresses[0], e.pre[0], 0)); };
  s.body = [e](BodyContext& ctx) {
    const Nanos t = ctx.controller.handle_flush(e.addresses[0], e.post[0], ctx.start);
    ctx.controller.quiesce(t);
  };
  return s;
}

Scenario reencryption_scenario(std::uint64_t page, std::size_t hot_line, ControllerConfig cfg, std::uint64_t seed) {
  Scenario s;
  s.name = "reencrypt";
  s.config = cfg;
  s.key = EncryptionKey::from_seed(seed);
  const Addr base = page * kPageBytes;
  const Addr hot = base + hot_line * kLineBytes;

  TxnExpectation e;
  for (std::size_t i = 0; i < kLinesPerPage; ++i) {
    const Addr a = base + i * kLineBytes;
    e.addresses.push_back(a);
    e.pre.push_back(fill_line(a, seed));
    e.post.push_back(fill_line(a, seed));
  }
  // first write leaves the minor at 1; 126 rewrites bring it to 127
  e.pre[hot_line] = fill_line(hot, seed + kMinorMax - 1);
  e.post[hot_line] = fill_line(hot, seed + kMinorMax);
  s.expectations = {e};

  s.setup = [base, hot, seed](Controller& c) {
    Nanos t = 0;
    for (std::size_t i = 0; i < kLinesPerPage; ++i) {
      const Addr a = base + i * kLineBytes;
      t = c.handle_flush(a, fill_line(a, seed), t);
    }
    for (std::uint64_t j = 1; j < kMinorMax; ++j) t = c.handle_flush(hot, fill_line(hot, seed + j), t);
    return c.quiesce(t);
  };
  s.body = [hot, seed](BodyContext& ctx) {
    const Nanos t = ctx.controller.handle_flush(hot, fill_line(hot, seed + kMinorMax), ctx.start);
    ctx.controller.quiesce(t);
  };
  return s;
}

}  // namespace secpm::crash

namespace secpm {

std::vector<RecoveryVerdict> enumerate_crash_points(const TxnDescriptor& txn, const ControllerConfig& cfg) {
  if (txn.write_set.size() > kLinesPerPage) {
    throw std::invalid_argument("exhaustive enumeration is limited to 64-line transactions");
  }
  const auto results = crash::inject(crash::CrashPlan{}, crash::txn_scenario(txn, cfg));
  return crash::flatten_verdicts(results);
}

}  // namespace secpm
