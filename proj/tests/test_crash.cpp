#include <doctest.h>

#include "secpm/crash.hpp"

using namespace secpm;
using namespace secpm::crash;

namespace {

ControllerConfig config(Mode m) {
  ControllerConfig c;
  c.mode = m;
  c.data_bytes = 64ULL << 20;
  return c;
}

std::size_t inconsistent(const std::vector<CrashResult>& rs) {
  std::size_t n = 0;
  for (const RecoveryVerdict& v : flatten_verdicts(rs)) n += v.outcome == Outcome::Inconsistent;
  return n;
}

}  // namespace

TEST_SUITE("crash") {
  TEST_CASE("plan parsing") {
    CHECK(CrashPlan::parse("exhaustive")->strategy == CrashPlan::Strategy::Exhaustive);
    const auto r = CrashPlan::parse("random:12", 5);
    REQUIRE(r);
    CHECK(r->count == 12);
    CHECK(r->seed == 5);
    CHECK(CrashPlan::parse("at:3")->index == 3);
    CHECK(CrashPlan::parse("at:3")->render() == "at:3");
    CHECK_FALSE(CrashPlan::parse("at:"));
    CHECK_FALSE(CrashPlan::parse("random:x"));
    CHECK_FALSE(CrashPlan::parse("sometimes"));
  }

  TEST_CASE("crash point selection") {
    CHECK(crash_points(CrashPlan{}, 3) == std::vector<std::uint64_t>{0, 1, 2, 3});
    CrashPlan at{CrashPlan::Strategy::AtEvent, 2};
    CHECK(crash_points(at, 3) == std::vector<std::uint64_t>{2});
    at.index = 4;
    CHECK_THROWS_AS(crash_points(at, 3), std::out_of_range);
    CrashPlan rnd{CrashPlan::Strategy::Random, 0, 5, 9};
    const auto pts = crash_points(rnd, 100);
    CHECK(pts.size() == 5);
    CHECK(std::is_sorted(pts.begin(), pts.end()));
    CHECK(std::adjacent_find(pts.begin(), pts.end()) == pts.end());
    CHECK(pts == crash_points(rnd, 100));
    rnd.count = 1000;
    CHECK(crash_points(rnd, 10).size() == 11);
  }

  TEST_CASE("replay is deterministic") {
    const Scenario s = txn_scenario(make_contiguous_txn(1, 0, 4, 1 << 20), config(Mode::SecPm));
    const std::uint64_t n = count_events(s);
    REQUIRE(n > 10);
    for (std::uint64_t k : {std::uint64_t{0}, n / 2, n}) {
      const CrashResult a = replay_to(s, k), b = replay_to(s, k);
      CHECK(a.snapshot == b.snapshot);
      CHECK(a.stage == b.stage);
      CHECK(a.last_event == b.last_event);
    }
    // more events => the snapshot eventually differs from the first one
    CHECK_FALSE(replay_to(s, 0).snapshot == replay_to(s, n).snapshot);
  }

  TEST_CASE("parallel injection matches the serial reference") {
    for (Mode m : {Mode::SecPmNoCwt, Mode::SecPm}) {
      const Scenario s = txn_scenario(make_contiguous_txn(1, 0, 4, 1 << 20), config(m));
      const auto a = inject_serial(CrashPlan{}, s);
      const auto b = inject_parallel(CrashPlan{}, s);
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].crash_point == b[i].crash_point);
        CHECK(a[i].snapshot == b[i].snapshot);
        CHECK(a[i].verdicts == b[i].verdicts);
      }
    }
  }

  TEST_CASE("PREPARE crashes always recover; SECPM recovers everywhere") {
    for (Mode m : {Mode::UnsecPm, Mode::SecPmNoCwt, Mode::SecPmNoCwr, Mode::SecPm}) {
      const auto rs = inject(CrashPlan{}, txn_scenario(make_contiguous_txn(1, 0, 4, 1 << 20), config(m)));
      for (const RecoveryVerdict& v : flatten_verdicts(rs)) {
        if (v.stage == TxnStage::Prepare || v.stage == TxnStage::None) CHECK(v.outcome == Outcome::RolledBack);
      }
      if (m != Mode::SecPmNoCwt) CHECK(inconsistent(rs) == 0);
    }
  }

  TEST_CASE("logless atomic write depends on the staging register") {
    ControllerConfig c = config(Mode::SecPm);
    c.staging_register = false;
    CHECK(inconsistent(inject(CrashPlan{}, atomic_write_scenario(5 * 64, c))) >= 1);
    c.staging_register = true;
    CHECK(inconsistent(inject(CrashPlan{}, atomic_write_scenario(5 * 64, c))) == 0);
  }

  TEST_CASE("enumerate_crash_points limits and results") {
    const auto v = enumerate_crash_points(make_contiguous_txn(1, 0, 2, 1 << 20), config(Mode::SecPm));
    CHECK(!v.empty());
    for (const auto& x : v) CHECK(x.outcome != Outcome::Inconsistent);
    CHECK_THROWS(enumerate_crash_points(make_contiguous_txn(1, 0, 65, 1 << 20), config(Mode::SecPm)));
  }

  TEST_CASE("fill_line is deterministic and never zero") {
    CHECK(fill_line(64, 3) == fill_line(64, 3));
    CHECK(fill_line(64, 3) != fill_line(128, 3));
    CHECK(fill_line(0, 0) != kZeroLine);
  }
}
