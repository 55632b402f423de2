#include <doctest.h>

#include <set>
#include <sstream>

#include "secpm/workloads.hpp"

using namespace secpm;

TEST_SUITE("workloads") {
  TEST_CASE("names round trip") {
    for (WorkloadKind k : kAllWorkloads) CHECK(parse_workload(to_string(k)) == k);
    CHECK_FALSE(parse_workload("skiplist"));
    CHECK(default_footprint(WorkloadKind::Array) == 1ULL << 30);
    CHECK(default_footprint(WorkloadKind::RBTree) == 2ULL << 30);
  }

  TEST_CASE("validation") {
    WorkloadSpec s;
    s.txn_size = 100;
    CHECK_THROWS(s.validate());
    s.txn_size = 8192;
    CHECK_THROWS(s.validate());
    s.txn_size = 64;
    CHECK_NOTHROW(s.validate());
  }

  TEST_CASE("generated streams: determinism, sizes, alignment, disjoint logs") {
    for (WorkloadKind k : kAllWorkloads) {
      for (std::uint64_t size : {64, 256, 1024, 4096}) {
        CAPTURE(to_string(k));
        CAPTURE(size);
        WorkloadSpec s{k, size, 200, 3};
        const TxnStream a = generate(s);
        CHECK(a == generate(s));
        s.seed = 4;
        CHECK_FALSE(a == generate(s));
        REQUIRE(a.size() == 200);
        const Addr log_base = default_log_layout(s).log_area_base;
        CHECK(log_base >= s.effective_footprint());
        Addr prev_log_end = log_base;
        for (const TxnDescriptor& t : a) {
          CHECK(t.write_set.size() == size / 64);
          std::set<Addr> uniq;
          for (const LineWrite& w : t.write_set) {
            CHECK(is_line_aligned(w.address));
            CHECK(w.address < s.effective_footprint());
            uniq.insert(w.address);
          }
          CHECK(uniq.size() == t.write_set.size());
          for (Addr r : t.read_set) CHECK(r < s.effective_footprint());
          CHECK(t.log_base == prev_log_end);
          prev_log_end = t.log_base + t.log_lines() * 64;
          CHECK_NOTHROW(log_format::header_for(t));
        }
        CHECK(prev_log_end <= required_data_bytes(s));
      }
    }
  }

  TEST_CASE("queue appends contiguously") {
    const TxnStream q = generate({WorkloadKind::Queue, 256, 10, 1});
    for (std::size_t i = 1; i < q.size(); ++i) {
      CHECK(q[i].write_set.front().address == q[i - 1].write_set.back().address + 64);
    }
  }

  TEST_CASE("trace round trip") {
    for (WorkloadKind k : kAllWorkloads) {
      const WorkloadSpec s{k, 256, 50, 8};
      const TxnStream a = generate(s);
      std::stringstream ss;
      write_trace(ss, a);
      const TxnStream b = read_trace(ss, 8, default_log_layout(s));
      CHECK(a == b);
    }
  }

  TEST_CASE("malformed traces are rejected") {
    for (const char* bad : {"TXN 1 WRITE zz 64\n", "TXN 1 WRITE 0x40 63\n", "TXN 1 ERASE 0x40 64\n", "hello\n"}) {
      std::istringstream in(bad);
      CHECK_THROWS_AS(read_trace(in, 1, {0}), std::runtime_error);
    }
  }
}
