#include <doctest.h>

#include <list>
#include <random>
#include <vector>

#include "secpm/counters.hpp"
#include "secpm/write_queue.hpp"

using namespace secpm;

namespace {

// Reference LRU: per set, a recency list (front = most recent).
class LruOracle {
 public:
  LruOracle(std::size_t sets, std::size_t ways) : sets_(sets), ways_(ways), lists_(sets) {}
  bool access(Addr a) {
    auto& l = lists_[(a / 64) % sets_];
    for (auto it = l.begin(); it != l.end(); ++it) {
      if (*it == a) {
        l.erase(it);
        l.push_front(a);
        return true;
      }
    }
    l.push_front(a);
    if (l.size() > ways_) l.pop_back();
    return false;
  }

 private:
  std::size_t sets_, ways_;
  std::vector<std::list<Addr>> lists_;
};

}  // namespace

TEST_SUITE("counters") {
  TEST_CASE("serialized layout: LE major then 7-bit minors LSB first") {
    CounterLine c;
    c.major = 0x1122334455667788ULL;
    for (std::size_t i = 0; i < kLinesPerPage; ++i) c.minors[i] = static_cast<std::uint8_t>((i * 37 + 5) & 0x7f);
    const Line raw = c.serialize();
    CHECK(raw[0] == 0x88);
    CHECK(raw[7] == 0x11);
    for (std::size_t i = 0; i < kLinesPerPage; ++i) {
      unsigned v = 0;
      for (unsigned bit = 0; bit < 7; ++bit) {
        const std::size_t pos = 64 + 7 * i + bit;
        v |= ((raw[pos / 8] >> (pos % 8)) & 1U) << bit;
      }
      CHECK(v == c.minors[i]);
    }
    CHECK(CounterLine::deserialize(raw) == c);
  }

  TEST_CASE("serialize round trip on random lines") {
    std::mt19937_64 rng(11);
    for (int n = 0; n < 1000; ++n) {
      CounterLine c;
      c.major = rng();
      for (auto& m : c.minors) m = static_cast<std::uint8_t>(rng() & 0x7f);
      REQUIRE(CounterLine::deserialize(c.serialize()) == c);
    }
  }

  TEST_CASE("locate_counter") {
    const auto map = CounterAddressMap::for_data_bytes(1 << 20);
    CHECK(locate_counter(map, 0) == CounterLocation{map.counter_region_base, 0});
    CHECK(locate_counter(map, 63 * 64) == CounterLocation{map.counter_region_base, 63});
    CHECK(locate_counter(map, 5 * 4096 + 7 * 64) == CounterLocation{map.counter_region_base + 320, 7});
    CHECK_THROWS_AS(locate_counter(map, map.data_end()), AddressError);
    CHECK_THROWS_AS(locate_counter(map, 65), AddressError);
    CHECK(map.counter_region_base >= map.data_end());
    CHECK(!map.in_data_region(map.counter_region_base));
  }

  TEST_CASE("increment_minor overflows on the 128th increment") {
    CounterLine c;
    c.major = 9;
    for (int i = 1; i <= 127; ++i) {
      auto n = increment_minor(c, 3);
      REQUIRE(n);
      c = *n;
      CHECK(c.minors[3] == i);
      CHECK(c.major == 9);
    }
    CHECK_FALSE(increment_minor(c, 3));
    CHECK(increment_minor(c, 4));
  }

  TEST_CASE("cache hit and miss basics") {
    CounterCache cache(1 << 20, 8);
    CHECK(cache.capacity_lines() == 16384);
    CHECK_FALSE(cache.lookup(640));
    CounterLine c;
    c.major = 3;
    cache.insert(640, c);
    auto hit = cache.lookup(640);
    REQUIRE(hit);
    CHECK(*hit == c);
    CHECK(cache.hits() == 1);
    CHECK(cache.misses() == 1);
  }

  TEST_CASE("filling a set with ways+1 lines evicts the least recently used") {
    CounterCache cache(64 * 8 * 4, 8);  // 4 sets
    const std::size_t sets = cache.sets();
    std::vector<Addr> same_set;
    for (std::size_t i = 0; i < 9; ++i) same_set.push_back((i * sets + 1) * 64);
    for (std::size_t i = 0; i < 8; ++i) cache.insert(same_set[i], {});
    cache.lookup(same_set[0]);  // refresh 0; 1 becomes the LRU
    auto ev = cache.insert(same_set[8], {});
    REQUIRE(ev);
    CHECK(ev->address == same_set[1]);
    CHECK_FALSE(cache.lookup(same_set[1]));
    CHECK(cache.lookup(same_set[0]));
  }

  TEST_CASE("hit/miss sequence matches a reference LRU on random traces") {
    for (std::size_t ways : {1u, 2u, 8u}) {
      CounterCache cache(64 * ways * 16, ways);
      LruOracle oracle(cache.sets(), ways);
      std::mt19937_64 rng(ways);
      for (int i = 0; i < 20000; ++i) {
        const Addr a = (rng() % 400) * 64;
        const bool hit = cache.lookup(a).has_value();
        if (!hit) cache.insert(a, {});
        REQUIRE(hit == oracle.access(a));
        REQUIRE(cache.size() <= cache.capacity_lines());
      }
    }
  }

  TEST_CASE("write_through updates the cache and queues a counter entry") {
    CounterCache cache(1 << 16, 8);
    WriteQueue q(32, true);
    CounterLine c;
    c.minors[1] = 1;
    write_through(cache, q, 128, c, 10);
    CHECK(cache.lookup(128) == c);
    REQUIRE(q.size() == 1);
    CHECK(q.front().origin == Origin::Counter);
    CHECK(q.front().payload == c.serialize());
    c.minors[2] = 1;
    write_through(cache, q, 128, c, 20);
    CHECK(q.size() == 1);  // merged
    CHECK(q.front().payload == c.serialize());
    CHECK(cache.dirty_entries().empty());
  }
}
