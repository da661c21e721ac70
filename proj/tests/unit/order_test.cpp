#include <doctest.h>

#include <random>

#include "lazydict/order.hpp"

using namespace lazydict;

TEST_CASE("compare follows key order and counts once per call") {
  ComparisonCounter c;
  CHECK(compare(Entry{3, 0, 0}, Entry{5, 1, 0}, c) == Ordering::Less);
  CHECK(compare(Entry{7, 2, 0}, Entry{7, 9, 0}, c) == Ordering::Less);  // seq tie-break
  CHECK(compare(Entry{7, 9, 0}, Entry{7, 2, 0}, c) == Ordering::Greater);
  CHECK(c.value() == 3);

  for (int i = 0; i < 10; ++i) compare(Entry{1, 0, 0}, Entry{2, 1, 0}, c);
  CHECK(c.value() == 13);
}

TEST_CASE("snapshot_and_reset") {
  ComparisonCounter c;
  CHECK(c.snapshot_and_reset() == 0);
  compare(Entry{1, 0, 0}, Entry{2, 1, 0}, c);
  compare(Entry{1, 0, 0}, Entry{2, 1, 0}, c);
  compare(Entry{1, 0, 0}, Entry{2, 1, 0}, c);
  CHECK(c.snapshot_and_reset() == 3);
  CHECK(c.value() == 0);
  CHECK(c.snapshot_and_reset() == 0);  // no compares in between
}

TEST_CASE("strict total order properties over random triples") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<Key> keys(0, 20);  // force key collisions
  ComparisonCounter c;
  for (int trial = 0; trial < 2000; ++trial) {
    Entry a{keys(rng), rng() % 50, 0};
    Entry b{keys(rng), rng() % 50, 0};
    Entry d{keys(rng), rng() % 50, 0};
    if (a.seq == b.seq || b.seq == d.seq || a.seq == d.seq) continue;

    // antisymmetry
    CHECK(compare(a, b, c) != compare(b, a, c));
    // determinism
    CHECK(compare(a, b, c) == compare(a, b, c));
    // transitivity
    if (less(a, b, c) && less(b, d, c)) CHECK(less(a, d, c));
  }
}

TEST_CASE("make_entry stamps unique sequence numbers") {
  Entry a = make_entry(1);
  Entry b = make_entry(1);
  CHECK(a.seq != b.seq);
  CHECK(a.seq >= 1);
}
