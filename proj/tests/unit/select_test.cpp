#include <doctest.h>

#include <random>

#include "lazydict/select.hpp"
#include "support/test_util.hpp"

using namespace lazydict;
using lazydict::testing::SyntheticTree;
using lazydict::testing::same_entry_set;
using lazydict::testing::sorted_by_order;

namespace {

std::vector<Entry> oracle_k_smallest(const SyntheticTree& t, std::size_t k) {
  auto sorted = sorted_by_order(t.all_entries());
  if (k < sorted.size()) sorted.resize(k);
  return sorted;
}

std::uint64_t structure_hash(const SyntheticTree& t) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  for (const auto& kids : t.children_) {
    mix(kids.size());
    for (auto c : kids) mix(c);
  }
  for (const auto& e : t.entries_) {
    mix(static_cast<std::uint64_t>(e.key));
    mix(e.seq);
  }
  return h;
}

}  // namespace

TEST_CASE("path tree chain selection") {
  // 1 -> 2 -> 3 as a chain.
  SyntheticTree t;
  for (Key k : {1, 2, 3}) {
    t.entries_.push_back(make_entry(k));
    t.children_.emplace_back();
  }
  t.children_[0].push_back(1);
  t.children_[1].push_back(2);

  ComparisonCounter c;
  auto got = soft_select(t, 2, c);
  CHECK(same_entry_set(got, oracle_k_smallest(t, 2)));
}

TEST_CASE("selection equals flatten-and-sort oracle on random trees") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 60; ++trial) {
    std::size_t n = 1 + rng() % 200;
    SyntheticTree t = SyntheticTree::random(n, rng, 500);  // duplicate keys likely
    std::size_t k = rng() % (n + 2);
    ComparisonCounter c;
    SelectionStats stats;
    auto got = soft_select(t, k, c, &stats);
    CHECK(same_entry_set(got, oracle_k_smallest(t, k)));
    CHECK(stats.expanded_nodes <= 3 * k);
  }
}

TEST_CASE("k = 0 and k >= size edge cases") {
  std::mt19937_64 rng(55);
  SyntheticTree t = SyntheticTree::random(37, rng);
  ComparisonCounter c;
  CHECK(soft_select(t, 0, c).empty());
  auto all = soft_select(t, 37, c);
  CHECK(same_entry_set(all, t.all_entries()));
  auto over = soft_select(t, 1000, c);
  CHECK(same_entry_set(over, t.all_entries()));
}

TEST_CASE("degree sum bounded on complete d-ary trees") {
  std::mt19937_64 rng(77);
  SyntheticTree t = SyntheticTree::complete(4, 4, rng);
  for (std::size_t k : {1u, 5u, 20u, 64u}) {
    ComparisonCounter c;
    SelectionStats stats;
    soft_select(t, k, c, &stats);
    CHECK(stats.degree_sum <= 3 * k * 4);  // D(T,3k) = 4*(3k) for a 4-ary tree
  }
}

TEST_CASE("increasing-degree tree: root path degree sum is k(k+3)/2") {
  std::mt19937_64 rng(13);
  SyntheticTree t = SyntheticTree::increasing_degree(6, rng);
  // Walk one root path, summing degrees.
  std::size_t node = 0;
  std::size_t sum = 0;
  std::size_t k = 0;
  while (k < 6 && !t.children_[node].empty()) {
    sum += t.children_[node].size();
    node = t.children_[node][0];
    ++k;
    CHECK(sum == k * (k + 3) / 2);
  }
  CHECK(k == 6);
}

TEST_CASE("selection is pure: same result twice, structure untouched") {
  std::mt19937_64 rng(99);
  SyntheticTree t = SyntheticTree::random(150, rng);
  std::uint64_t before = structure_hash(t);
  ComparisonCounter c;
  auto a = soft_select(t, 40, c);
  auto b = soft_select(t, 40, c);
  CHECK(same_entry_set(a, b));
  CHECK(structure_hash(t) == before);
}

TEST_CASE("select_k_of_sequence") {
  ComparisonCounter c;
  std::vector<Entry> s{make_entry(9), make_entry(1), make_entry(5), make_entry(3)};

  auto two = select_k_of_sequence(s, 2, c);
  REQUIRE(two.size() == 2);
  auto sorted = sorted_by_order(two);
  CHECK(sorted[0].key == 1);
  CHECK(sorted[1].key == 3);

  CHECK(select_k_of_sequence(s, 0, c).empty());
  CHECK(select_k_of_sequence(s, 4, c).size() == 4);
  CHECK(select_k_of_sequence(s, 99, c).size() == 4);
}

TEST_CASE("select_k_of_sequence against sorting oracle, linear comparisons") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<Key> keys(0, 1000);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t n = 1 + rng() % 400;
    std::vector<Entry> s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(make_entry(keys(rng)));
    std::size_t k = rng() % (n + 1);
    ComparisonCounter c;
    auto got = select_k_of_sequence(s, k, c);
    auto want = sorted_by_order(s);
    want.resize(k);
    CHECK(same_entry_set(got, want));
    CHECK(c.value() <= 64 * n + 64);  // deterministic linear selection
  }
}
