#include <doctest.h>

#include <algorithm>
#include <random>

#include "lazydict/lazy_search_tree.hpp"
#include "support/test_util.hpp"

using namespace lazydict;
using lazydict::testing::sorted_by_order;

namespace {

// Sorted-vector reference dictionary.
struct DictOracle {
  std::vector<Entry> sorted;  // (key, seq) order

  void insert(const Entry& e) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), e, raw_less);
    sorted.insert(it, e);
  }
  void erase(std::uint64_t seq) {
    for (auto it = sorted.begin(); it != sorted.end(); ++it) {
      if (it->seq == seq) {
        sorted.erase(it);
        return;
      }
    }
    FAIL("oracle erase of unknown seq");
  }
  void change_key(std::uint64_t seq, Key nk) {
    Entry e{};
    for (auto& x : sorted) {
      if (x.seq == seq) {
        e = x;
        break;
      }
    }
    erase(seq);
    e.key = nk;
    insert(e);
  }
  Entry at_rank(std::size_t r) const { return sorted[r - 1]; }
  std::size_t count_leq_key(Key k) const {
    std::size_t c = 0;
    for (const auto& e : sorted) c += (e.key <= k);
    return c;
  }
  std::size_t count_lt_key(Key k) const {
    std::size_t c = 0;
    for (const auto& e : sorted) c += (e.key < k);
    return c;
  }
  std::size_t size() const { return sorted.size(); }
};

std::vector<Entry> entries_of(std::initializer_list<Key> keys) {
  std::vector<Entry> out;
  for (Key k : keys) out.push_back(make_entry(k));
  return out;
}

void check_valid(LazySearchTree& t) {
  auto issues = t.validate();
  CHECK(issues.empty());
  for (auto& s : issues) MESSAGE(s);
}

}  // namespace

TEST_CASE("construct basics") {
  LazySearchTree empty = LazySearchTree::construct({});
  CHECK(empty.size() == 0);
  CHECK(empty.gap_count() == 0);
  CHECK_THROWS_AS(empty.query_by_rank(1), std::out_of_range);

  auto t = LazySearchTree::construct(entries_of({5, 1, 9}));
  CHECK(t.size() == 3);
  CHECK(t.gap_count() == 1);
  CHECK(t.gap_sizes() == std::vector<std::size_t>{3});
  check_valid(t);
}

TEST_CASE("construct then select every rank matches the sorting oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<Key> keys(0, 5000);  // duplicates likely
  std::vector<Entry> items;
  DictOracle oracle;
  for (int i = 0; i < 3000; ++i) {
    Entry e = make_entry(keys(rng));
    items.push_back(e);
    oracle.insert(e);
  }
  auto t = LazySearchTree::construct(std::move(items));
  for (std::size_t r = 1; r <= oracle.size(); ++r) {
    Entry got = t.query_by_rank(r);
    Entry want = oracle.at_rank(r);
    REQUIRE(got.seq == want.seq);
  }
  check_valid(t);
}

TEST_CASE("query by rank splits the gap") {
  auto t = LazySearchTree::construct(entries_of({5, 1, 9}));
  Entry got = t.query_by_rank(2);
  CHECK(got.key == 5);
  CHECK(t.gap_sizes() == std::vector<std::size_t>{2, 1});
  check_valid(t);
}

TEST_CASE("repeated rank-1 queries leave the big gap left-sided and cheap") {
  std::mt19937_64 rng(7);
  std::vector<Entry> items;
  for (int i = 0; i < 2000; ++i) items.push_back(make_entry(static_cast<Key>(rng() % 100000)));
  auto sorted = sorted_by_order(items);
  auto t = LazySearchTree::construct(std::move(items));

  CHECK(t.query_by_rank(1).seq == sorted[0].seq);
  std::uint64_t after_first = t.counter().value();
  for (int i = 0; i < 200; ++i) CHECK(t.query_by_rank(1).seq == sorted[0].seq);
  // Subsequent min queries ride the existing boundary.
  CHECK(t.counter().value() - after_first <= 200 * 4);
  CHECK(t.gap_sizes().size() == 2);
  check_valid(t);
}

TEST_CASE("priority-queue pattern: query rank 1 then erase") {
  std::mt19937_64 rng(8);
  std::vector<Entry> items;
  for (int i = 0; i < 1500; ++i) items.push_back(make_entry(static_cast<Key>(rng() % 100000)));
  auto sorted = sorted_by_order(items);
  auto t = LazySearchTree::construct(std::move(items));
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    Entry got = t.query_by_rank(1);
    REQUIRE(got.seq == sorted[i].seq);
    t.erase(LazySearchTree::EntryRef{got.seq});
  }
  CHECK(t.empty());
}

TEST_CASE("query by key: examples") {
  auto t = LazySearchTree::construct(entries_of({1, 5, 9}));

  auto r5 = t.query_by_key(5);
  CHECK(r5.rank == 2);
  CHECK(r5.contains);

  auto r0 = t.query_by_key(0);
  CHECK(r0.rank == 0);
  CHECK_FALSE(r0.contains);
  CHECK_FALSE(r0.predecessor.has_value());
  REQUIRE(r0.successor.has_value());
  CHECK(r0.successor->key == 1);

  auto r6 = t.query_by_key(6);
  CHECK(r6.rank == 2);
  CHECK_FALSE(r6.contains);
  REQUIRE(r6.predecessor.has_value());
  CHECK(r6.predecessor->key == 5);
  REQUIRE(r6.successor.has_value());
  CHECK(r6.successor->key == 9);
  check_valid(t);
}

TEST_CASE("query by key against oracle on random data") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<Key> keys(0, 300);
  DictOracle oracle;
  std::vector<Entry> items;
  for (int i = 0; i < 800; ++i) {
    Entry e = make_entry(keys(rng));
    items.push_back(e);
    oracle.insert(e);
  }
  auto t = LazySearchTree::construct(std::move(items));
  for (int q = 0; q < 120; ++q) {
    Key k = keys(rng);
    auto res = t.query_by_key(k);
    std::size_t r1 = oracle.count_leq_key(k);
    std::size_t r0 = oracle.count_lt_key(k);
    CHECK(res.rank == r1);
    CHECK(res.contains == (r1 > r0));
    if (r0 >= 1) {
      REQUIRE(res.predecessor.has_value());
      CHECK(res.predecessor->seq == oracle.at_rank(r0).seq);
    } else {
      CHECK_FALSE(res.predecessor.has_value());
    }
    if (r1 < oracle.size()) {
      REQUIRE(res.successor.has_value());
      CHECK(res.successor->seq == oracle.at_rank(r1 + 1).seq);
    } else {
      CHECK_FALSE(res.successor.has_value());
    }
  }
  check_valid(t);
}

TEST_CASE("inserts route into existing gaps") {
  std::mt19937_64 rng(17);
  std::vector<Entry> items;
  DictOracle oracle;
  for (int i = 0; i < 500; ++i) {
    Entry e = make_entry(static_cast<Key>(rng() % 10000));
    items.push_back(e);
    oracle.insert(e);
  }
  auto t = LazySearchTree::construct(std::move(items));
  t.query_by_rank(100);
  t.query_by_rank(300);
  for (int i = 0; i < 500; ++i) {
    Entry e = make_entry(static_cast<Key>(rng() % 10000));
    oracle.insert(e);
    t.insert_entry(e);
  }
  check_valid(t);
  for (int q = 0; q < 50; ++q) {
    std::size_t r = 1 + rng() % oracle.size();
    CHECK(t.query_by_rank(r).seq == oracle.at_rank(r).seq);
  }
  check_valid(t);
}

TEST_CASE("change_key fast paths and rejections") {
  std::mt19937_64 rng(19);
  std::vector<Entry> items;
  for (int i = 0; i < 400; ++i) items.push_back(make_entry(static_cast<Key>(i * 10)));
  auto t = LazySearchTree::construct(std::move(items));

  // Left-sided gap: decrease-key is cheap and visible via rank 1.
  Entry mn = t.query_by_rank(1);
  t.erase(LazySearchTree::EntryRef{mn.seq});  // single left-sided gap remains
  auto ref = t.insert(3555);
  t.counter().snapshot_and_reset();
  t.change_key(ref, -100);
  CHECK(t.counter().value() <= 12);
  CHECK(t.query_by_rank(1).seq == ref.seq);
  // Decreasing below the gap's lower separator is an out-of-gap move.
  auto blocked = t.insert(3556);
  CHECK_THROWS_AS(t.change_key(blocked, -200), OutOfGapError);

  // Out-of-gap move is rejected.
  Entry mid = t.query_by_rank(200);
  auto ref2 = t.insert(mid.key + 1);
  CHECK_THROWS_AS(t.change_key(ref2, mid.key - 5000), OutOfGapError);
  // Fallback: erase + reinsert under the same seq.
  Entry cur = t.entry_of(ref2);
  t.erase(ref2);
  cur.key = mid.key - 5000;
  t.insert_entry(cur);
  CHECK(t.ref_live(LazySearchTree::EntryRef{cur.seq}));
  check_valid(t);

  CHECK_THROWS_AS(t.change_key(LazySearchTree::EntryRef{999999999}, 1), HandleError);
}

TEST_CASE("change_key inside a two-sided gap reroutes thirds") {
  std::mt19937_64 rng(23);
  std::vector<Entry> items;
  for (int i = 0; i < 900; ++i) items.push_back(make_entry(static_cast<Key>(rng() % 100000)));
  auto t = LazySearchTree::construct(std::move(items));
  // Make a large two-sided gap: split interior twice.
  t.query_by_rank(300);
  t.query_by_rank(600);
  check_valid(t);

  DictOracle oracle;
  for (const Entry& e : t.entries_in_order()) oracle.insert(e);

  // Random in-gap key changes, validated against the oracle.
  auto entries = t.entries_in_order();
  for (int i = 0; i < 2000; ++i) {
    const Entry& pick = entries[rng() % entries.size()];
    if (!t.ref_live(LazySearchTree::EntryRef{pick.seq})) continue;
    Key nk = static_cast<Key>(rng() % 100000);
    try {
      t.change_key(LazySearchTree::EntryRef{pick.seq}, nk);
      oracle.change_key(pick.seq, nk);
    } catch (const OutOfGapError&) {
      Entry cur = t.entry_of(LazySearchTree::EntryRef{pick.seq});
      t.erase(LazySearchTree::EntryRef{pick.seq});
      cur.key = nk;
      t.insert_entry(cur);
      oracle.change_key(pick.seq, nk);
    }
    entries = t.entries_in_order();
    if (i % 256 == 0) check_valid(t);
  }
  check_valid(t);
  for (std::size_t r = 1; r <= oracle.size(); r += 37) {
    CHECK(t.query_by_rank(r).seq == oracle.at_rank(r).seq);
  }
}

TEST_CASE("erase basics") {
  auto t = LazySearchTree::construct({});
  auto ref = t.insert(42);
  CHECK(t.size() == 1);
  t.erase(ref);
  CHECK(t.empty());
  CHECK_THROWS_AS(t.erase(ref), HandleError);

  // Delete then query the old rank: the successor fills in.
  auto u = LazySearchTree::construct(entries_of({10, 20, 30, 40}));
  Entry r2 = u.query_by_rank(2);
  CHECK(r2.key == 20);
  u.erase(LazySearchTree::EntryRef{r2.seq});
  CHECK(u.query_by_rank(2).key == 30);
  check_valid(u);
}

TEST_CASE("random insert/erase interleavings match the oracle") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<Key> keys(0, 100000);
  LazySearchTree t;
  DictOracle oracle;
  std::vector<std::uint64_t> live;
  for (int op = 0; op < 10000; ++op) {
    int what = static_cast<int>(rng() % 10);
    if (live.empty() || what < 5) {
      auto ref = t.insert(keys(rng));
      oracle.insert(t.entry_of(ref));
      live.push_back(ref.seq);
    } else if (what < 8) {
      std::size_t i = rng() % live.size();
      t.erase(LazySearchTree::EntryRef{live[i]});
      oracle.erase(live[i]);
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(i));
    } else if (!oracle.sorted.empty()) {
      std::size_t r = 1 + rng() % oracle.size();
      CHECK(t.query_by_rank(r).seq == oracle.at_rank(r).seq);
    }
    if (op % 512 == 0) check_valid(t);
  }
  check_valid(t);
}

TEST_CASE("split at edges and random points") {
  auto t0 = LazySearchTree::construct(entries_of({3, 1, 2}));
  auto [a, b] = std::move(t0).split(0);
  CHECK(a.empty());
  CHECK(b.size() == 3);

  auto [c, d] = std::move(b).split(3);
  CHECK(c.size() == 3);
  CHECK(d.empty());

  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<Entry> items;
    DictOracle oracle;
    std::size_t n = 200 + rng() % 800;
    for (std::size_t i = 0; i < n; ++i) {
      Entry e = make_entry(static_cast<Key>(rng() % 5000));
      items.push_back(e);
      oracle.insert(e);
    }
    auto t = LazySearchTree::construct(std::move(items));
    // Exercise some structure first.
    t.query_by_rank(1 + rng() % n);
    std::size_t r = 1 + rng() % (n - 1);
    auto [l, rgt] = std::move(t).split(r);
    CHECK(l.size() == r);
    CHECK(rgt.size() == n - r);
    check_valid(l);
    check_valid(rgt);
    auto ls = l.entries_in_order();
    auto rs = rgt.entries_in_order();
    std::vector<Entry> joined = ls;
    joined.insert(joined.end(), rs.begin(), rs.end());
    REQUIRE(joined.size() == oracle.size());
    for (std::size_t i = 0; i < joined.size(); ++i) {
      CHECK(joined[i].seq == oracle.sorted[i].seq);
    }
  }
}

TEST_CASE("merge of disjoint ranges") {
  LazySearchTree empty;
  auto t = LazySearchTree::construct(entries_of({1, 2, 3}));
  auto merged0 = LazySearchTree::merge(std::move(empty), std::move(t));
  CHECK(merged0.size() == 3);

  std::mt19937_64 rng(61);
  std::vector<Entry> lo_items, hi_items;
  DictOracle oracle;
  for (int i = 0; i < 400; ++i) {
    Entry e = make_entry(static_cast<Key>(rng() % 1000) + 1);
    lo_items.push_back(e);
    oracle.insert(e);
  }
  for (int i = 0; i < 300; ++i) {
    Entry e = make_entry(static_cast<Key>(rng() % 1000) + 10001);
    hi_items.push_back(e);
    oracle.insert(e);
  }
  auto t1 = LazySearchTree::construct(std::move(lo_items));
  auto t2 = LazySearchTree::construct(std::move(hi_items));
  t1.query_by_rank(100);  // give both some structure
  t2.query_by_rank(50);
  std::size_t n1 = t1.size();
  auto m = LazySearchTree::merge(std::move(t1), std::move(t2));
  CHECK(m.size() == 700);
  check_valid(m);
  // Rank n1+1 is the minimum of the old t2.
  CHECK(m.query_by_rank(n1 + 1).seq == oracle.at_rank(n1 + 1).seq);
  auto scan = m.entries_in_order();
  for (std::size_t i = 0; i < scan.size(); ++i) CHECK(scan[i].seq == oracle.sorted[i].seq);
  check_valid(m);
}

TEST_CASE("priority-queue merge stays cheap") {
  std::mt19937_64 rng(67);
  auto mk_pq = [&](int n) {
    std::vector<Entry> items;
    for (int i = 0; i < n; ++i) items.push_back(make_entry(static_cast<Key>(rng() % 100000)));
    auto t = LazySearchTree::construct(std::move(items));
    Entry mn = t.query_by_rank(1);
    t.erase(LazySearchTree::EntryRef{mn.seq});  // leaves a single left-sided gap
    return t;
  };
  auto a = mk_pq(500);
  auto b = mk_pq(500);
  CHECK(a.gap_count() == 1);
  CHECK(b.gap_count() == 1);

  DictOracle oracle;
  for (auto& e : a.entries_in_order()) oracle.insert(e);
  for (auto& e : b.entries_in_order()) oracle.insert(e);

  std::uint64_t before = a.counter().value() + b.counter().value();
  auto m = LazySearchTree::merge_pq(std::move(a), std::move(b));
  CHECK(m.counter().value() - before <= 4);
  CHECK(m.size() == 998);
  Entry mn = m.query_by_rank(1);
  CHECK(mn.seq == oracle.at_rank(1).seq);
  check_valid(m);
  m.erase(LazySearchTree::EntryRef{mn.seq});  // restore priority-queue shape
  oracle.erase(mn.seq);

  // Merge with a never-queried tree: the zero gap rides along as pending.
  std::vector<Entry> fresh;
  for (int i = 0; i < 100; ++i) {
    Entry e = make_entry(static_cast<Key>(rng() % 100000));
    fresh.push_back(e);
    oracle.insert(e);
  }
  auto zt = LazySearchTree::construct(std::move(fresh));
  std::uint64_t before2 = m.counter().value() + zt.counter().value();
  auto m2 = LazySearchTree::merge_pq(std::move(m), std::move(zt));
  CHECK(m2.counter().value() - before2 <= 4);
  CHECK(m2.size() == 1097);
  CHECK(m2.query_by_rank(1).seq == oracle.at_rank(1).seq);
  check_valid(m2);

  // Shape mismatch is rejected.
  auto plain = LazySearchTree::construct(entries_of({1, 2, 3, 4, 5, 6, 7, 8}));
  plain.query_by_rank(4);  // two gaps: not PQ shaped
  auto pq = mk_pq(50);
  CHECK_THROWS_AS(LazySearchTree::merge_pq(std::move(plain), std::move(pq)), ShapeError);
}

TEST_CASE("merge_pq identity with empty") {
  auto pq = LazySearchTree::construct(entries_of({4, 2, 9}));
  LazySearchTree empty;
  auto m = LazySearchTree::merge_pq(std::move(empty), std::move(pq));
  CHECK(m.size() == 3);
  CHECK(m.query_by_rank(1).key == 2);
}

TEST_CASE("validator flags hand-built violations") {
  std::mt19937_64 rng(71);
  std::vector<Entry> items;
  for (int i = 0; i < 600; ++i) items.push_back(make_entry(static_cast<Key>(rng() % 100000)));
  auto t = LazySearchTree::construct(std::move(items));
  t.query_by_rank(200);  // creates a two-sided gap of 200
  check_valid(t);

  REQUIRE(lazydict::testing::LstInspector::skew_thirds(t));
  bool thirds_flagged = false;
  for (const auto& s : t.validate()) {
    if (s.find("1/3 - 1/12") != std::string::npos) thirds_flagged = true;
  }
  CHECK(thirds_flagged);

  auto u = LazySearchTree::construct(entries_of({1, 2, 3}));
  REQUIRE(lazydict::testing::LstInspector::corrupt_weight(u));
  bool weight_flagged = false;
  for (const auto& s : u.validate()) {
    if (s.find("weight") != std::string::npos) weight_flagged = true;
  }
  CHECK(weight_flagged);
}

TEST_CASE("thirds stay above the fraction bound under adversarial churn") {
  std::mt19937_64 rng(73);
  std::vector<Entry> items;
  for (int i = 0; i < 3000; ++i) items.push_back(make_entry(static_cast<Key>(rng() % 1000000)));
  auto t = LazySearchTree::construct(std::move(items));
  t.query_by_rank(1500);  // two-sided gap of 1500
  check_valid(t);

  // Pull keys toward the low end so the min third churns hardest.
  auto entries = t.entries_in_order();
  Entry lo_end = entries.front();
  std::vector<std::uint64_t> gap_seqs;
  for (std::size_t i = 0; i < 1500; ++i) gap_seqs.push_back(entries[i].seq);
  for (int i = 0; i < 3000; ++i) {
    std::uint64_t seq = gap_seqs[rng() % gap_seqs.size()];
    Key nk = lo_end.key + static_cast<Key>(rng() % 50);
    try {
      t.change_key(LazySearchTree::EntryRef{seq}, nk);
    } catch (const OutOfGapError&) {
      continue;
    }
    if (i % 64 == 0) {
      for (const auto& s : t.validate()) {
        FAIL_CHECK(s);
      }
    }
  }
  check_valid(t);
}

TEST_CASE("credit accounts track zero- and one-sided populations") {
  auto t = LazySearchTree::construct(entries_of({5, 6, 7, 8, 9, 10, 11, 12}));
  CHECK(t.zero_credits() == 8);
  CHECK(t.one_credits() == 0);
  t.query_by_rank(2);  // conversion spends zero credits, survivor is one-sided
  CHECK(t.zero_credits() == 0);
  CHECK(t.one_credits() == 6);
  check_valid(t);
}

TEST_CASE("directory search favors the heavy gap") {
  std::mt19937_64 rng(79);
  // 40 small clusters of 10, then one huge cluster of 10^4, then a small
  // rightmost cluster; boundaries carve each cluster into its own gap.
  std::vector<Entry> items;
  const int kClusters = 40;
  for (int c = 0; c < kClusters; ++c) {
    for (int i = 0; i < 10; ++i) {
      items.push_back(make_entry(static_cast<Key>(c * 10000 + rng() % 100)));
    }
  }
  for (int i = 0; i < 10000; ++i) {
    items.push_back(make_entry(static_cast<Key>(500000 + rng() % 100000)));
  }
  for (int i = 0; i < 10; ++i) {
    items.push_back(make_entry(static_cast<Key>(700000 + rng() % 100)));
  }
  auto t = LazySearchTree::construct(std::move(items));
  for (int c = 1; c <= kClusters; ++c) t.query_by_rank(static_cast<std::size_t>(c) * 10);
  t.query_by_rank(static_cast<std::size_t>(kClusters) * 10 + 10000);
  REQUIRE(t.gap_count() >= static_cast<std::size_t>(kClusters));

  // Warm up with mostly heavy-gap traffic, then measure both landings.
  for (int i = 0; i < 500; ++i) t.insert(static_cast<Key>(500000 + rng() % 100000));
  std::uint64_t big = 0, small = 0;
  const int reps = 500;
  for (int i = 0; i < reps; ++i) {
    t.counter().snapshot_and_reset();
    t.insert(static_cast<Key>(500000 + rng() % 100000));
    big += t.counter().value();
    t.counter().snapshot_and_reset();
    t.insert(static_cast<Key>((rng() % kClusters) * 10000 + rng() % 100));
    small += t.counter().value();
    for (int j = 0; j < 20; ++j) t.insert(static_cast<Key>(500000 + rng() % 100000));
  }
  CHECK(big < small);
  check_valid(t);
}
