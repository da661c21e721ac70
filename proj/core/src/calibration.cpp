#include "lazydict/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "lazydict/fib_heap.hpp"
#include "lazydict/lazy_search_tree.hpp"
#include "lazydict/soft_heap.hpp"

namespace lazydict {

double log2_clamped(double x) { return std::max(std::log2(x), 1.0); }

namespace {

double measure_softheap(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Key> keys(0, 1 << 30);
  ComparisonCounter c;
  SoftHeap h(1.0 / 6.0, c);
  std::size_t inserts = 0, extracts = 0;
  for (std::size_t i = 0; i < 10000; ++i) {
    if (h.empty() || rng() % 3 != 0) {
      h.insert(make_entry(keys(rng)));
      ++inserts;
    } else {
      h.extract_min();
      ++extracts;
    }
  }
  while (!h.empty()) {
    h.extract_min();
    ++extracts;
  }
  double budget =
      static_cast<double>(inserts) + static_cast<double>(extracts) * std::log2(6.0);
  return static_cast<double>(c.value()) / budget;
}

void measure_fib(std::uint64_t seed, double& degree_ratio, double& extract_ratio) {
  degree_ratio = 0.0;
  extract_ratio = 0.0;
  const std::size_t n = 1 << 16;
  for (std::size_t k : {std::size_t{1}, std::size_t{16}, std::size_t{256},
                        std::size_t{4096}}) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Key> keys(0, 1 << 30);
    FibHeap h;
    for (std::size_t i = 0; i < n; ++i) h.insert(make_entry(keys(rng)));
    h.extract_top();  // consolidate once so trees exist

    double t = static_cast<double>(h.root_count());
    auto sel = h.select_k(k);
    double denom = t + static_cast<double>(k) *
                           log2_clamped(static_cast<double>(n) / static_cast<double>(k));
    degree_ratio =
        std::max(degree_ratio, static_cast<double>(sel.stats.degree_sum) / denom);

    h.counter().snapshot_and_reset();
    while (!h.empty()) h.extract_k(k);
    double total = static_cast<double>(h.counter().value());
    extract_ratio = std::max(
        extract_ratio,
        total / (static_cast<double>(n) *
                 log2_clamped(static_cast<double>(n) / static_cast<double>(k))));
  }
}

double measure_lst_bbound(std::uint64_t seed) {
  double worst = 0.0;
  for (std::size_t q : {std::size_t{1}, std::size_t{10}, std::size_t{316}}) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Key> keys(0, 1 << 30);
    const std::size_t n = 100000;
    LazySearchTree t;
    for (std::size_t i = 0; i < n; ++i) t.insert(keys(rng));
    for (std::size_t i = 0; i < q; ++i) t.query_by_rank(1 + rng() % n);
    double b = 0.0;
    auto gaps = t.gap_sizes();
    for (std::size_t s : gaps) {
      if (s > 0) b += static_cast<double>(s) * log2_clamped(static_cast<double>(n) / s);
    }
    double ratio = static_cast<double>(t.counter().value()) / (b + static_cast<double>(n));
    worst = std::max(worst, ratio);
  }
  return worst;
}

double measure_lst_doubling(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Key> keys(0, 1 << 30);
  const std::size_t n = 20000;
  LazySearchTree t;
  for (std::size_t i = 0; i < n; ++i) t.insert(keys(rng));
  t.query_by_rank(1);  // leftmost boundary; survivor is one big left-sided gap
  double worst = 0.0;
  for (int i = 0; i < 24; ++i) {
    auto gaps = t.gap_sizes();
    std::size_t g = *std::max_element(gaps.begin(), gaps.end());
    if (g < 16) break;
    // Rank in the first quarter of the big gap, measured from its left edge.
    std::size_t prefix = 0;
    for (std::size_t s : gaps) {
      if (s == g) break;
      prefix += s;
    }
    std::size_t k = 1 + rng() % (g / 4);
    t.counter().snapshot_and_reset();
    t.query_by_rank(prefix + k);
    double denom = static_cast<double>(k) *
                       log2_clamped(static_cast<double>(g) / static_cast<double>(k)) +
                   log2_clamped(static_cast<double>(n));
    worst = std::max(worst, static_cast<double>(t.counter().value()) / denom);
  }
  return worst;
}

}  // namespace

Calibration measure_calibration(std::uint64_t seed) {
  Calibration c;
  c.softheap_ops_ratio = measure_softheap(seed);
  measure_fib(seed, c.fib_degree_ratio, c.fib_extract_ratio);
  c.lst_bbound_ratio = measure_lst_bbound(seed);
  c.lst_doubling_ratio = measure_lst_doubling(seed);
  return c;
}

void write_calibration(const Calibration& c, std::ostream& out) {
  nlohmann::json j{
      {"softheap_ops_ratio", c.softheap_ops_ratio},
      {"fib_degree_ratio", c.fib_degree_ratio},
      {"fib_extract_ratio", c.fib_extract_ratio},
      {"lst_bbound_ratio", c.lst_bbound_ratio},
      {"lst_doubling_ratio", c.lst_doubling_ratio},
  };
  out << j.dump(2) << "\n";
}

Calibration read_calibration(std::istream& in) {
  nlohmann::json j;
  in >> j;
  Calibration c;
  c.softheap_ops_ratio = j.at("softheap_ops_ratio").get<double>();
  c.fib_degree_ratio = j.at("fib_degree_ratio").get<double>();
  c.fib_extract_ratio = j.at("fib_extract_ratio").get<double>();
  c.lst_bbound_ratio = j.at("lst_bbound_ratio").get<double>();
  c.lst_doubling_ratio = j.at("lst_doubling_ratio").get<double>();
  return c;
}

Calibration read_calibration_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open calibration baseline: " + path);
  return read_calibration(in);
}

}  // namespace lazydict
