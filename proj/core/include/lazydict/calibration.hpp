#pragma once

#include <iosfwd>
#include <string>

namespace lazydict {

/// Measured bound constants, pinned into a checked-in baseline. Regression
/// suites fail when a fresh measurement exceeds 1.5x the stored value.
struct Calibration {
  // soft heap: total comparisons / (N + E * log2(1/eps)) over a random
  // insert/extract sequence.
  double softheap_ops_ratio = 0.0;
  // Fibonacci heap selection: degree_sum / (t + k * log2(n/k)), worst k.
  double fib_degree_ratio = 0.0;
  // extract-k until empty: total comparisons / (n * log2(n/k)), worst k.
  double fib_extract_ratio = 0.0;
  // lazy search tree: total comparisons / (B + n), worst q.
  double lst_bbound_ratio = 0.0;
  // one split of k from a gap of size g: comparisons / (k log2(g/k) + log2 n).
  double lst_doubling_ratio = 0.0;
};

/// Runs every measurement at its reference scale. Deterministic per seed.
Calibration measure_calibration(std::uint64_t seed);

void write_calibration(const Calibration& c, std::ostream& out);
Calibration read_calibration(std::istream& in);
Calibration read_calibration_file(const std::string& path);

// max(log2(x), 1): selection bounds use this convention throughout.
double log2_clamped(double x);

}  // namespace lazydict
