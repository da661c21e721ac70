#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "lazydict/workload.hpp"

namespace lazydict {

/// Per-operation report row. The CSV schema is fixed:
/// op_index,op,comparisons,cum_comparisons,n,gaps,B
struct OpRecord {
  std::size_t op_index = 0;
  std::string op;
  std::uint64_t comparisons = 0;
  std::uint64_t cum_comparisons = 0;
  std::size_t n = 0;
  std::size_t gaps = 0;
  double b_value = 0.0;
  std::string answer;  // canonical answer string; not part of the CSV
};

struct Report {
  std::vector<OpRecord> rows;
  std::uint64_t total_comparisons = 0;
  double final_b = 0.0;
  std::vector<std::size_t> final_gap_sizes;
};

/// Executes ops against one engine, producing per-op answers and counts.
class Engine {
 public:
  virtual ~Engine() = default;
  virtual std::string apply(const WorkloadOp& op) = 0;
  virtual std::uint64_t comparisons() const = 0;
  virtual std::size_t size() const = 0;
  virtual std::vector<std::size_t> gap_sizes() const = 0;
  /// Called before each op: the op index doubles as the entry reference.
  virtual void set_op_index(std::size_t) {}
};

std::unique_ptr<Engine> make_engine(const std::string& name);  // lst|fibheap|oracle

/// B = sum over gaps of |gap| * log2(n / |gap|), with log clamped below at 1.
double b_bound(const std::vector<std::size_t>& gap_sizes);

Report run_workload(const Workload& w, Engine& engine, std::ostream* csv);

/// Runs lst and oracle in lockstep, diffing every answer and validating the
/// tree every 256 ops. Returns 0 on agreement, 1 with diagnostics on the
/// first divergence.
int verify_workload(const Workload& w, std::ostream& diag);

}  // namespace lazydict
