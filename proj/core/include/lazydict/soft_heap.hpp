#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "lazydict/order.hpp"

namespace lazydict {

/// Soft heap with a fixed corruption parameter epsilon in (0, 1/2].
///
/// The structure is the simplified binary-tree soft heap: a binomial-style
/// forest of binary trees whose nodes carry item lists under a shared soft
/// key (ckey). Items below the rank threshold live in singleton lists and
/// are never corrupted; above it, list targets grow by 3/2 per rank and
/// list merges raise soft keys. At all times the number of corrupted items
/// is at most epsilon times the lifetime insertion count.
///
/// extract_min() reports the set of entries whose corruption status flipped
/// since the previous extraction (insert-driven flips are buffered and
/// surface on the next extraction), which is exactly what heap-ordered tree
/// selection consumes.
class SoftHeap {
 public:
  struct ExtractResult {
    Entry min;                     // minimum soft key item
    bool was_corrupted = false;    // true if min's soft key exceeded its key
    std::vector<Entry> corrupted;  // entries newly corrupted, excluding an uncorrupted min
  };

  struct AuditReport {
    std::size_t items = 0;
    std::size_t corrupted = 0;
    bool heap_ordered = true;        // ckey(parent) <= ckey(children)
    bool soft_keys_dominate = true;  // every item <= its node's ckey
    bool counts_match = true;        // walk agrees with the incremental tally
  };

  SoftHeap(double epsilon, ComparisonCounter& counter);
  ~SoftHeap();

  SoftHeap(SoftHeap&&) noexcept;
  SoftHeap& operator=(SoftHeap&&) noexcept;
  SoftHeap(const SoftHeap&) = delete;
  SoftHeap& operator=(const SoftHeap&) = delete;

  void insert(const Entry& e);
  ExtractResult extract_min();

  /// Flips that have happened since the last extraction (from insert-time
  /// carries). Selection drains this after its final iteration.
  std::vector<Entry> drain_corrupted();

  bool empty() const noexcept { return size_ == 0; }
  std::size_t size() const noexcept { return size_; }
  std::uint64_t inserted_total() const noexcept { return inserted_total_; }
  double epsilon() const noexcept { return epsilon_; }

  /// Current corrupted-item count, maintained incrementally.
  std::size_t corrupted_count() const noexcept { return corrupted_now_; }

  /// Full structure walk with uncounted comparisons; the truth the
  /// incremental counters are checked against.
  AuditReport audit() const;

 private:
  struct Node;

  std::size_t target_size(int rank);
  void sift(Node& x);
  std::unique_ptr<Node> combine(std::unique_ptr<Node> a, std::unique_ptr<Node> b);

  double epsilon_;
  int threshold_rank_;
  ComparisonCounter* counter_;
  std::vector<std::unique_ptr<Node>> slots_;  // slot r holds the rank-r tree
  std::vector<std::size_t> target_sizes_;
  std::size_t size_ = 0;
  std::uint64_t inserted_total_ = 0;
  std::size_t corrupted_now_ = 0;
  std::vector<Entry> pending_corrupted_;
};

}  // namespace lazydict
