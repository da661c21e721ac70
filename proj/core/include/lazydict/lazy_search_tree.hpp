#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lazydict/fib_heap.hpp"
#include "lazydict/order.hpp"

namespace lazydict {

class LazySearchTree;

namespace testing {
// Validator-test surgery; definitions live with the tree internals.
struct LstInspector {
  static bool skew_thirds(LazySearchTree& t);
  static bool corrupt_weight(LazySearchTree& t);
};
}  // namespace testing

/// Which gap boundaries have been touched by queries. Sidedness governs the
/// interval structure: zero-sided gaps are unsorted buffers, left-sided gaps
/// are selectable min-heaps, right-sided gaps selectable max-heaps, and
/// two-sided gaps are a thirds partition (min-heap / unsorted / max-heap).
enum class Sidedness { ZeroSided, LeftSided, RightSided, TwoSided };

/// Sorted dictionary that defers sorting until queries demand it.
///
/// Elements live in a key-ordered partition into gaps; a rank or key query
/// splits the gap it lands in so the left piece ends exactly at the queried
/// rank. Gap lookup goes through a weight-annotated splay tree (weights =
/// gap sizes), selection inside gaps through selectable Fibonacci heaps.
/// Every key comparison anywhere below this class ticks the tree's counter.
class LazySearchTree {
 public:
  /// Stable reference to an inserted entry; survives internal migrations.
  struct EntryRef {
    std::uint64_t seq = 0;
  };

  struct KeyQueryResult {
    std::size_t rank = 0;  // number of entries with key <= the queried key
    bool contains = false;
    std::optional<Entry> predecessor;  // greatest entry with a smaller key
    std::optional<Entry> successor;    // least entry with a greater key
  };

  LazySearchTree();
  ~LazySearchTree();
  LazySearchTree(LazySearchTree&&) noexcept;
  LazySearchTree& operator=(LazySearchTree&&) noexcept;
  LazySearchTree(const LazySearchTree&) = delete;
  LazySearchTree& operator=(const LazySearchTree&) = delete;

  /// One zero-sided gap holding all of `items`; no comparisons.
  static LazySearchTree construct(std::vector<Entry> items);

  EntryRef insert(Key key, std::uint64_t payload = 0);
  /// Insert preserving the entry's existing seq (delete/re-insert paths).
  EntryRef insert_entry(const Entry& e);

  /// Entry of rank r (1-based). Splits the containing gap at r.
  Entry query_by_rank(std::size_t r);

  /// Rank, membership and neighbors of a key. Splits at the key's rank
  /// boundaries as a side effect.
  KeyQueryResult query_by_key(Key key);

  /// O(1)-style key change within the entry's current gap. Throws
  /// OutOfGapError when the new key would cross a gap boundary; the caller
  /// falls back to erase + insert_entry.
  void change_key(EntryRef ref, Key new_key);

  void erase(EntryRef ref);

  /// Splits into ranks [1..r] and [r+1..n]. Consumes *this.
  std::pair<LazySearchTree, LazySearchTree> split(std::size_t r) &&;

  /// Key-ordered concatenation: every entry of t1 must be at most every
  /// entry of t2 (checked only by validate()). Gaps are untouched.
  static LazySearchTree merge(LazySearchTree t1, LazySearchTree t2);

  /// O(1)-comparison merge of two priority-queue shaped trees (a single
  /// matching one-sided gap, optionally plus a zero-sided gap pending
  /// promotion). Throws ShapeError otherwise.
  static LazySearchTree merge_pq(LazySearchTree t1, LazySearchTree t2);

  std::size_t size() const noexcept { return n_; }
  bool empty() const noexcept { return n_ == 0; }
  std::size_t gap_count() const;
  std::vector<std::size_t> gap_sizes() const;

  Entry entry_of(EntryRef ref) const;
  bool ref_live(EntryRef ref) const noexcept;

  /// Sorted scan for verification; normalizes pending state first.
  std::vector<Entry> entries_in_order();

  /// Structural audit: gap order against separators, thirds fractions,
  /// directory weights, sidedness/variant coherence, credit identities,
  /// locator integrity. Read-only, uncounted comparisons.
  std::vector<std::string> validate() const;

  ComparisonCounter& counter() noexcept { return *counter_; }
  const ComparisonCounter& counter() const noexcept { return *counter_; }

  /// Amortization accounts: balances equal the number of elements currently
  /// in zero-sided and one-sided gaps, and never go negative.
  std::uint64_t zero_credits() const noexcept { return zero_credits_; }
  std::uint64_t one_credits() const noexcept { return one_credits_; }

 private:
  friend struct testing::LstInspector;
  struct Gap;
  struct DirNode;
  struct ZeroSided;
  struct LeftSided;
  struct RightSided;
  struct TwoSided;
  struct RebuildState;
  struct ShadowOp;
  struct PQShape;

  enum class Where : std::uint8_t { ZeroVec, MinHeap, MaxHeap, Middle };

  // Where an entry currently lives; rewritten whenever entries migrate
  // between structures. The cell indirection keeps heap melds O(1).
  struct Locator {
    std::shared_ptr<Gap*> cell;
    Where where = Where::ZeroVec;
    std::uint32_t index = 0;
    FibHeap::Handle handle{};
  };

  // directory (weight-annotated splay tree over gaps in key order)
  static std::uint64_t weight_of(const DirNode* x) noexcept;
  void dir_refresh(DirNode* x) noexcept;
  void dir_refresh_up(DirNode* x) noexcept;
  void dir_rotate(DirNode* x) noexcept;
  void dir_splay(DirNode* x) noexcept;
  DirNode* dir_leftmost(DirNode* x) const noexcept;
  DirNode* dir_rightmost(DirNode* x) const noexcept;
  DirNode* dir_prev(DirNode* x) const noexcept;
  DirNode* dir_next(DirNode* x) const noexcept;
  DirNode* dir_find_by_rank(std::size_t r, std::size_t& prefix, std::size_t& offset);
  DirNode* dir_find_by_probe(const Entry& probe);
  void dir_insert_before(DirNode* pos, DirNode* node);
  void dir_insert_after(DirNode* pos, DirNode* node);
  void dir_remove(DirNode* node);
  void dir_destroy(DirNode* node);
  template <typename Fn>
  void dir_walk(const DirNode* node, Fn&& fn) const;

  // gap helpers
  static std::size_t gap_size(const Gap& g) noexcept;
  std::vector<Entry> gap_entries(const Gap& g) const;
  Entry gap_min_counted(Gap& g);
  Entry gap_max_counted(Gap& g);
  bool gap_has_cheap_min(const Gap& g) const noexcept;
  std::unique_ptr<Gap> make_gap(Sidedness side);
  std::unique_ptr<Gap> build_two_sided(std::vector<Entry> items);
  void place_in_two_sided(Gap& g, const Entry& e);
  void route_bounds_check(const Entry& e, DirNode* node);

  // locators
  Locator& locate(std::uint64_t seq);
  const Locator& locate(std::uint64_t seq) const;
  void set_zero_loc(Gap& g, std::size_t index, const Entry& e);
  void set_mid_loc(Gap& g, std::size_t index, const Entry& e);
  void set_heap_loc(Gap& g, Where where, FibHeap::Handle h, const Entry& e);

  // core flows
  EntryRef insert_impl(const Entry& e);
  Entry rank_query_impl(std::size_t r);
  Entry split_gap_at(DirNode* node, std::size_t offset);
  std::size_t count_leq_and_split(const Entry& probe);
  std::optional<Entry> cheap_entry_at(std::size_t r);
  void normalize_pending();
  void remove_gap_if_empty(DirNode* node);
  PQShape pq_shape() const;

  // incremental rebuild of two-sided gaps
  void fund_mutation(Gap& g, ShadowOp op);
  void maybe_trigger_rebuild(Gap& g, std::uint64_t budget);
  void pump_rebuild(Gap& g);
  void abort_rebuild(Gap& g);
  void replay_shadow_op(Gap& g, const ShadowOp& op);
  void swap_in_shadow(Gap& g);

  DirNode* root_ = nullptr;
  std::unique_ptr<Gap> pending_zero_;  // PQ-shape side slot, outside the directory
  std::size_t n_ = 0;
  std::uint64_t zero_credits_ = 0;
  std::uint64_t one_credits_ = 0;
  std::unordered_map<std::uint64_t, Locator> locators_;
  std::unique_ptr<ComparisonCounter> counter_;
};

}  // namespace lazydict
