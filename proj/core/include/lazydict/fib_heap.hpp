#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lazydict/order.hpp"
#include "lazydict/select.hpp"

namespace lazydict {

namespace testing {
struct FibHeapInspector;
}

/// Fibonacci heap with the extended operation set: select_k, extract_k and
/// multi-element erase in O(k log(n/k)) amortized comparisons, on top of the
/// classic O(1) insert/merge/decrease-key and O(log n) extract.
///
/// Polarity::Max flips the comparison direction, turning the structure into
/// a max-heap; "top" and "decrease_key" are always relative to the heap's
/// own order (decrease_key moves an entry toward the top).
///
/// Handles stay valid until their entry is removed; a removed or reused
/// node is detected through a liveness stamp and reported as HandleError.
class FibHeap {
  struct Node {
    Entry entry{};
    Node* parent = nullptr;
    Node* child = nullptr;  // first-linked child; list keeps link-time order
    Node* left = nullptr;   // circular sibling ring
    Node* right = nullptr;
    std::uint32_t degree = 0;
    bool marked = false;
    bool live = false;
    std::uint64_t stamp = 0;
    Node* next_free = nullptr;
  };

 public:
  enum class Polarity { Min, Max };

  class Handle {
   public:
    Handle() = default;
    bool null() const noexcept { return node_ == nullptr; }

   private:
    friend class FibHeap;
    Node* node_ = nullptr;
    std::uint64_t stamp_ = 0;
  };

  struct SelectKResult {
    std::vector<Entry> entries;
    SelectionStats stats;
  };

  explicit FibHeap(Polarity polarity = Polarity::Min);
  FibHeap(ComparisonCounter& shared_counter, Polarity polarity = Polarity::Min);
  ~FibHeap();

  FibHeap(FibHeap&& other) noexcept;
  FibHeap& operator=(FibHeap&& other) noexcept;
  FibHeap(const FibHeap&) = delete;
  FibHeap& operator=(const FibHeap&) = delete;

  /// Consumes both heaps. Root lists are concatenated; exactly one
  /// comparison when both are nonempty. Polarities must match.
  static FibHeap merge(FibHeap a, FibHeap b);

  Handle insert(const Entry& e);

  /// The extreme entry (min under Polarity::Min). Zero comparisons.
  const Entry& top() const;
  Entry extract_top();

  /// Move the entry's key toward the top of the heap. Throws
  /// std::invalid_argument if the change goes the wrong way.
  void decrease_key(Handle h, Key new_key);

  void erase(Handle h);

  /// The min(k, n) entries closest to the top, element set unchanged.
  /// Side effect: the root list is consolidated afterwards when it is
  /// larger than floor(log2 n) + 1.
  SelectKResult select_k(std::size_t k);

  /// Removes and returns the min(k, n) entries closest to the top.
  /// Orphaned children join the root list before consolidation.
  std::vector<Entry> extract_k(std::size_t k);
  std::vector<Entry> extract_k(std::size_t k, SelectionStats* stats);

  /// Removes all given entries with per-node cascading cuts and no
  /// consolidation. Handles must be live and pairwise distinct.
  void erase_multi(std::span<const Handle> hs);

  /// Structural audit: heap order, degree counts, child link-order degrees,
  /// Fibonacci subtree sizes, mark legality, size bookkeeping. Read-only,
  /// uncounted comparisons; returns one message per violation.
  std::vector<std::string> validate() const;

  std::size_t size() const noexcept { return n_; }
  bool empty() const noexcept { return n_ == 0; }
  std::size_t root_count() const noexcept;
  Polarity polarity() const noexcept { return polarity_; }

  const Entry& entry(Handle h) const;
  bool handle_live(Handle h) const noexcept;

  /// All entries in structure walk order; zero comparisons.
  std::vector<Entry> entries() const;

  /// Deep structural copy with a fresh internal counter seeded from this
  /// heap's count. Handles do not carry over.
  FibHeap clone() const;

  ComparisonCounter& counter() noexcept { return *counter_; }
  const ComparisonCounter& counter() const noexcept { return *counter_; }

  /// Repoint comparison accounting (used when a heap changes owner).
  void set_counter(ComparisonCounter& c) noexcept { counter_ = &c; }
  bool owns_counter() const noexcept { return counter_ == &own_counter_; }

 private:
  friend struct testing::FibHeapInspector;
  class RootsView;

  Node* alloc_node(const Entry& e);
  void free_node(Node* x);
  Node* check(Handle h) const;
  bool heap_less(const Entry& a, const Entry& b) const;

  void add_root(Node* x);
  void detach_from_siblings(Node* x);
  void link(Node* parent, Node* child);
  void cut(Node* x);
  void cascading_cut(Node* p);
  void consolidate();
  void remove_selected(const std::vector<Node*>& selected);

  Polarity polarity_ = Polarity::Min;
  ComparisonCounter own_counter_;
  ComparisonCounter* counter_ = nullptr;
  Node* min_ = nullptr;  // extreme root under the heap's polarity
  std::size_t n_ = 0;
  std::vector<std::unique_ptr<Node>> arena_;
  Node* free_list_ = nullptr;
};

}  // namespace lazydict
