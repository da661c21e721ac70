#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lazydict/order.hpp"
#include "lazydict/tree_view.hpp"

namespace lazydict {

/// Instrumentation of one tree selection. degree_sum is the empirical
/// proxy for D(T,k): the total number of children enumerated across all
/// expanded nodes.
struct SelectionStats {
  std::size_t expanded_nodes = 0;     // nodes whose children were inserted
  std::size_t degree_sum = 0;         // total children inserted
  std::size_t corruption_events = 0;  // corruption flips reported by the soft heap
};

struct NodeSelectResult {
  std::vector<TreeView::Node> nodes;
  SelectionStats stats;
};

/// k-smallest selection on a heap-ordered tree via a soft heap with
/// epsilon = 1/6. Returns node ids, in no particular order. The tree is
/// not modified; with eps = 1/6 at most 3k nodes are expanded.
NodeSelectResult soft_select_nodes(const TreeView& tree, std::size_t k,
                                   ComparisonCounter& counter);

/// Entry-level wrapper around soft_select_nodes.
std::vector<Entry> soft_select(const TreeView& tree, std::size_t k,
                               ComparisonCounter& counter,
                               SelectionStats* stats = nullptr);

/// Rearranges v so that its first min(k, |v|) elements are the k smallest
/// (unordered). Deterministic linear time via median of medians.
void partition_smallest(std::vector<Entry>& v, std::size_t k,
                        ComparisonCounter& counter);

/// Same over the subrange [from, to).
void partition_smallest(std::vector<Entry>& v, std::size_t from, std::size_t to,
                        std::size_t k, ComparisonCounter& counter);

/// The k smallest entries of a sequence, in no particular order.
std::vector<Entry> select_k_of_sequence(std::span<const Entry> s, std::size_t k,
                                        ComparisonCounter& counter);

}  // namespace lazydict
