#include "lazydict/select.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "lazydict/soft_heap.hpp"

namespace lazydict {

namespace {

constexpr double kSelectionEpsilon = 1.0 / 6.0;

// In-place median-of-medians selection over [lo, hi). After the call the
// element of rank `nth` (0-based) is at position nth and everything before
// it is smaller. Groups of five, deterministic.
class MomSelector {
 public:
  MomSelector(std::vector<Entry>& v, ComparisonCounter& c) : v_(v), c_(c) {}

  void nth(std::size_t lo, std::size_t hi, std::size_t nth) {
    while (hi - lo > 1) {
      std::size_t pivot_at = median_of_medians(lo, hi);
      std::size_t mid = partition(lo, hi, pivot_at);
      if (nth < mid) {
        hi = mid;
      } else if (nth > mid) {
        lo = mid + 1;
      } else {
        return;
      }
    }
  }

 private:
  // Partitions [lo, hi) around v_[pivot_at]; returns the pivot's final index.
  std::size_t partition(std::size_t lo, std::size_t hi, std::size_t pivot_at) {
    Entry pivot = v_[pivot_at];
    std::swap(v_[pivot_at], v_[hi - 1]);
    std::size_t store = lo;
    for (std::size_t i = lo; i + 1 < hi; ++i) {
      if (less(v_[i], pivot, c_)) {
        std::swap(v_[i], v_[store]);
        ++store;
      }
    }
    std::swap(v_[store], v_[hi - 1]);
    return store;
  }

  // Index of a pivot guaranteeing a constant-fraction split.
  std::size_t median_of_medians(std::size_t lo, std::size_t hi) {
    std::size_t n = hi - lo;
    if (n <= 5) {
      sort_small(lo, hi);
      return lo + n / 2;
    }
    std::size_t med = lo;
    for (std::size_t g = lo; g < hi; g += 5) {
      std::size_t gend = std::min(g + 5, hi);
      sort_small(g, gend);
      std::swap(v_[med], v_[g + (gend - g) / 2]);
      ++med;
    }
    std::size_t mid = lo + (med - lo) / 2;
    nth(lo, med, mid);
    return mid;
  }

  void sort_small(std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo + 1; i < hi; ++i) {
      Entry e = v_[i];
      std::size_t j = i;
      while (j > lo && less(e, v_[j - 1], c_)) {
        v_[j] = v_[j - 1];
        --j;
      }
      v_[j] = e;
    }
  }

  std::vector<Entry>& v_;
  ComparisonCounter& c_;
};

void collect_all(const TreeView& tree, std::vector<TreeView::Node>& out) {
  std::vector<TreeView::Node> stack{tree.root()};
  std::vector<TreeView::Node> kids;
  while (!stack.empty()) {
    TreeView::Node n = stack.back();
    stack.pop_back();
    out.push_back(n);
    kids.clear();
    tree.append_children(n, kids);
    stack.insert(stack.end(), kids.begin(), kids.end());
  }
}

}  // namespace

void partition_smallest(std::vector<Entry>& v, std::size_t k,
                        ComparisonCounter& counter) {
  if (k == 0 || k >= v.size()) return;
  MomSelector(v, counter).nth(0, v.size(), k - 1);
}

void partition_smallest(std::vector<Entry>& v, std::size_t from, std::size_t to,
                        std::size_t k, ComparisonCounter& counter) {
  if (k == 0 || k >= to - from) return;
  MomSelector(v, counter).nth(from, to, from + k - 1);
}

std::vector<Entry> select_k_of_sequence(std::span<const Entry> s, std::size_t k,
                                        ComparisonCounter& counter) {
  std::vector<Entry> v(s.begin(), s.end());
  if (k >= v.size()) return v;
  partition_smallest(v, k, counter);
  v.resize(k);
  return v;
}

NodeSelectResult soft_select_nodes(const TreeView& tree, std::size_t k,
                                   ComparisonCounter& counter) {
  NodeSelectResult res;
  if (k == 0) return res;

  if (auto n = tree.size_hint(); n && k >= *n) {
    collect_all(tree, res.nodes);
    return res;
  }

  SoftHeap q(kSelectionEpsilon, counter);
  std::vector<TreeView::Node> candidates;
  std::unordered_set<TreeView::Node> seen;
  std::unordered_map<std::uint64_t, TreeView::Node> by_seq;
  std::vector<TreeView::Node> kids;

  auto push = [&](TreeView::Node v) {
    if (!seen.insert(v).second) return;  // duplicate arrival is a no-op
    Entry e = tree.entry(v);
    by_seq.emplace(e.seq, v);
    candidates.push_back(v);
    q.insert(e);
  };
  auto expand = [&](const Entry& of) {
    TreeView::Node v = by_seq.at(of.seq);
    ++res.stats.expanded_nodes;
    kids.clear();
    tree.append_children(v, kids);
    res.stats.degree_sum += kids.size();
    for (TreeView::Node c : kids) push(c);
  };

  push(tree.root());
  for (std::size_t i = 1; i < k && !q.empty(); ++i) {
    SoftHeap::ExtractResult ex = q.extract_min();
    res.stats.corruption_events += ex.corrupted.size();
    for (const Entry& ce : ex.corrupted) expand(ce);
    if (!ex.was_corrupted) expand(ex.min);
  }
  // Children of entries corrupted by the final iteration's insertions
  // still belong in the candidate set.
  for (const Entry& ce : q.drain_corrupted()) {
    ++res.stats.corruption_events;
    expand(ce);
  }

  if (candidates.size() <= k) {
    res.nodes = std::move(candidates);
    return res;
  }

  // Final k-selection over the candidate set by true keys.
  std::vector<Entry> work;
  work.reserve(candidates.size());
  for (TreeView::Node v : candidates) work.push_back(tree.entry(v));
  partition_smallest(work, k, counter);
  res.nodes.reserve(k);
  for (std::size_t i = 0; i < k; ++i) res.nodes.push_back(by_seq.at(work[i].seq));
  return res;
}

std::vector<Entry> soft_select(const TreeView& tree, std::size_t k,
                               ComparisonCounter& counter, SelectionStats* stats) {
  NodeSelectResult r = soft_select_nodes(tree, k, counter);
  if (stats) *stats = r.stats;
  std::vector<Entry> out;
  out.reserve(r.nodes.size());
  for (TreeView::Node n : r.nodes) out.push_back(tree.entry(n));
  return out;
}

}  // namespace lazydict
