#include "lazydict/soft_heap.hpp"

#include <cmath>
#include <utility>

namespace lazydict {

struct SoftHeap::Node {
  int rank = 0;
  std::size_t target = 1;  // item-list fill target for this rank
  std::unique_ptr<Node> left, right;
  Entry ckey{};        // soft key: upper bound on every item in `items`
  bool witness = false;  // the item equal to ckey is present in `items`
  std::vector<Entry> items;

  bool leaf() const { return !left && !right; }
};

SoftHeap::SoftHeap(double epsilon, ComparisonCounter& counter)
    : epsilon_(epsilon), counter_(&counter) {
  if (!(epsilon > 0.0) || epsilon > 0.5) {
    throw std::invalid_argument("soft heap epsilon must be in (0, 1/2]");
  }
  // Nodes of rank <= threshold keep singleton lists; corruption can only
  // happen above it. threshold = ceil(log2(1/eps)) + 5 yields the eps*n bound.
  threshold_rank_ = static_cast<int>(std::ceil(std::log2(1.0 / epsilon))) + 5;
  target_sizes_.assign(static_cast<std::size_t>(threshold_rank_) + 1, 1);
}

SoftHeap::~SoftHeap() = default;
SoftHeap::SoftHeap(SoftHeap&&) noexcept = default;
SoftHeap& SoftHeap::operator=(SoftHeap&&) noexcept = default;

std::size_t SoftHeap::target_size(int rank) {
  while (target_sizes_.size() <= static_cast<std::size_t>(rank)) {
    std::size_t prev = target_sizes_.back();
    target_sizes_.push_back((3 * prev + 1) / 2);  // ceil(3/2 * prev)
  }
  return target_sizes_[static_cast<std::size_t>(rank)];
}

void SoftHeap::sift(Node& x) {
  while (x.items.size() < x.target && !x.leaf()) {
    // Absorb from the child with the smaller soft key; normalize it into `left`.
    if (!x.left || (x.right && less(x.right->ckey, x.left->ckey, *counter_))) {
      std::swap(x.left, x.right);
    }
    Node& src = *x.left;
    // Items already in x's list move under the larger soft key src.ckey.
    // The only one that can flip from uncorrupted to corrupted is the
    // witness of the old ckey.
    if (x.witness && !same_entry(x.ckey, src.ckey)) {
      pending_corrupted_.push_back(x.ckey);
      ++corrupted_now_;
    }
    x.ckey = src.ckey;
    x.witness = src.witness;
    src.witness = false;
    if (x.items.empty()) {
      x.items = std::move(src.items);
    } else {
      x.items.insert(x.items.end(), src.items.begin(), src.items.end());
    }
    src.items.clear();
    if (src.leaf()) {
      x.left.reset();
    } else {
      sift(src);
      if (src.items.empty()) x.left.reset();  // subtree exhausted
    }
  }
}

std::unique_ptr<SoftHeap::Node> SoftHeap::combine(std::unique_ptr<Node> a,
                                                  std::unique_ptr<Node> b) {
  auto z = std::make_unique<Node>();
  z->rank = a->rank + 1;
  z->target = target_size(z->rank);
  z->left = std::move(a);
  z->right = std::move(b);
  sift(*z);
  return z;
}

void SoftHeap::insert(const Entry& e) {
  auto node = std::make_unique<Node>();
  node->ckey = e;
  node->witness = true;
  node->items.push_back(e);

  // Binomial-style carry: combine equal ranks until a free slot appears.
  std::size_t r = 0;
  while (true) {
    if (slots_.size() <= r) slots_.resize(r + 1);
    if (!slots_[r]) {
      slots_[r] = std::move(node);
      break;
    }
    node = combine(std::move(slots_[r]), std::move(node));
    slots_[r].reset();
    ++r;
  }
  ++size_;
  ++inserted_total_;
}

SoftHeap::ExtractResult SoftHeap::extract_min() {
  if (size_ == 0) throw std::out_of_range("extract_min on empty soft heap");

  Node* best = nullptr;
  for (auto& slot : slots_) {
    if (!slot) continue;
    if (!best || less(slot->ckey, best->ckey, *counter_)) best = slot.get();
  }

  ExtractResult res;
  res.min = best->items.back();
  best->items.pop_back();
  res.was_corrupted = !same_entry(res.min, best->ckey);
  if (res.was_corrupted) {
    --corrupted_now_;  // a corrupted item left the heap
  } else {
    best->witness = false;
  }
  --size_;

  if (best->items.empty()) {
    if (!best->leaf()) sift(*best);
    if (best->items.empty()) {
      // Tree exhausted; drop it from its slot.
      for (auto& slot : slots_) {
        if (slot.get() == best) {
          slot.reset();
          break;
        }
      }
    }
  }

  res.corrupted = std::move(pending_corrupted_);
  pending_corrupted_.clear();
  return res;
}

std::vector<Entry> SoftHeap::drain_corrupted() {
  std::vector<Entry> out = std::move(pending_corrupted_);
  pending_corrupted_.clear();
  return out;
}

SoftHeap::AuditReport SoftHeap::audit() const {
  AuditReport rep;
  // Recursive walk with uncounted comparisons.
  auto walk = [&](auto&& self, const Node& node, const Node* parent) -> void {
    if (parent && raw_less(node.ckey, parent->ckey)) rep.heap_ordered = false;
    for (const Entry& e : node.items) {
      ++rep.items;
      if (raw_less(node.ckey, e)) rep.soft_keys_dominate = false;
      if (!same_entry(e, node.ckey)) ++rep.corrupted;
    }
    if (node.left) self(self, *node.left, &node);
    if (node.right) self(self, *node.right, &node);
  };
  for (const auto& slot : slots_) {
    if (slot) walk(walk, *slot, nullptr);
  }
  rep.counts_match = (rep.items == size_) && (rep.corrupted == corrupted_now_);
  return rep;
}

}  // namespace lazydict
