#include "lazydict/fib_heap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>
#include <utility>

#include "lazydict/tree_view.hpp"

namespace lazydict {

namespace {

// Entry strictly below every real entry: sentinels use seq 0,
// real entries always carry seq >= 1.
constexpr Entry kDummyEntry{std::numeric_limits<Key>::min(), 0, 0};

std::size_t max_degree_bound(std::size_t n) {
  if (n < 2) return 2;
  // log_phi(n) = log2(n) / log2(phi), log2(phi) ~ 0.6942.
  return static_cast<std::size_t>(std::log2(static_cast<double>(n)) / 0.6942) + 2;
}

}  // namespace

FibHeap::FibHeap(Polarity polarity) : polarity_(polarity), counter_(&own_counter_) {}

FibHeap::FibHeap(ComparisonCounter& shared_counter, Polarity polarity)
    : polarity_(polarity), counter_(&shared_counter) {}

FibHeap::~FibHeap() = default;

FibHeap::FibHeap(FibHeap&& other) noexcept
    : polarity_(other.polarity_),
      own_counter_(other.own_counter_),
      counter_(other.counter_ == &other.own_counter_ ? &own_counter_ : other.counter_),
      min_(other.min_),
      n_(other.n_),
      arena_(std::move(other.arena_)),
      free_list_(other.free_list_) {
  other.min_ = nullptr;
  other.n_ = 0;
  other.free_list_ = nullptr;
  other.counter_ = &other.own_counter_;
}

FibHeap& FibHeap::operator=(FibHeap&& other) noexcept {
  if (this == &other) return *this;
  polarity_ = other.polarity_;
  own_counter_ = other.own_counter_;
  counter_ = other.counter_ == &other.own_counter_ ? &own_counter_ : other.counter_;
  min_ = other.min_;
  n_ = other.n_;
  arena_ = std::move(other.arena_);
  free_list_ = other.free_list_;
  other.min_ = nullptr;
  other.n_ = 0;
  other.free_list_ = nullptr;
  other.counter_ = &other.own_counter_;
  return *this;
}

bool FibHeap::heap_less(const Entry& a, const Entry& b) const {
  return polarity_ == Polarity::Min ? less(a, b, *counter_) : less(b, a, *counter_);
}

FibHeap::Node* FibHeap::alloc_node(const Entry& e) {
  Node* x;
  if (free_list_) {
    x = free_list_;
    free_list_ = x->next_free;
  } else {
    arena_.push_back(std::make_unique<Node>());
    x = arena_.back().get();
  }
  x->entry = e;
  x->parent = x->child = nullptr;
  x->left = x->right = x;
  x->degree = 0;
  x->marked = false;
  x->live = true;
  x->next_free = nullptr;
  return x;
}

void FibHeap::free_node(Node* x) {
  x->live = false;
  ++x->stamp;
  x->next_free = free_list_;
  free_list_ = x;
}

FibHeap::Node* FibHeap::check(Handle h) const {
  if (!h.node_ || !h.node_->live || h.node_->stamp != h.stamp_) {
    throw HandleError("stale or invalid heap handle");
  }
  return h.node_;
}

void FibHeap::detach_from_siblings(Node* x) {
  x->left->right = x->right;
  x->right->left = x->left;
  x->left = x->right = x;
}

void FibHeap::add_root(Node* x) {
  x->parent = nullptr;
  x->marked = false;
  if (!min_) {
    x->left = x->right = x;
    min_ = x;
  } else {
    x->right = min_->right;
    x->left = min_;
    min_->right->left = x;
    min_->right = x;
  }
}

FibHeap::Handle FibHeap::insert(const Entry& e) {
  Node* x = alloc_node(e);
  bool was_empty = (min_ == nullptr);
  add_root(x);
  if (!was_empty && heap_less(x->entry, min_->entry)) min_ = x;
  ++n_;
  Handle h;
  h.node_ = x;
  h.stamp_ = x->stamp;
  return h;
}

FibHeap FibHeap::merge(FibHeap a, FibHeap b) {
  if (a.polarity_ != b.polarity_) {
    throw std::invalid_argument("merging heaps of opposite polarity");
  }
  if (a.owns_counter() != b.owns_counter() ||
      (!a.owns_counter() && a.counter_ != b.counter_)) {
    throw std::invalid_argument("merged heaps must both own their counters or share one");
  }
  FibHeap out(std::move(a));
  if (b.owns_counter()) {
    out.own_counter_.add(b.own_counter_.value());  // keep the total honest
  }
  if (!b.min_) return out;
  if (!out.min_) {
    out.min_ = b.min_;
    out.n_ = b.n_;
  } else {
    // Splice the two root rings.
    Node* a_right = out.min_->right;
    Node* b_right = b.min_->right;
    out.min_->right = b_right;
    b_right->left = out.min_;
    b.min_->right = a_right;
    a_right->left = b.min_;
    if (out.heap_less(b.min_->entry, out.min_->entry)) out.min_ = b.min_;
    out.n_ += b.n_;
  }
  for (auto& up : b.arena_) out.arena_.push_back(std::move(up));
  b.arena_.clear();
  if (b.free_list_) {
    Node* tail = b.free_list_;
    while (tail->next_free) tail = tail->next_free;
    tail->next_free = out.free_list_;
    out.free_list_ = b.free_list_;
  }
  b.min_ = nullptr;
  b.n_ = 0;
  b.free_list_ = nullptr;
  return out;
}

const Entry& FibHeap::top() const {
  if (!min_) throw std::out_of_range("top of empty heap");
  return min_->entry;
}

void FibHeap::link(Node* parent, Node* child) {
  detach_from_siblings(child);
  child->parent = parent;
  child->marked = false;
  if (!parent->child) {
    parent->child = child;
  } else {
    // Append at the tail of the ring so head->right order is link order.
    Node* head = parent->child;
    child->right = head;
    child->left = head->left;
    head->left->right = child;
    head->left = child;
  }
  ++parent->degree;
}

void FibHeap::consolidate() {
  if (!min_) return;
  std::vector<Node*> roots;
  Node* cur = min_;
  do {
    roots.push_back(cur);
    cur = cur->right;
  } while (cur != min_);

  std::vector<Node*> by_degree(max_degree_bound(n_) + 2, nullptr);
  for (Node* x : roots) {
    while (true) {
      if (x->degree >= by_degree.size()) by_degree.resize(x->degree + 2, nullptr);
      Node* other = by_degree[x->degree];
      if (!other) {
        by_degree[x->degree] = x;
        break;
      }
      by_degree[x->degree] = nullptr;
      if (heap_less(other->entry, x->entry)) std::swap(x, other);
      link(x, other);
    }
  }

  min_ = nullptr;
  for (Node* x : by_degree) {
    if (!x) continue;
    x->left = x->right = x;
    if (!min_) {
      min_ = x;
    } else {
      x->right = min_->right;
      x->left = min_;
      min_->right->left = x;
      min_->right = x;
      if (heap_less(x->entry, min_->entry)) min_ = x;
    }
  }
}

Entry FibHeap::extract_top() {
  if (!min_) throw std::out_of_range("extract on empty heap");
  Node* z = min_;
  Entry out = z->entry;

  // Promote children.
  if (z->child) {
    Node* c = z->child;
    do {
      Node* next = c->right;
      c->parent = nullptr;
      c->marked = false;
      c = next;
    } while (c != z->child);
    // Splice child ring into root ring.
    Node* child_head = z->child;
    Node* child_tail = child_head->left;
    Node* zr = z->right;
    z->right = child_head;
    child_head->left = z;
    child_tail->right = zr;
    zr->left = child_tail;
    z->child = nullptr;
    z->degree = 0;
  }

  if (z->right == z) {
    min_ = nullptr;
  } else {
    min_ = z->right;
    detach_from_siblings(z);
  }
  --n_;
  free_node(z);
  consolidate();
  return out;
}

void FibHeap::cut(Node* x) {
  Node* p = x->parent;
  if (p->child == x) p->child = (x->right == x) ? nullptr : x->right;
  detach_from_siblings(x);
  --p->degree;
  add_root(x);
}

void FibHeap::cascading_cut(Node* p) {
  while (p->parent) {
    if (!p->marked) {
      p->marked = true;
      return;
    }
    Node* next = p->parent;
    cut(p);
    p = next;
  }
}

void FibHeap::decrease_key(Handle h, Key new_key) {
  Node* x = check(h);
  Entry updated = x->entry;
  updated.key = new_key;
  if (heap_less(x->entry, updated)) {
    throw std::invalid_argument("decrease_key moving entry away from the top");
  }
  x->entry = updated;
  Node* p = x->parent;
  if (p && heap_less(x->entry, p->entry)) {
    cut(x);
    cascading_cut(p);
  }
  if (heap_less(x->entry, min_->entry)) min_ = x;
}

void FibHeap::erase(Handle h) {
  Node* x = check(h);
  Node* p = x->parent;
  if (p) {
    cut(x);
    cascading_cut(p);
  }
  // x is now a root; remove it like an extraction of x.
  if (x->child) {
    Node* c = x->child;
    do {
      Node* next = c->right;
      c->parent = nullptr;
      c->marked = false;
      c = next;
    } while (c != x->child);
    Node* child_head = x->child;
    Node* child_tail = child_head->left;
    Node* xr = x->right;
    x->right = child_head;
    child_head->left = x;
    child_tail->right = xr;
    xr->left = child_tail;
    x->child = nullptr;
    x->degree = 0;
  }
  if (x->right == x) {
    min_ = nullptr;
  } else {
    if (min_ == x) min_ = x->right;
    detach_from_siblings(x);
  }
  --n_;
  free_node(x);
  consolidate();
}

std::size_t FibHeap::root_count() const noexcept {
  if (!min_) return 0;
  std::size_t t = 0;
  Node* cur = min_;
  do {
    ++t;
    cur = cur->right;
  } while (cur != min_);
  return t;
}

// Heap-ordered tree view over the whole forest: a virtual dummy root with
// value -inf adopts every real root. Node ids are pointers; 0 is the dummy.
//
// Selection always works in min order, so a Max heap presents its entries
// through an order-reversing bijection (bitwise NOT flips both key and seq).
class FibHeap::RootsView final : public TreeView {
 public:
  explicit RootsView(const FibHeap& h)
      : h_(h), flip_(h.polarity_ == Polarity::Max) {}

  TreeView::Node root() const override { return 0; }

  void append_children(TreeView::Node id, std::vector<TreeView::Node>& out) const override {
    if (id == 0) {
      FibHeap::Node* cur = h_.min_;
      if (!cur) return;
      do {
        out.push_back(reinterpret_cast<TreeView::Node>(cur));
        cur = cur->right;
      } while (cur != h_.min_);
      return;
    }
    auto* x = reinterpret_cast<FibHeap::Node*>(id);
    FibHeap::Node* c = x->child;
    if (!c) return;
    do {
      out.push_back(reinterpret_cast<TreeView::Node>(c));
      c = c->right;
    } while (c != x->child);
  }

  Entry entry(TreeView::Node id) const override {
    if (id == 0) return kDummyEntry;  // below everything in the viewed order
    Entry e = reinterpret_cast<FibHeap::Node*>(id)->entry;
    if (flip_) {
      e.key = static_cast<Key>(~static_cast<std::uint64_t>(e.key));
      e.seq = ~e.seq;
    }
    return e;
  }

  std::optional<std::size_t> size_hint() const override { return h_.n_ + 1; }

 private:
  const FibHeap& h_;
  bool flip_;
};

FibHeap::SelectKResult FibHeap::select_k(std::size_t k) {
  SelectKResult res;
  if (k == 0 || n_ == 0) {
    if (root_count() > static_cast<std::size_t>(std::log2(std::max<std::size_t>(n_, 1))) + 1) {
      consolidate();
    }
    return res;
  }
  RootsView view(*this);
  NodeSelectResult sel = soft_select_nodes(view, std::min(k, n_) + 1, *counter_);
  res.stats = sel.stats;
  res.entries.reserve(sel.nodes.size() - 1);
  for (TreeView::Node id : sel.nodes) {
    if (id == 0) continue;
    res.entries.push_back(reinterpret_cast<Node*>(id)->entry);
  }
  // Pay down the root count unless it is already logarithmic.
  if (root_count() > static_cast<std::size_t>(std::log2(std::max<std::size_t>(n_, 1))) + 1) {
    consolidate();
  }
  return res;
}

void FibHeap::remove_selected(const std::vector<Node*>& selected) {
  std::unordered_set<Node*> sel(selected.begin(), selected.end());
  // The k extreme entries form an ancestor-closed set: every selected
  // non-root has a selected parent. Promote unselected children, then
  // unlink selected roots.
  for (Node* x : selected) {
    Node* c = x->child;
    if (c) {
      // Collect first: promotion edits the ring.
      std::vector<Node*> kids;
      Node* it = c;
      do {
        kids.push_back(it);
        it = it->right;
      } while (it != c);
      for (Node* kid : kids) {
        if (sel.count(kid)) continue;
        detach_from_siblings(kid);
        add_root(kid);
      }
    }
  }
  for (Node* x : selected) {
    if (x->parent == nullptr) {
      if (min_ == x) min_ = (x->right == x) ? nullptr : x->right;
      detach_from_siblings(x);
    }
    free_node(x);
  }
  n_ -= selected.size();
}

std::vector<Entry> FibHeap::extract_k(std::size_t k) { return extract_k(k, nullptr); }

std::vector<Entry> FibHeap::extract_k(std::size_t k, SelectionStats* stats) {
  std::vector<Entry> out;
  if (k == 0 || n_ == 0) {
    consolidate();
    if (stats) *stats = SelectionStats{};
    return out;
  }
  RootsView view(*this);
  NodeSelectResult sel = soft_select_nodes(view, std::min(k, n_) + 1, *counter_);
  if (stats) *stats = sel.stats;
  std::vector<Node*> selected;
  selected.reserve(sel.nodes.size());
  for (TreeView::Node id : sel.nodes) {
    if (id == 0) continue;
    auto* node = reinterpret_cast<Node*>(id);
    out.push_back(node->entry);
    selected.push_back(node);
  }
  remove_selected(selected);
  consolidate();
  return out;
}

void FibHeap::erase_multi(std::span<const Handle> hs) {
  std::unordered_set<Node*> uniq;
  for (const Handle& h : hs) {
    Node* x = check(h);
    if (!uniq.insert(x).second) throw HandleError("duplicate handle in erase_multi");
  }
  bool min_removed = false;
  for (const Handle& h : hs) {
    Node* x = h.node_;
    // Promote all children of x.
    if (x->child) {
      std::vector<Node*> kids;
      Node* it = x->child;
      do {
        kids.push_back(it);
        it = it->right;
      } while (it != x->child);
      for (Node* kid : kids) {
        detach_from_siblings(kid);
        add_root(kid);
      }
      x->child = nullptr;
      x->degree = 0;
    }
    Node* p = x->parent;
    if (p) {
      // Detach the (now childless) subtree root and repair marks upward.
      if (p->child == x) p->child = (x->right == x) ? nullptr : x->right;
      detach_from_siblings(x);
      --p->degree;
      cascading_cut(p);
    } else {
      if (min_ == x) {
        min_removed = true;
        min_ = (x->right == x) ? nullptr : x->right;
      }
      detach_from_siblings(x);
    }
    free_node(x);
    --n_;
  }
  if (min_removed && min_) {
    // No consolidation here; just restore the extreme pointer.
    Node* best = min_;
    Node* cur = min_->right;
    while (cur != min_) {
      if (heap_less(cur->entry, best->entry)) best = cur;
      cur = cur->right;
    }
    min_ = best;
  }
}

const Entry& FibHeap::entry(Handle h) const { return check(h)->entry; }

bool FibHeap::handle_live(Handle h) const noexcept {
  return h.node_ && h.node_->live && h.node_->stamp == h.stamp_;
}

std::vector<Entry> FibHeap::entries() const {
  std::vector<Entry> out;
  out.reserve(n_);
  if (!min_) return out;
  std::vector<const Node*> stack;
  const Node* cur = min_;
  do {
    stack.push_back(cur);
    cur = cur->right;
  } while (cur != min_);
  while (!stack.empty()) {
    const Node* x = stack.back();
    stack.pop_back();
    out.push_back(x->entry);
    const Node* c = x->child;
    if (!c) continue;
    do {
      stack.push_back(c);
      c = c->right;
    } while (c != x->child);
  }
  return out;
}

FibHeap FibHeap::clone() const {
  FibHeap out(polarity_);
  out.own_counter_ = *counter_;
  out.counter_ = &out.own_counter_;
  out.n_ = n_;
  if (!min_) return out;

  // Deep-copy each root tree preserving ring order and child order.
  auto copy_tree = [&out](auto&& self, const Node* src) -> Node* {
    Node* dst = out.alloc_node(src->entry);
    dst->degree = src->degree;
    dst->marked = src->marked;
    const Node* c = src->child;
    if (c) {
      do {
        Node* cc = self(self, c);
        cc->parent = dst;
        if (!dst->child) {
          dst->child = cc;
        } else {
          Node* head = dst->child;
          cc->right = head;
          cc->left = head->left;
          head->left->right = cc;
          head->left = cc;
        }
        c = c->right;
      } while (c != src->child);
    }
    return dst;
  };

  const Node* cur = min_;
  Node* first = nullptr;
  Node* prev = nullptr;
  do {
    Node* copy = copy_tree(copy_tree, cur);
    if (!first) {
      first = copy;
    } else {
      copy->left = prev;
      prev->right = copy;
    }
    prev = copy;
    if (cur == min_) out.min_ = copy;
    cur = cur->right;
  } while (cur != min_);
  prev->right = first;
  first->left = prev;
  return out;
}

std::vector<std::string> FibHeap::validate() const {
  std::vector<std::string> issues;
  if (!min_) {
    if (n_ != 0) issues.push_back("empty root list but n != 0");
    return issues;
  }

  // Fibonacci numbers; F[k] saturates to avoid overflow past F_92.
  std::vector<std::uint64_t> fib(94, 0);
  fib[1] = 1;
  for (std::size_t i = 2; i < fib.size(); ++i) fib[i] = fib[i - 1] + fib[i - 2];
  auto fib_at = [&](std::size_t i) {
    return i < fib.size() ? fib[i] : std::numeric_limits<std::uint64_t>::max();
  };

  std::size_t total = 0;
  bool min_is_root = false;

  auto check_tree = [&](auto&& self, const Node* x) -> std::uint64_t {
    std::uint64_t subtree = 1;
    ++total;
    std::uint32_t child_count = 0;
    const Node* c = x->child;
    if (c) {
      std::uint32_t index = 1;  // link-time position, earliest first
      do {
        ++child_count;
        if (c->parent != x) issues.push_back("child with wrong parent pointer");
        if (c->right->left != c || c->left->right != c) {
          issues.push_back("sibling ring corrupted");
        }
        if (raw_less(polarity_ == Polarity::Min ? c->entry : x->entry,
                     polarity_ == Polarity::Min ? x->entry : c->entry)) {
          issues.push_back("heap order violated between parent and child");
        }
        // Lemma: the i-th child by link time has degree >= i - 2.
        if (index >= 2 && c->degree + 2 < index) {
          issues.push_back("child link-order degree bound violated");
        }
        subtree += self(self, c);
        ++index;
        c = c->right;
      } while (c != x->child);
    }
    if (child_count != x->degree) issues.push_back("degree does not match child count");
    // Corollary: a degree-d node has at least F_{d+2} >= phi^d descendants.
    if (subtree < fib_at(x->degree + 2)) {
      issues.push_back("subtree smaller than Fibonacci bound for its degree");
    }
    return subtree;
  };

  const Node* cur = min_;
  do {
    if (cur == min_) min_is_root = true;
    if (cur->parent) issues.push_back("root with parent pointer");
    if (cur->marked) issues.push_back("marked root");
    if (raw_less(polarity_ == Polarity::Min ? cur->entry : min_->entry,
                 polarity_ == Polarity::Min ? min_->entry : cur->entry)) {
      issues.push_back("min pointer does not hold the extreme root");
    }
    check_tree(check_tree, cur);
    cur = cur->right;
  } while (cur != min_);

  if (!min_is_root) issues.push_back("min pointer not in root list");
  if (total != n_) issues.push_back("node count does not match n");
  return issues;
}

}  // namespace lazydict
