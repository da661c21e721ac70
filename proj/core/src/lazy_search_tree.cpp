#include "lazydict/lazy_search_tree.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <limits>
#include <variant>

#include "lazydict/select.hpp"

namespace lazydict {

namespace {

// Shadow-rebuild pacing: comparison-work units granted per mutated element.
// Sized so a full rebuild (one partition pass plus heap builds, ~4 units per
// element) finishes well inside the slack between the trigger fraction and
// the 1/3 - 1/12 floor the thirds invariant promises.
constexpr std::uint64_t kShadowUnitsPerElement = 256;

// Start rebuilding a two-sided gap when its smallest third drops below 3/10.
constexpr bool needs_rebuild(std::size_t min_third, std::size_t size) {
  return size >= 4 && min_third * 10 < size * 3;
}

// The audited floor: each third of a two-sided gap holds at least
// (1/3 - 1/12) = 1/4 of the gap.
constexpr bool thirds_ok(std::size_t third, std::size_t size) {
  return third >= size / 4;
}

}  // namespace

struct LazySearchTree::ZeroSided {
  std::vector<Entry> items;
};

struct LazySearchTree::LeftSided {
  explicit LeftSided(ComparisonCounter& c) : heap(c, FibHeap::Polarity::Min) {}
  FibHeap heap;
};

struct LazySearchTree::RightSided {
  explicit RightSided(ComparisonCounter& c) : heap(c, FibHeap::Polarity::Max) {}
  FibHeap heap;
};

struct LazySearchTree::ShadowOp {
  enum class Kind : std::uint8_t { Insert, Erase, ChangeKey } kind;
  Entry entry;  // Erase: identity; ChangeKey: new value under the same seq
};

struct LazySearchTree::RebuildState {
  enum class Phase : std::uint8_t { Idle, Building, CatchingUp };
  struct ShadowLoc {
    Where where = Where::Middle;
    std::uint32_t index = 0;
    FibHeap::Handle handle{};
  };

  Phase phase = Phase::Idle;
  std::uint64_t budget = 0;
  std::vector<Entry> snapshot;
  bool partitioned = false;
  std::size_t lo_n = 0, mid_n = 0, hi_n = 0;
  std::size_t lo_built = 0, hi_built = 0;
  Entry sep_lo{}, sep_hi{};
  std::unique_ptr<FibHeap> lo, hi;
  std::vector<Entry> mid;
  std::unordered_map<std::uint64_t, ShadowLoc> index;
  std::deque<ShadowOp> backlog;
};

struct LazySearchTree::TwoSided {
  explicit TwoSided(ComparisonCounter& c)
      : lo(c, FibHeap::Polarity::Min), hi(c, FibHeap::Polarity::Max) {}
  FibHeap lo;                 // smallest third, selectable min-heap
  std::vector<Entry> middle;  // unsorted middle third
  FibHeap hi;                 // largest third, selectable max-heap
  Entry sep_lo{};             // max of the min third at partition time
  Entry sep_hi{};             // min of the max third at partition time
  RebuildState rebuild;
};

struct LazySearchTree::Gap {
  Sidedness side = Sidedness::ZeroSided;
  std::variant<ZeroSided, LeftSided, RightSided, TwoSided> data;
  DirNode* dir = nullptr;      // backlink; null while riding the pending slot
  std::shared_ptr<Gap*> self;  // stable indirection so heap melds stay O(1)
};

struct LazySearchTree::DirNode {
  DirNode* left = nullptr;
  DirNode* right = nullptr;
  DirNode* parent = nullptr;
  std::uint64_t subtree_weight = 0;
  std::unique_ptr<Gap> gap;
  std::optional<Entry> hi_sep;  // none = unbounded; rightmost node only
  bool hi_exclusive = false;    // boundary excludes entries equal to hi_sep
};

struct LazySearchTree::PQShape {
  enum class Kind : std::uint8_t { PureZero, OneSided } kind;
  FibHeap::Polarity polarity = FibHeap::Polarity::Min;
};

// ---------------------------------------------------------------------------
// lifecycle

LazySearchTree::LazySearchTree() : counter_(std::make_unique<ComparisonCounter>()) {}

LazySearchTree::~LazySearchTree() {
  if (root_) dir_destroy(root_);
}

LazySearchTree::LazySearchTree(LazySearchTree&& other) noexcept
    : root_(other.root_),
      pending_zero_(std::move(other.pending_zero_)),
      n_(other.n_),
      zero_credits_(other.zero_credits_),
      one_credits_(other.one_credits_),
      locators_(std::move(other.locators_)),
      counter_(std::move(other.counter_)) {
  other.root_ = nullptr;
  other.n_ = 0;
  other.zero_credits_ = other.one_credits_ = 0;
}

LazySearchTree& LazySearchTree::operator=(LazySearchTree&& other) noexcept {
  if (this == &other) return *this;
  if (root_) dir_destroy(root_);
  root_ = other.root_;
  pending_zero_ = std::move(other.pending_zero_);
  n_ = other.n_;
  zero_credits_ = other.zero_credits_;
  one_credits_ = other.one_credits_;
  locators_ = std::move(other.locators_);
  counter_ = std::move(other.counter_);
  other.root_ = nullptr;
  other.n_ = 0;
  other.zero_credits_ = other.one_credits_ = 0;
  return *this;
}

void LazySearchTree::dir_destroy(DirNode* node) {
  if (!node) return;
  dir_destroy(node->left);
  dir_destroy(node->right);
  if (node->gap) *node->gap->self = nullptr;
  delete node;
}

// ---------------------------------------------------------------------------
// directory: weight-annotated splay tree over gaps in key order

std::uint64_t LazySearchTree::weight_of(const DirNode* x) noexcept {
  return x ? x->subtree_weight : 0;
}

std::size_t LazySearchTree::gap_size(const Gap& g) noexcept {
  return std::visit(
      [](const auto& v) -> std::size_t {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ZeroSided>) {
          return v.items.size();
        } else if constexpr (std::is_same_v<T, TwoSided>) {
          return v.lo.size() + v.middle.size() + v.hi.size();
        } else {
          return v.heap.size();
        }
      },
      g.data);
}

void LazySearchTree::dir_refresh(DirNode* x) noexcept {
  x->subtree_weight = gap_size(*x->gap) + weight_of(x->left) + weight_of(x->right);
}

void LazySearchTree::dir_refresh_up(DirNode* x) noexcept {
  for (; x; x = x->parent) dir_refresh(x);
}

void LazySearchTree::dir_rotate(DirNode* x) noexcept {
  DirNode* p = x->parent;
  DirNode* g = p->parent;
  if (p->left == x) {
    p->left = x->right;
    if (x->right) x->right->parent = p;
    x->right = p;
  } else {
    p->right = x->left;
    if (x->left) x->left->parent = p;
    x->left = p;
  }
  p->parent = x;
  x->parent = g;
  if (g) (g->left == p ? g->left : g->right) = x;
  dir_refresh(p);
  dir_refresh(x);
}

void LazySearchTree::dir_splay(DirNode* x) noexcept {
  while (x->parent) {
    DirNode* p = x->parent;
    DirNode* g = p->parent;
    if (g) dir_rotate((g->left == p) == (p->left == x) ? p : x);
    dir_rotate(x);
  }
  root_ = x;
}

LazySearchTree::DirNode* LazySearchTree::dir_leftmost(DirNode* x) const noexcept {
  while (x && x->left) x = x->left;
  return x;
}

LazySearchTree::DirNode* LazySearchTree::dir_rightmost(DirNode* x) const noexcept {
  while (x && x->right) x = x->right;
  return x;
}

LazySearchTree::DirNode* LazySearchTree::dir_prev(DirNode* x) const noexcept {
  if (x->left) return dir_rightmost(x->left);
  while (x->parent && x->parent->left == x) x = x->parent;
  return x->parent;
}

LazySearchTree::DirNode* LazySearchTree::dir_next(DirNode* x) const noexcept {
  if (x->right) return dir_leftmost(x->right);
  while (x->parent && x->parent->right == x) x = x->parent;
  return x->parent;
}

LazySearchTree::DirNode* LazySearchTree::dir_find_by_rank(std::size_t r,
                                                          std::size_t& prefix,
                                                          std::size_t& offset) {
  DirNode* cur = root_;
  std::size_t skipped = 0;
  while (true) {
    std::size_t lw = weight_of(cur->left);
    if (r <= skipped + lw) {
      cur = cur->left;
      continue;
    }
    std::size_t here = skipped + lw + gap_size(*cur->gap);
    if (r <= here) {
      prefix = skipped + lw;
      offset = r - prefix;
      dir_splay(cur);
      return cur;
    }
    skipped = here;
    cur = cur->right;
  }
}

LazySearchTree::DirNode* LazySearchTree::dir_find_by_probe(const Entry& probe) {
  DirNode* cur = root_;
  DirNode* candidate = nullptr;
  while (cur) {
    bool fits = true;
    if (cur->hi_sep) {
      fits = cur->hi_exclusive ? less(probe, *cur->hi_sep, *counter_)
                               : !less(*cur->hi_sep, probe, *counter_);
    }
    if (fits) {
      candidate = cur;
      cur = cur->left;
    } else {
      cur = cur->right;
    }
  }
  dir_splay(candidate);
  return candidate;
}

void LazySearchTree::dir_insert_before(DirNode* pos, DirNode* node) {
  if (!pos->left) {
    pos->left = node;
    node->parent = pos;
  } else {
    DirNode* at = dir_rightmost(pos->left);
    at->right = node;
    node->parent = at;
  }
  dir_refresh_up(node);
  dir_splay(node);
}

void LazySearchTree::dir_insert_after(DirNode* pos, DirNode* node) {
  if (!pos->right) {
    pos->right = node;
    node->parent = pos;
  } else {
    DirNode* at = dir_leftmost(pos->right);
    at->left = node;
    node->parent = at;
  }
  dir_refresh_up(node);
  dir_splay(node);
}

void LazySearchTree::dir_remove(DirNode* node) {
  bool was_rightmost = (dir_next(node) == nullptr);
  dir_splay(node);
  DirNode* l = node->left;
  DirNode* r = node->right;
  if (l) l->parent = nullptr;
  if (r) r->parent = nullptr;
  if (!l) {
    root_ = r;
  } else {
    DirNode* lmax = dir_rightmost(l);
    root_ = l;  // splay needs root_ bookkeeping
    dir_splay(lmax);
    lmax->right = r;
    if (r) r->parent = lmax;
    dir_refresh(lmax);
    root_ = lmax;
    if (was_rightmost) {
      lmax->hi_sep.reset();  // new rightmost is unbounded
      lmax->hi_exclusive = false;
    }
  }
  if (node->gap) *node->gap->self = nullptr;
  delete node;
}

template <typename Fn>
void LazySearchTree::dir_walk(const DirNode* node, Fn&& fn) const {
  if (!node) return;
  dir_walk(node->left, fn);
  fn(node);
  dir_walk(node->right, fn);
}

// ---------------------------------------------------------------------------
// gap helpers

std::vector<Entry> LazySearchTree::gap_entries(const Gap& g) const {
  return std::visit(
      [](const auto& v) -> std::vector<Entry> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ZeroSided>) {
          return v.items;
        } else if constexpr (std::is_same_v<T, TwoSided>) {
          std::vector<Entry> out = v.lo.entries();
          out.insert(out.end(), v.middle.begin(), v.middle.end());
          std::vector<Entry> hi = v.hi.entries();
          out.insert(out.end(), hi.begin(), hi.end());
          return out;
        } else {
          return v.heap.entries();
        }
      },
      g.data);
}

namespace {

Entry scan_extreme(const std::vector<Entry>& v, bool want_max, ComparisonCounter& c) {
  Entry best = v.front();
  for (std::size_t i = 1; i < v.size(); ++i) {
    bool beats = want_max ? less(best, v[i], c) : less(v[i], best, c);
    if (beats) best = v[i];
  }
  return best;
}

}  // namespace

Entry LazySearchTree::gap_min_counted(Gap& g) {
  switch (g.side) {
    case Sidedness::LeftSided:
      return std::get<LeftSided>(g.data).heap.top();
    case Sidedness::RightSided:
      return scan_extreme(std::get<RightSided>(g.data).heap.entries(), false, *counter_);
    case Sidedness::ZeroSided:
      return scan_extreme(std::get<ZeroSided>(g.data).items, false, *counter_);
    case Sidedness::TwoSided: {
      auto& two = std::get<TwoSided>(g.data);
      if (!two.lo.empty()) return two.lo.top();
      if (!two.middle.empty()) return scan_extreme(two.middle, false, *counter_);
      return scan_extreme(two.hi.entries(), false, *counter_);
    }
  }
  throw std::logic_error("unreachable");
}

Entry LazySearchTree::gap_max_counted(Gap& g) {
  switch (g.side) {
    case Sidedness::RightSided:
      return std::get<RightSided>(g.data).heap.top();
    case Sidedness::LeftSided:
      return scan_extreme(std::get<LeftSided>(g.data).heap.entries(), true, *counter_);
    case Sidedness::ZeroSided:
      return scan_extreme(std::get<ZeroSided>(g.data).items, true, *counter_);
    case Sidedness::TwoSided: {
      auto& two = std::get<TwoSided>(g.data);
      if (!two.hi.empty()) return two.hi.top();
      if (!two.middle.empty()) return scan_extreme(two.middle, true, *counter_);
      return scan_extreme(two.lo.entries(), true, *counter_);
    }
  }
  throw std::logic_error("unreachable");
}

bool LazySearchTree::gap_has_cheap_min(const Gap& g) const noexcept {
  return g.side == Sidedness::LeftSided || g.side == Sidedness::TwoSided;
}

std::unique_ptr<LazySearchTree::Gap> LazySearchTree::make_gap(Sidedness side) {
  auto g = std::make_unique<Gap>();
  g->side = side;
  switch (side) {
    case Sidedness::ZeroSided:
      break;  // default alternative
    case Sidedness::LeftSided:
      g->data.emplace<LeftSided>(*counter_);
      break;
    case Sidedness::RightSided:
      g->data.emplace<RightSided>(*counter_);
      break;
    case Sidedness::TwoSided:
      g->data.emplace<TwoSided>(*counter_);
      break;
  }
  g->self = std::make_shared<Gap*>(g.get());
  return g;
}

// locator writers --------------------------------------------------------

LazySearchTree::Locator& LazySearchTree::locate(std::uint64_t seq) {
  auto it = locators_.find(seq);
  if (it == locators_.end()) throw HandleError("unknown or removed entry reference");
  return it->second;
}

const LazySearchTree::Locator& LazySearchTree::locate(std::uint64_t seq) const {
  auto it = locators_.find(seq);
  if (it == locators_.end()) throw HandleError("unknown or removed entry reference");
  return it->second;
}

void LazySearchTree::set_zero_loc(Gap& g, std::size_t index, const Entry& e) {
  locators_[e.seq] = Locator{g.self, Where::ZeroVec, static_cast<std::uint32_t>(index), {}};
}

void LazySearchTree::set_mid_loc(Gap& g, std::size_t index, const Entry& e) {
  locators_[e.seq] = Locator{g.self, Where::Middle, static_cast<std::uint32_t>(index), {}};
}

void LazySearchTree::set_heap_loc(Gap& g, Where where, FibHeap::Handle h, const Entry& e) {
  locators_[e.seq] = Locator{g.self, where, 0, h};
}

// Builds a fresh two-sided gap over `items`, wiring locators. Thirds are
// lo = hi = floor(k/3) with the remainder unsorted in the middle.
std::unique_ptr<LazySearchTree::Gap> LazySearchTree::build_two_sided(
    std::vector<Entry> items) {
  auto g = make_gap(Sidedness::TwoSided);
  auto& two = std::get<TwoSided>(g->data);
  std::size_t k = items.size();
  if (k == 0) return g;
  if (k == 1) {
    two.sep_lo = two.sep_hi = items[0];
    set_heap_loc(*g, Where::MinHeap, two.lo.insert(items[0]), items[0]);
    return g;
  }
  if (k == 2) {
    Entry a = items[0], b = items[1];
    if (less(b, a, *counter_)) std::swap(a, b);
    two.sep_lo = a;
    two.sep_hi = b;
    set_heap_loc(*g, Where::MinHeap, two.lo.insert(a), a);
    set_heap_loc(*g, Where::MaxHeap, two.hi.insert(b), b);
    return g;
  }

  std::size_t lo_n = k / 3;
  std::size_t hi_n = k / 3;
  std::size_t mid_n = k - lo_n - hi_n;
  partition_smallest(items, lo_n, *counter_);
  partition_smallest(items, lo_n, k, mid_n, *counter_);

  two.sep_lo = items[0];
  for (std::size_t i = 1; i < lo_n; ++i) {
    if (less(two.sep_lo, items[i], *counter_)) two.sep_lo = items[i];
  }
  two.sep_hi = items[lo_n + mid_n];
  for (std::size_t i = lo_n + mid_n + 1; i < k; ++i) {
    if (less(items[i], two.sep_hi, *counter_)) two.sep_hi = items[i];
  }

  for (std::size_t i = 0; i < lo_n; ++i) {
    set_heap_loc(*g, Where::MinHeap, two.lo.insert(items[i]), items[i]);
  }
  for (std::size_t i = lo_n; i < lo_n + mid_n; ++i) {
    two.middle.push_back(items[i]);
    set_mid_loc(*g, two.middle.size() - 1, items[i]);
  }
  for (std::size_t i = lo_n + mid_n; i < k; ++i) {
    set_heap_loc(*g, Where::MaxHeap, two.hi.insert(items[i]), items[i]);
  }
  return g;
}

void LazySearchTree::place_in_two_sided(Gap& g, const Entry& e) {
  auto& two = std::get<TwoSided>(g.data);
  if (!less(two.sep_lo, e, *counter_)) {
    set_heap_loc(g, Where::MinHeap, two.lo.insert(e), e);
  } else if (less(two.sep_hi, e, *counter_)) {
    set_heap_loc(g, Where::MaxHeap, two.hi.insert(e), e);
  } else {
    two.middle.push_back(e);
    set_mid_loc(g, two.middle.size() - 1, e);
  }
}

// ---------------------------------------------------------------------------
// construction and insertion

LazySearchTree LazySearchTree::construct(std::vector<Entry> items) {
  LazySearchTree t;
  if (items.empty()) return t;
  auto g = t.make_gap(Sidedness::ZeroSided);
  auto& zero = std::get<ZeroSided>(g->data);
  zero.items = std::move(items);
  for (std::size_t i = 0; i < zero.items.size(); ++i) {
    t.set_zero_loc(*g, i, zero.items[i]);
  }
  t.n_ = zero.items.size();
  t.zero_credits_ = zero.items.size();
  auto* node = new DirNode;
  node->gap = std::move(g);
  node->gap->dir = node;
  t.root_ = node;
  t.dir_refresh(node);
  return t;
}

LazySearchTree::EntryRef LazySearchTree::insert(Key key, std::uint64_t payload) {
  return insert_impl(make_entry(key, payload));
}

LazySearchTree::EntryRef LazySearchTree::insert_entry(const Entry& e) {
  if (locators_.count(e.seq)) throw HandleError("entry seq already present");
  return insert_impl(e);
}

LazySearchTree::EntryRef LazySearchTree::insert_impl(const Entry& e) {
  if (!root_) {
    auto g = make_gap(Sidedness::ZeroSided);
    auto* node = new DirNode;
    node->gap = std::move(g);
    node->gap->dir = node;
    root_ = node;
  }
  DirNode* node = dir_find_by_probe(e);
  Gap& g = *node->gap;
  switch (g.side) {
    case Sidedness::ZeroSided: {
      auto& zero = std::get<ZeroSided>(g.data);
      zero.items.push_back(e);
      set_zero_loc(g, zero.items.size() - 1, e);
      ++zero_credits_;
      break;
    }
    case Sidedness::LeftSided:
      set_heap_loc(g, Where::MinHeap, std::get<LeftSided>(g.data).heap.insert(e), e);
      ++one_credits_;
      break;
    case Sidedness::RightSided:
      set_heap_loc(g, Where::MaxHeap, std::get<RightSided>(g.data).heap.insert(e), e);
      ++one_credits_;
      break;
    case Sidedness::TwoSided:
      place_in_two_sided(g, e);
      break;
  }
  ++n_;
  dir_refresh_up(node);
  if (g.side == Sidedness::TwoSided) {
    fund_mutation(g, ShadowOp{ShadowOp::Kind::Insert, e});
  }
  return EntryRef{e.seq};
}

// ---------------------------------------------------------------------------
// rank queries

Entry LazySearchTree::query_by_rank(std::size_t r) {
  if (r < 1 || r > n_) throw std::out_of_range("rank out of range");
  normalize_pending();
  return rank_query_impl(r);
}

Entry LazySearchTree::rank_query_impl(std::size_t r) {
  std::size_t prefix = 0, offset = 0;
  DirNode* node = dir_find_by_rank(r, prefix, offset);
  Gap& g = *node->gap;
  if (offset == gap_size(g) &&
      (g.side == Sidedness::RightSided || g.side == Sidedness::TwoSided)) {
    // Right boundary already queried; the answer is the gap maximum.
    return gap_max_counted(g);
  }
  return split_gap_at(node, offset);
}

// Splits node's gap so the left piece holds exactly `offset` entries and
// returns the entry of that boundary rank. The extracted piece becomes a new
// two-sided gap; the surviving structure keeps its variant.
Entry LazySearchTree::split_gap_at(DirNode* node, std::size_t offset) {
  Gap& g = *node->gap;
  std::size_t gsz = gap_size(g);
  assert(offset >= 1 && offset <= gsz);

  switch (g.side) {
    case Sidedness::ZeroSided: {
      auto& zero = std::get<ZeroSided>(g.data);
      std::vector<Entry> items = std::move(zero.items);
      zero_credits_ -= items.size();
      if (offset == gsz) {
        // Right-edge query: only the right boundary has been touched, so the
        // whole gap turns into a right-sided max-heap.
        g.side = Sidedness::RightSided;
        g.data.emplace<RightSided>(*counter_);
        auto& heap = std::get<RightSided>(g.data).heap;
        for (const Entry& e : items) set_heap_loc(g, Where::MaxHeap, heap.insert(e), e);
        one_credits_ += items.size();
        return heap.top();
      }
      partition_smallest(items, offset, *counter_);

      std::vector<Entry> left(items.begin(),
                              items.begin() + static_cast<std::ptrdiff_t>(offset));
      std::vector<Entry> rest(items.begin() + static_cast<std::ptrdiff_t>(offset),
                              items.end());
      auto left_gap = build_two_sided(std::move(left));
      Entry answer = gap_max_counted(*left_gap);
      // Survivor becomes a left-sided gap: its left boundary was just queried.
      g.side = Sidedness::LeftSided;
      g.data.emplace<LeftSided>(*counter_);
      auto& heap = std::get<LeftSided>(g.data).heap;
      for (const Entry& e : rest) set_heap_loc(g, Where::MinHeap, heap.insert(e), e);
      one_credits_ += rest.size();

      auto* lnode = new DirNode;
      lnode->gap = std::move(left_gap);
      lnode->gap->dir = lnode;
      lnode->hi_sep = answer;
      dir_refresh_up(node);
      dir_insert_before(node, lnode);
      return answer;
    }

    case Sidedness::LeftSided: {
      auto& heap = std::get<LeftSided>(g.data).heap;
      std::vector<Entry> extracted = heap.extract_k(offset);
      one_credits_ -= extracted.size();
      auto left_gap = build_two_sided(std::move(extracted));
      Entry answer = gap_max_counted(*left_gap);
      if (heap.empty()) {
        // Whole gap extracted: the two-sided piece replaces it in place.
        *g.self = nullptr;
        left_gap->dir = node;
        node->gap = std::move(left_gap);
        dir_refresh_up(node);
        return answer;
      }
      auto* lnode = new DirNode;
      lnode->gap = std::move(left_gap);
      lnode->gap->dir = lnode;
      lnode->hi_sep = answer;
      dir_refresh_up(node);
      dir_insert_before(node, lnode);
      return answer;
    }

    case Sidedness::RightSided: {
      auto& heap = std::get<RightSided>(g.data).heap;
      std::size_t from_right = gsz - offset;  // >= 1: offset == gsz is the fast path
      std::vector<Entry> extracted = heap.extract_k(from_right);
      one_credits_ -= extracted.size();
      auto right_gap = build_two_sided(std::move(extracted));
      Entry answer = heap.top();  // survivor max = the queried rank
      auto* rnode = new DirNode;
      rnode->gap = std::move(right_gap);
      rnode->gap->dir = rnode;
      rnode->hi_sep = std::move(node->hi_sep);
      rnode->hi_exclusive = node->hi_exclusive;
      node->hi_sep = answer;
      node->hi_exclusive = false;
      dir_refresh_up(node);
      dir_insert_after(node, rnode);
      return answer;
    }

    case Sidedness::TwoSided: {
      auto& two = std::get<TwoSided>(g.data);
      std::size_t lo_n = two.lo.size();
      std::size_t mid_n = two.middle.size();
      if (offset <= lo_n) {
        std::vector<Entry> extracted = two.lo.extract_k(offset);
        auto left_gap = build_two_sided(std::move(extracted));
        Entry answer = gap_max_counted(*left_gap);
        auto* lnode = new DirNode;
        lnode->gap = std::move(left_gap);
        lnode->gap->dir = lnode;
        lnode->hi_sep = answer;
        abort_rebuild(g);
        dir_refresh_up(node);
        dir_insert_before(node, lnode);
        maybe_trigger_rebuild(g, kShadowUnitsPerElement * offset);
        return answer;
      }
      if (offset > lo_n + mid_n) {
        std::size_t from_right = gsz - offset;  // >= 1: offset == gsz is the fast path
        std::vector<Entry> extracted = two.hi.extract_k(from_right);
        auto right_gap = build_two_sided(std::move(extracted));
        Entry answer = two.hi.top();
        auto* rnode = new DirNode;
        rnode->gap = std::move(right_gap);
        rnode->gap->dir = rnode;
        rnode->hi_sep = std::move(node->hi_sep);
        rnode->hi_exclusive = node->hi_exclusive;
        node->hi_sep = answer;
        node->hi_exclusive = false;
        abort_rebuild(g);
        dir_refresh_up(node);
        dir_insert_after(node, rnode);
        maybe_trigger_rebuild(g, kShadowUnitsPerElement * from_right);
        return answer;
      }
      // Middle third: rebuild the whole gap around the queried rank.
      std::vector<Entry> all = gap_entries(g);
      partition_smallest(all, offset, *counter_);
      std::vector<Entry> left(all.begin(),
                              all.begin() + static_cast<std::ptrdiff_t>(offset));
      std::vector<Entry> rest(all.begin() + static_cast<std::ptrdiff_t>(offset),
                              all.end());
      auto left_gap = build_two_sided(std::move(left));
      auto right_gap = build_two_sided(std::move(rest));
      Entry answer = gap_max_counted(*left_gap);

      *g.self = nullptr;
      right_gap->dir = node;
      node->gap = std::move(right_gap);
      auto* lnode = new DirNode;
      lnode->gap = std::move(left_gap);
      lnode->gap->dir = lnode;
      lnode->hi_sep = answer;
      dir_refresh_up(node);
      dir_insert_before(node, lnode);
      return answer;
    }
  }
  throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// key queries

LazySearchTree::KeyQueryResult LazySearchTree::query_by_key(Key key) {
  KeyQueryResult res;
  if (n_ == 0) return res;
  normalize_pending();

  Entry probe_hi{key, std::numeric_limits<std::uint64_t>::max(), 0};
  std::size_t r1 = count_leq_and_split(probe_hi);
  Entry probe_lo{key, 0, 0};
  std::size_t r0 = count_leq_and_split(probe_lo);

  res.rank = r1;
  res.contains = r1 > r0;
  if (r0 >= 1) {
    auto cheap = cheap_entry_at(r0);
    res.predecessor = cheap ? *cheap : rank_query_impl(r0);
  }
  if (r1 < n_) {
    auto cheap = cheap_entry_at(r1 + 1);
    res.successor = cheap ? *cheap : rank_query_impl(r1 + 1);
  }
  return res;
}

// Number of entries <= probe; splits the containing gap at that rank when it
// falls strictly inside the gap. Heap gaps locate the boundary by doubling
// selection, comparing the probe against the extreme of the selected prefix.
std::size_t LazySearchTree::count_leq_and_split(const Entry& probe) {
  DirNode* node = dir_find_by_probe(probe);
  Gap& g = *node->gap;
  std::size_t prefix = weight_of(node->left);  // node is the splayed root
  std::size_t gsz = gap_size(g);
  std::size_t c = 0;

  auto count_in = [&](const std::vector<Entry>& xs) {
    std::size_t cnt = 0;
    for (const Entry& e : xs) {
      if (!less(probe, e, *counter_)) ++cnt;
    }
    return cnt;
  };
  // Entries <= probe among the |heap| smallest, found by doubling selection.
  auto doubling_low = [&](FibHeap& heap) -> std::size_t {
    if (heap.empty()) return 0;
    std::size_t m = 1;
    while (true) {
      m = std::min(m, heap.size());
      auto sel = heap.select_k(m).entries;
      Entry mx = scan_extreme(sel, true, *counter_);
      if (m == heap.size() || less(probe, mx, *counter_)) return count_in(sel);
      m *= 2;
    }
  };
  // Entries > probe among the |heap| largest of a max-heap.
  auto doubling_high = [&](FibHeap& heap) -> std::size_t {
    if (heap.empty()) return 0;
    std::size_t m = 1;
    while (true) {
      m = std::min(m, heap.size());
      auto sel = heap.select_k(m).entries;
      Entry mn = scan_extreme(sel, false, *counter_);
      if (m == heap.size() || !less(probe, mn, *counter_)) {
        std::size_t gt = 0;
        for (const Entry& e : sel) {
          if (less(probe, e, *counter_)) ++gt;
        }
        return gt;
      }
      m *= 2;
    }
  };

  switch (g.side) {
    case Sidedness::ZeroSided:
      c = count_in(std::get<ZeroSided>(g.data).items);
      break;
    case Sidedness::LeftSided:
      c = doubling_low(std::get<LeftSided>(g.data).heap);
      break;
    case Sidedness::RightSided:
      c = gsz - doubling_high(std::get<RightSided>(g.data).heap);
      break;
    case Sidedness::TwoSided: {
      auto& two = std::get<TwoSided>(g.data);
      if (!less(two.sep_lo, probe, *counter_)) {
        c = doubling_low(two.lo);
      } else if (less(two.sep_hi, probe, *counter_)) {
        c = gsz - doubling_high(two.hi);
      } else {
        c = two.lo.size() + count_in(two.middle);
      }
      break;
    }
  }

  if (c > 0 && c < gsz) split_gap_at(node, c);
  return prefix + c;
}

// Entry of rank r when readable without a split: either the max of a gap
// whose right boundary is already queried or the min of a gap with a cheap
// minimum. Returns nullopt when only a full query would answer.
std::optional<Entry> LazySearchTree::cheap_entry_at(std::size_t r) {
  std::size_t prefix = 0, offset = 0;
  DirNode* node = dir_find_by_rank(r, prefix, offset);
  Gap& g = *node->gap;
  if (offset == gap_size(g) &&
      (g.side == Sidedness::RightSided || g.side == Sidedness::TwoSided)) {
    return gap_max_counted(g);
  }
  if (offset == 1 && gap_has_cheap_min(g)) {
    return gap_min_counted(g);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// point mutations

namespace {

Entry read_slot(const std::vector<Entry>& v, std::size_t idx) { return v[idx]; }

}  // namespace

Entry LazySearchTree::entry_of(EntryRef ref) const {
  const Locator& loc = locate(ref.seq);
  const Gap& g = **loc.cell;
  switch (loc.where) {
    case Where::ZeroVec:
      return read_slot(std::get<ZeroSided>(g.data).items, loc.index);
    case Where::Middle:
      return read_slot(std::get<TwoSided>(g.data).middle, loc.index);
    case Where::MinHeap:
      return g.side == Sidedness::TwoSided ? std::get<TwoSided>(g.data).lo.entry(loc.handle)
                                           : std::get<LeftSided>(g.data).heap.entry(loc.handle);
    case Where::MaxHeap:
      return g.side == Sidedness::TwoSided ? std::get<TwoSided>(g.data).hi.entry(loc.handle)
                                           : std::get<RightSided>(g.data).heap.entry(loc.handle);
  }
  throw std::logic_error("unreachable");
}

bool LazySearchTree::ref_live(EntryRef ref) const noexcept {
  return locators_.count(ref.seq) > 0;
}

// Rejects key changes that would cross the gap's separators.
void LazySearchTree::route_bounds_check(const Entry& e, DirNode* node) {
  if (node->hi_sep) {
    bool fits = node->hi_exclusive ? less(e, *node->hi_sep, *counter_)
                                   : !less(*node->hi_sep, e, *counter_);
    if (!fits) throw OutOfGapError("new key above the gap's upper separator");
  }
  if (DirNode* prev = dir_prev(node)) {
    // Entry must sit strictly above the previous gap's boundary.
    bool above = prev->hi_exclusive ? !less(e, *prev->hi_sep, *counter_)
                                    : less(*prev->hi_sep, e, *counter_);
    if (!above) throw OutOfGapError("new key below the gap's lower separator");
  }
}

void LazySearchTree::change_key(EntryRef ref, Key new_key) {
  Locator& loc = locate(ref.seq);
  Gap* g = *loc.cell;
  Entry cur = entry_of(ref);
  Entry next{new_key, cur.seq, cur.payload};
  if (g->dir) route_bounds_check(next, g->dir);  // pending gaps span everything

  switch (g->side) {
    case Sidedness::ZeroSided: {
      std::get<ZeroSided>(g->data).items[loc.index] = next;
      return;
    }
    case Sidedness::LeftSided: {
      auto& heap = std::get<LeftSided>(g->data).heap;
      if (less(next, cur, *counter_)) {
        heap.decrease_key(loc.handle, new_key);
      } else {
        heap.erase(loc.handle);
        set_heap_loc(*g, Where::MinHeap, heap.insert(next), next);
      }
      return;
    }
    case Sidedness::RightSided: {
      auto& heap = std::get<RightSided>(g->data).heap;
      if (less(cur, next, *counter_)) {
        heap.decrease_key(loc.handle, new_key);  // toward a max-heap's top
      } else {
        heap.erase(loc.handle);
        set_heap_loc(*g, Where::MaxHeap, heap.insert(next), next);
      }
      return;
    }
    case Sidedness::TwoSided: {
      auto& two = std::get<TwoSided>(g->data);
      switch (loc.where) {
        case Where::MinHeap:
          if (less(next, cur, *counter_)) {
            two.lo.decrease_key(loc.handle, new_key);
          } else {
            two.lo.erase(loc.handle);
            place_in_two_sided(*g, next);
          }
          break;
        case Where::MaxHeap:
          if (less(cur, next, *counter_)) {
            two.hi.decrease_key(loc.handle, new_key);
          } else {
            two.hi.erase(loc.handle);
            place_in_two_sided(*g, next);
          }
          break;
        case Where::Middle: {
          // Any-direction change via third re-routing.
          bool still_mid = less(two.sep_lo, next, *counter_) &&
                           !less(two.sep_hi, next, *counter_);
          if (still_mid) {
            two.middle[loc.index] = next;
          } else {
            std::size_t idx = loc.index;
            if (idx + 1 != two.middle.size()) {
              two.middle[idx] = two.middle.back();
              locators_.at(two.middle[idx].seq).index = static_cast<std::uint32_t>(idx);
            }
            two.middle.pop_back();
            place_in_two_sided(*g, next);
          }
          break;
        }
        case Where::ZeroVec:
          throw std::logic_error("two-sided gap cannot hold zero-vector entries");
      }
      fund_mutation(*g, ShadowOp{ShadowOp::Kind::ChangeKey, next});
      return;
    }
  }
}

void LazySearchTree::erase(EntryRef ref) {
  Locator loc = locate(ref.seq);  // copy: the map entry dies below
  Gap* g = *loc.cell;
  Entry cur = entry_of(ref);
  locators_.erase(ref.seq);

  switch (g->side) {
    case Sidedness::ZeroSided: {
      auto& items = std::get<ZeroSided>(g->data).items;
      std::size_t idx = loc.index;
      if (idx + 1 != items.size()) {
        items[idx] = items.back();
        locators_.at(items[idx].seq).index = static_cast<std::uint32_t>(idx);
      }
      items.pop_back();
      --zero_credits_;
      break;
    }
    case Sidedness::LeftSided:
      std::get<LeftSided>(g->data).heap.erase(loc.handle);
      --one_credits_;
      break;
    case Sidedness::RightSided:
      std::get<RightSided>(g->data).heap.erase(loc.handle);
      --one_credits_;
      break;
    case Sidedness::TwoSided: {
      auto& two = std::get<TwoSided>(g->data);
      switch (loc.where) {
        case Where::MinHeap:
          two.lo.erase(loc.handle);
          break;
        case Where::MaxHeap:
          two.hi.erase(loc.handle);
          break;
        case Where::Middle: {
          std::size_t idx = loc.index;
          if (idx + 1 != two.middle.size()) {
            two.middle[idx] = two.middle.back();
            locators_.at(two.middle[idx].seq).index = static_cast<std::uint32_t>(idx);
          }
          two.middle.pop_back();
          break;
        }
        case Where::ZeroVec:
          throw std::logic_error("two-sided gap cannot hold zero-vector entries");
      }
      break;
    }
  }

  --n_;
  if (g->dir) {
    DirNode* node = g->dir;
    dir_refresh_up(node);
    if (g->side == Sidedness::TwoSided && gap_size(*g) > 0) {
      fund_mutation(*g, ShadowOp{ShadowOp::Kind::Erase, cur});
    }
    remove_gap_if_empty(node);
  } else {
    // Entry lived in the pending zero-sided gap.
    if (gap_size(*g) == 0) pending_zero_.reset();
  }
}

void LazySearchTree::remove_gap_if_empty(DirNode* node) {
  if (gap_size(*node->gap) != 0) return;
  if (!node->left && !node->right && !node->parent) {
    // Last gap: the tree becomes empty.
    dir_destroy(node);
    root_ = nullptr;
    return;
  }
  dir_remove(node);
}

// ---------------------------------------------------------------------------
// pending zero-sided gap (priority-queue shape)

void LazySearchTree::normalize_pending() {
  if (!pending_zero_) return;
  auto pending = std::move(pending_zero_);
  auto& items = std::get<ZeroSided>(pending->data).items;
  DirNode* node = root_;  // PQ shape: exactly one directory gap
  Gap& g = *node->gap;
  for (const Entry& e : items) {
    if (g.side == Sidedness::LeftSided) {
      set_heap_loc(g, Where::MinHeap, std::get<LeftSided>(g.data).heap.insert(e), e);
    } else {
      set_heap_loc(g, Where::MaxHeap, std::get<RightSided>(g.data).heap.insert(e), e);
    }
  }
  zero_credits_ -= items.size();
  one_credits_ += items.size();
  *pending->self = nullptr;
  dir_refresh_up(node);
}

// ---------------------------------------------------------------------------
// incremental rebuild of two-sided gaps


void LazySearchTree::fund_mutation(Gap& g, ShadowOp op) {
  auto& rb = std::get<TwoSided>(g.data).rebuild;
  if (rb.phase != RebuildState::Phase::Idle) {
    rb.backlog.push_back(std::move(op));
    rb.budget += kShadowUnitsPerElement;
    pump_rebuild(g);
  } else {
    maybe_trigger_rebuild(g, kShadowUnitsPerElement);
  }
}

void LazySearchTree::maybe_trigger_rebuild(Gap& g, std::uint64_t budget) {
  auto& two = std::get<TwoSided>(g.data);
  auto& rb = two.rebuild;
  if (rb.phase != RebuildState::Phase::Idle) {
    rb.budget += budget;
    pump_rebuild(g);
    return;
  }
  std::size_t sz = gap_size(g);
  std::size_t min_third = std::min({two.lo.size(), two.middle.size(), two.hi.size()});
  if (!needs_rebuild(min_third, sz)) return;

  rb.phase = RebuildState::Phase::Building;
  rb.budget = budget;
  rb.snapshot = gap_entries(g);
  rb.partitioned = false;
  rb.lo_built = rb.hi_built = 0;
  rb.lo = std::make_unique<FibHeap>(*counter_, FibHeap::Polarity::Min);
  rb.hi = std::make_unique<FibHeap>(*counter_, FibHeap::Polarity::Max);
  rb.mid.clear();
  rb.index.clear();
  rb.backlog.clear();
  pump_rebuild(g);
}

void LazySearchTree::pump_rebuild(Gap& g) {
  auto& rb = std::get<TwoSided>(g.data).rebuild;
  while (rb.phase != RebuildState::Phase::Idle && rb.budget > 0) {
    if (rb.phase == RebuildState::Phase::Building) {
      if (!rb.partitioned) {
        std::size_t k = rb.snapshot.size();
        std::uint64_t cost = 3 * k + 2;
        if (rb.budget < cost) return;  // wait for more funding
        rb.budget -= cost;
        rb.lo_n = k / 3;
        rb.hi_n = k / 3;
        rb.mid_n = k - rb.lo_n - rb.hi_n;
        if (k >= 3) {
          partition_smallest(rb.snapshot, rb.lo_n, *counter_);
          partition_smallest(rb.snapshot, rb.lo_n, k, rb.mid_n, *counter_);
          rb.sep_lo = scan_extreme(
              {rb.snapshot.begin(), rb.snapshot.begin() + static_cast<std::ptrdiff_t>(rb.lo_n)},
              true, *counter_);
          rb.sep_hi = scan_extreme({rb.snapshot.begin() + static_cast<std::ptrdiff_t>(
                                        rb.lo_n + rb.mid_n),
                                    rb.snapshot.end()},
                                   false, *counter_);
        } else {
          // Tiny gaps rebuild as the build_two_sided special cases do.
          std::sort(rb.snapshot.begin(), rb.snapshot.end(),
                    [this](const Entry& a, const Entry& b) { return less(a, b, *counter_); });
          rb.lo_n = k >= 1 ? 1 : 0;
          rb.hi_n = k >= 2 ? 1 : 0;
          rb.mid_n = k - rb.lo_n - rb.hi_n;
          if (k >= 1) rb.sep_lo = rb.snapshot.front();
          rb.sep_hi = k >= 2 ? rb.snapshot.back() : rb.sep_lo;
        }
        // Middle third moves wholesale; no comparisons.
        rb.mid.assign(rb.snapshot.begin() + static_cast<std::ptrdiff_t>(rb.lo_n),
                      rb.snapshot.begin() + static_cast<std::ptrdiff_t>(rb.lo_n + rb.mid_n));
        for (std::size_t i = 0; i < rb.mid.size(); ++i) {
          rb.index[rb.mid[i].seq] =
              RebuildState::ShadowLoc{Where::Middle, static_cast<std::uint32_t>(i), {}};
        }
        rb.partitioned = true;
      } else if (rb.lo_built < rb.lo_n) {
        const Entry& e = rb.snapshot[rb.lo_built];
        rb.index[e.seq] = RebuildState::ShadowLoc{Where::MinHeap, 0, rb.lo->insert(e)};
        ++rb.lo_built;
        --rb.budget;
      } else if (rb.hi_built < rb.hi_n) {
        const Entry& e = rb.snapshot[rb.lo_n + rb.mid_n + rb.hi_built];
        rb.index[e.seq] = RebuildState::ShadowLoc{Where::MaxHeap, 0, rb.hi->insert(e)};
        ++rb.hi_built;
        --rb.budget;
      } else {
        rb.phase = RebuildState::Phase::CatchingUp;
      }
    } else {  // CatchingUp
      if (rb.backlog.empty()) {
        swap_in_shadow(g);
        return;
      }
      ShadowOp op = std::move(rb.backlog.front());
      rb.backlog.pop_front();
      replay_shadow_op(g, op);
      --rb.budget;
    }
  }
}

void LazySearchTree::replay_shadow_op(Gap& g, const ShadowOp& op) {
  auto& rb = std::get<TwoSided>(g.data).rebuild;
  auto shadow_erase = [&](std::uint64_t seq) {
    auto it = rb.index.find(seq);
    if (it == rb.index.end()) return;
    RebuildState::ShadowLoc sl = it->second;
    rb.index.erase(it);
    switch (sl.where) {
      case Where::MinHeap:
        rb.lo->erase(sl.handle);
        break;
      case Where::MaxHeap:
        rb.hi->erase(sl.handle);
        break;
      case Where::Middle: {
        std::size_t idx = sl.index;
        if (idx + 1 != rb.mid.size()) {
          rb.mid[idx] = rb.mid.back();
          rb.index.at(rb.mid[idx].seq).index = static_cast<std::uint32_t>(idx);
        }
        rb.mid.pop_back();
        break;
      }
      case Where::ZeroVec:
        break;
    }
  };
  auto shadow_insert = [&](const Entry& e) {
    if (!less(rb.sep_lo, e, *counter_)) {
      rb.index[e.seq] = RebuildState::ShadowLoc{Where::MinHeap, 0, rb.lo->insert(e)};
    } else if (less(rb.sep_hi, e, *counter_)) {
      rb.index[e.seq] = RebuildState::ShadowLoc{Where::MaxHeap, 0, rb.hi->insert(e)};
    } else {
      rb.mid.push_back(e);
      rb.index[e.seq] =
          RebuildState::ShadowLoc{Where::Middle, static_cast<std::uint32_t>(rb.mid.size() - 1), {}};
    }
  };

  switch (op.kind) {
    case ShadowOp::Kind::Insert:
      shadow_insert(op.entry);
      break;
    case ShadowOp::Kind::Erase:
      shadow_erase(op.entry.seq);
      break;
    case ShadowOp::Kind::ChangeKey:
      shadow_erase(op.entry.seq);
      shadow_insert(op.entry);
      break;
  }
}

void LazySearchTree::swap_in_shadow(Gap& g) {
  auto& two = std::get<TwoSided>(g.data);
  auto& rb = two.rebuild;
  two.lo = std::move(*rb.lo);
  two.middle = std::move(rb.mid);
  two.hi = std::move(*rb.hi);
  two.sep_lo = rb.sep_lo;
  two.sep_hi = rb.sep_hi;
  for (const auto& [seq, sl] : rb.index) {
    Locator& loc = locators_.at(seq);
    loc.cell = g.self;
    loc.where = sl.where;
    loc.index = sl.index;
    loc.handle = sl.handle;
  }
  two.rebuild = RebuildState{};
}

void LazySearchTree::abort_rebuild(Gap& g) {
  auto& rb = std::get<TwoSided>(g.data).rebuild;
  if (rb.phase != RebuildState::Phase::Idle) rb = RebuildState{};
}

// ---------------------------------------------------------------------------
// split and merge

std::pair<LazySearchTree, LazySearchTree> LazySearchTree::split(std::size_t r) && {
  if (r > n_) throw std::out_of_range("split rank out of range");
  LazySearchTree left, right;
  if (r == 0) {
    right = std::move(*this);
    return {std::move(left), std::move(right)};
  }
  if (r == n_) {
    left = std::move(*this);
    return {std::move(left), std::move(right)};
  }
  normalize_pending();
  rank_query_impl(r);  // establish the boundary at rank r

  std::size_t prefix = 0, offset = 0;
  DirNode* node = dir_find_by_rank(r, prefix, offset);
  assert(offset == gap_size(*node->gap));
  dir_splay(node);
  DirNode* rroot = node->right;
  node->right = nullptr;
  if (rroot) rroot->parent = nullptr;
  dir_refresh(node);
  node->hi_sep.reset();  // node is the new left tree's rightmost gap
  node->hi_exclusive = false;

  std::uint64_t lw = weight_of(node);
  std::uint64_t rw = weight_of(rroot);

  // The bigger side inherits this tree's identity (locator map + counter);
  // the smaller side is rebuilt into a fresh tree so migration cost tracks
  // the smaller piece.
  auto migrate_side = [this](LazySearchTree& fresh, LazySearchTree& keeper,
                             DirNode* subtree) {
    fresh.root_ = subtree;
    std::uint64_t zero = 0, one = 0;
    auto walk = [&](auto&& self, DirNode* d) -> void {
      if (!d) return;
      self(self, d->left);
      Gap& g = *d->gap;
      if (g.side == Sidedness::TwoSided) {
        abort_rebuild(g);  // shadow heaps reference the old counter
        auto& two = std::get<TwoSided>(g.data);
        two.lo.set_counter(*fresh.counter_);
        two.hi.set_counter(*fresh.counter_);
      } else if (g.side == Sidedness::LeftSided) {
        std::get<LeftSided>(g.data).heap.set_counter(*fresh.counter_);
      } else if (g.side == Sidedness::RightSided) {
        std::get<RightSided>(g.data).heap.set_counter(*fresh.counter_);
      }
      std::size_t sz = gap_size(g);
      if (g.side == Sidedness::ZeroSided) zero += sz;
      if (g.side == Sidedness::LeftSided || g.side == Sidedness::RightSided) one += sz;
      for (const Entry& e : gap_entries(g)) {
        auto node_handle = keeper.locators_.extract(e.seq);
        fresh.locators_.insert(std::move(node_handle));
      }
      self(self, d->right);
    };
    walk(walk, subtree);
    fresh.zero_credits_ = zero;
    fresh.one_credits_ = one;
    keeper.zero_credits_ -= zero;
    keeper.one_credits_ -= one;
  };

  if (rw <= lw) {
    left.counter_ = std::move(counter_);
    left.locators_ = std::move(locators_);
    left.root_ = node;
    left.n_ = lw;
    left.zero_credits_ = zero_credits_;
    left.one_credits_ = one_credits_;
    right.n_ = rw;
    migrate_side(right, left, rroot);
  } else {
    right.counter_ = std::move(counter_);
    right.locators_ = std::move(locators_);
    right.root_ = rroot;
    right.n_ = rw;
    right.zero_credits_ = zero_credits_;
    right.one_credits_ = one_credits_;
    left.n_ = lw;
    migrate_side(left, right, node);
  }
  root_ = nullptr;
  n_ = 0;
  zero_credits_ = one_credits_ = 0;
  counter_ = std::make_unique<ComparisonCounter>();
  return {std::move(left), std::move(right)};
}

LazySearchTree LazySearchTree::merge(LazySearchTree t1, LazySearchTree t2) {
  if (t1.empty()) return t2;
  if (t2.empty()) return t1;
  t1.normalize_pending();
  t2.normalize_pending();

  DirNode* last = t1.dir_rightmost(t1.root_);
  DirNode* first = t2.dir_leftmost(t2.root_);
  Gap& lg = *last->gap;
  Gap& fg = *first->gap;

  // Boundary separator between the trees, from whichever side yields it
  // cheapest: an already-queried max/min is O(1), otherwise the smaller
  // unqueried side is scanned.
  Entry sep;
  bool exclusive = false;
  if (lg.side == Sidedness::RightSided || lg.side == Sidedness::TwoSided) {
    sep = t1.gap_max_counted(lg);
  } else if (fg.side == Sidedness::LeftSided || fg.side == Sidedness::TwoSided) {
    sep = t2.gap_min_counted(fg);
    exclusive = true;
  } else if (gap_size(lg) <= gap_size(fg)) {
    sep = t1.gap_max_counted(lg);
  } else {
    sep = t2.gap_min_counted(fg);
    exclusive = true;
  }

  t1.dir_splay(last);
  last->hi_sep = sep;
  last->hi_exclusive = exclusive;
  last->right = t2.root_;
  t2.root_->parent = last;
  t2.root_ = nullptr;
  t1.dir_refresh(last);

  // Fold t2's bookkeeping into t1.
  t1.counter_->add(t2.counter_->value());
  auto repoint = [&](auto&& self, DirNode* d) -> void {
    if (!d) return;
    self(self, d->left);
    Gap& g = *d->gap;
    if (g.side == Sidedness::TwoSided) {
      t1.abort_rebuild(g);
      auto& two = std::get<TwoSided>(g.data);
      two.lo.set_counter(*t1.counter_);
      two.hi.set_counter(*t1.counter_);
    } else if (g.side == Sidedness::LeftSided) {
      std::get<LeftSided>(g.data).heap.set_counter(*t1.counter_);
    } else if (g.side == Sidedness::RightSided) {
      std::get<RightSided>(g.data).heap.set_counter(*t1.counter_);
    }
    self(self, d->right);
  };
  repoint(repoint, last->right);
  t1.locators_.merge(t2.locators_);
  t1.n_ += t2.n_;
  t1.zero_credits_ += t2.zero_credits_;
  t1.one_credits_ += t2.one_credits_;
  t2.n_ = 0;
  t2.zero_credits_ = t2.one_credits_ = 0;
  return t1;
}

LazySearchTree::PQShape LazySearchTree::pq_shape() const {
  if (!root_ || root_->left || root_->right) {
    throw ShapeError("priority-queue merge requires a single-gap tree");
  }
  const Gap& g = *root_->gap;
  switch (g.side) {
    case Sidedness::ZeroSided:
      if (pending_zero_) throw ShapeError("zero-sided tree cannot carry a pending gap");
      return PQShape{PQShape::Kind::PureZero, FibHeap::Polarity::Min};
    case Sidedness::LeftSided:
      return PQShape{PQShape::Kind::OneSided, FibHeap::Polarity::Min};
    case Sidedness::RightSided:
      return PQShape{PQShape::Kind::OneSided, FibHeap::Polarity::Max};
    case Sidedness::TwoSided:
      throw ShapeError("two-sided gap is not priority-queue shaped");
  }
  throw std::logic_error("unreachable");
}

LazySearchTree LazySearchTree::merge_pq(LazySearchTree t1, LazySearchTree t2) {
  if (t1.empty()) return t2;
  if (t2.empty()) return t1;
  PQShape s1 = t1.pq_shape();
  PQShape s2 = t2.pq_shape();
  if (s1.kind == PQShape::Kind::OneSided && s2.kind == PQShape::Kind::OneSided &&
      s1.polarity != s2.polarity) {
    throw ShapeError("cannot merge left-sided with right-sided priority queues");
  }

  LazySearchTree out;
  out.counter_ = std::move(t1.counter_);
  out.counter_->add(t2.counter_->value());
  out.locators_ = std::move(t1.locators_);
  out.locators_.merge(t2.locators_);
  out.n_ = t1.n_ + t2.n_;
  out.zero_credits_ = t1.zero_credits_ + t2.zero_credits_;
  out.one_credits_ = t1.one_credits_ + t2.one_credits_;

  // Detach the parts from both trees.
  auto take_root_gap = [](LazySearchTree& t) {
    std::unique_ptr<Gap> g = std::move(t.root_->gap);
    delete t.root_;
    t.root_ = nullptr;
    t.n_ = 0;
    t.zero_credits_ = t.one_credits_ = 0;
    return g;
  };
  std::unique_ptr<Gap> g1 = take_root_gap(t1);
  std::unique_ptr<Gap> g2 = take_root_gap(t2);
  std::unique_ptr<Gap> p1 = std::move(t1.pending_zero_);
  std::unique_ptr<Gap> p2 = std::move(t2.pending_zero_);

  std::unique_ptr<Gap> heap_gap;
  std::vector<std::unique_ptr<Gap>> zeros;
  for (auto* gp : {&g1, &g2}) {
    std::unique_ptr<Gap>& g = *gp;
    if (!g) continue;
    if (g->side == Sidedness::ZeroSided) {
      zeros.push_back(std::move(g));
    } else if (!heap_gap) {
      heap_gap = std::move(g);
    } else {
      // Meld the second one-sided heap into the first: one comparison,
      // and the absorbed gap forwards to the survivor through its cell.
      auto& dst = heap_gap->side == Sidedness::LeftSided
                      ? std::get<LeftSided>(heap_gap->data).heap
                      : std::get<RightSided>(heap_gap->data).heap;
      auto& src = g->side == Sidedness::LeftSided ? std::get<LeftSided>(g->data).heap
                                                  : std::get<RightSided>(g->data).heap;
      src.set_counter(*out.counter_);
      dst.set_counter(*out.counter_);
      dst = FibHeap::merge(std::move(dst), std::move(src));
      *g->self = heap_gap.get();
      g->self = heap_gap->self;  // keep the forwarding cell alive
      g.reset();
    }
  }
  if (p1) zeros.push_back(std::move(p1));
  if (p2) zeros.push_back(std::move(p2));

  // Fold pending zero gaps into one (append smaller into larger; the moved
  // entries get fresh locator slots, no comparisons).
  std::unique_ptr<Gap> pending;
  for (auto& z : zeros) {
    if (!z) continue;
    if (!pending) {
      pending = std::move(z);
      continue;
    }
    if (std::get<ZeroSided>(z->data).items.size() >
        std::get<ZeroSided>(pending->data).items.size()) {
      std::swap(pending, z);
    }
    auto& into = std::get<ZeroSided>(pending->data).items;
    auto& from = std::get<ZeroSided>(z->data).items;
    for (const Entry& e : from) {
      into.push_back(e);
      out.set_zero_loc(*pending, into.size() - 1, e);
    }
    *z->self = nullptr;
    z.reset();
  }

  if (heap_gap) {
    if (heap_gap->side == Sidedness::LeftSided) {
      std::get<LeftSided>(heap_gap->data).heap.set_counter(*out.counter_);
    } else {
      std::get<RightSided>(heap_gap->data).heap.set_counter(*out.counter_);
    }
    auto* node = new DirNode;
    node->gap = std::move(heap_gap);
    node->gap->dir = node;
    out.root_ = node;
    out.dir_refresh(node);
    out.pending_zero_ = std::move(pending);
    if (out.pending_zero_) out.pending_zero_->dir = nullptr;
  } else {
    // Both sides were raw insertion buffers; the result is one zero gap.
    auto* node = new DirNode;
    node->gap = std::move(pending);
    node->gap->dir = node;
    out.root_ = node;
    out.dir_refresh(node);
  }
  return out;
}

// ---------------------------------------------------------------------------
// inspection

std::size_t LazySearchTree::gap_count() const {
  std::size_t m = 0;
  dir_walk(root_, [&](const DirNode*) { ++m; });
  if (pending_zero_) ++m;
  return m;
}

std::vector<std::size_t> LazySearchTree::gap_sizes() const {
  std::vector<std::size_t> out;
  dir_walk(root_, [&](const DirNode* d) { out.push_back(gap_size(*d->gap)); });
  if (pending_zero_) out.push_back(gap_size(*pending_zero_));
  return out;
}

std::vector<Entry> LazySearchTree::entries_in_order() {
  normalize_pending();
  std::vector<Entry> out;
  out.reserve(n_);
  dir_walk(root_, [&](const DirNode* d) {
    std::vector<Entry> es = gap_entries(*d->gap);
    std::sort(es.begin(), es.end(),
              [](const Entry& a, const Entry& b) { return raw_less(a, b); });
    out.insert(out.end(), es.begin(), es.end());
  });
  return out;
}

std::vector<std::string> LazySearchTree::validate() const {
  std::vector<std::string> issues;
  std::size_t total = 0;
  std::uint64_t zero_total = 0, one_total = 0;
  const DirNode* prev = nullptr;

  dir_walk(root_, [&](const DirNode* d) {
    const Gap& g = *d->gap;
    std::size_t sz = gap_size(g);
    total += sz;
    if (d->subtree_weight != gap_size(*d->gap) + weight_of(d->left) + weight_of(d->right)) {
      issues.push_back("directory subtree weight out of date");
    }
    if (g.dir != d) issues.push_back("gap backlink does not match directory node");
    if (*g.self != d->gap.get()) issues.push_back("gap self cell does not resolve");

    // variant/side coherence
    bool coherent = (g.side == Sidedness::ZeroSided &&
                     std::holds_alternative<ZeroSided>(g.data)) ||
                    (g.side == Sidedness::LeftSided &&
                     std::holds_alternative<LeftSided>(g.data)) ||
                    (g.side == Sidedness::RightSided &&
                     std::holds_alternative<RightSided>(g.data)) ||
                    (g.side == Sidedness::TwoSided &&
                     std::holds_alternative<TwoSided>(g.data));
    if (!coherent) issues.push_back("sidedness does not match interval structure variant");

    if (g.side == Sidedness::ZeroSided) zero_total += sz;
    if (g.side == Sidedness::LeftSided || g.side == Sidedness::RightSided) one_total += sz;

    // entries within (prev boundary, own boundary]
    for (const Entry& e : gap_entries(g)) {
      if (d->hi_sep) {
        bool fits = d->hi_exclusive ? raw_less(e, *d->hi_sep) : !raw_less(*d->hi_sep, e);
        if (!fits) issues.push_back("entry above its gap's upper separator");
      }
      if (prev && prev->hi_sep) {
        bool above =
            prev->hi_exclusive ? !raw_less(e, *prev->hi_sep) : raw_less(*prev->hi_sep, e);
        if (!above) issues.push_back("entry below its gap's lower separator");
      }
      auto it = locators_.find(e.seq);
      if (it == locators_.end()) {
        issues.push_back("entry missing from the locator map");
      } else if (*it->second.cell != d->gap.get()) {
        issues.push_back("locator resolves to the wrong gap");
      }
    }

    if (g.side == Sidedness::TwoSided) {
      const auto& two = std::get<TwoSided>(g.data);
      if (!thirds_ok(two.lo.size(), sz) || !thirds_ok(two.middle.size(), sz) ||
          !thirds_ok(two.hi.size(), sz)) {
        issues.push_back("two-sided gap third below the 1/3 - 1/12 fraction");
      }
      for (const Entry& e : two.lo.entries()) {
        if (raw_less(two.sep_lo, e)) issues.push_back("min-third entry above sep_lo");
      }
      for (const Entry& e : two.middle) {
        if (!raw_less(two.sep_lo, e)) issues.push_back("middle entry at or below sep_lo");
        if (raw_less(two.sep_hi, e)) issues.push_back("middle entry above sep_hi");
      }
      for (const Entry& e : two.hi.entries()) {
        if (raw_less(e, two.sep_hi)) issues.push_back("max-third entry below sep_hi");
      }
    }
    if (d->hi_sep == std::nullopt && dir_next(const_cast<DirNode*>(d)) != nullptr) {
      issues.push_back("interior gap without an upper separator");
    }
    prev = d;
  });

  if (prev && prev->hi_sep) issues.push_back("rightmost gap carries an upper separator");

  if (pending_zero_) {
    const Gap& g = *pending_zero_;
    if (g.side != Sidedness::ZeroSided) issues.push_back("pending gap is not zero-sided");
    std::size_t sz = gap_size(g);
    total += sz;
    zero_total += sz;
    if (!root_ || root_->left || root_->right ||
        (root_->gap->side != Sidedness::LeftSided &&
         root_->gap->side != Sidedness::RightSided)) {
      issues.push_back("pending gap outside priority-queue shape");
    }
    for (const Entry& e : gap_entries(g)) {
      auto it = locators_.find(e.seq);
      if (it == locators_.end() || *it->second.cell != &g) {
        issues.push_back("pending entry with broken locator");
      }
    }
  }

  if (total != n_) issues.push_back("gap sizes do not sum to n");
  if (zero_total != zero_credits_) issues.push_back("zero-sided credit identity broken");
  if (one_total != one_credits_) issues.push_back("one-sided credit identity broken");
  if (locators_.size() != n_) issues.push_back("locator count does not match n");
  return issues;
}

namespace testing {

// Drains the min third of the first sizable two-sided gap into its middle,
// bypassing the rebuild machinery, so the fraction bound breaks.
bool LstInspector::skew_thirds(LazySearchTree& t) {
  LazySearchTree::DirNode* found = nullptr;
  t.dir_walk(t.root_, [&](const LazySearchTree::DirNode* d) {
    if (!found && d->gap->side == Sidedness::TwoSided &&
        LazySearchTree::gap_size(*d->gap) >= 10) {
      found = const_cast<LazySearchTree::DirNode*>(d);
    }
  });
  if (!found) return false;
  auto& two = std::get<LazySearchTree::TwoSided>(found->gap->data);
  std::size_t sz = LazySearchTree::gap_size(*found->gap);
  while (two.lo.size() > sz / 10) {
    std::vector<Entry> one = two.lo.extract_k(1);
    two.middle.push_back(one[0]);
    t.set_mid_loc(*found->gap, two.middle.size() - 1, one[0]);
  }
  return true;
}

bool LstInspector::corrupt_weight(LazySearchTree& t) {
  if (!t.root_) return false;
  t.root_->subtree_weight += 7;
  return true;
}

}  // namespace testing

}  // namespace lazydict
