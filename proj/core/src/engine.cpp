#include "lazydict/engine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "lazydict/fib_heap.hpp"
#include "lazydict/lazy_search_tree.hpp"

namespace lazydict {

namespace {

std::string fmt_entry(const Entry& e) {
  return std::to_string(e.key) + ":" + std::to_string(e.seq);
}

// Lazy search tree engine with a side stack for split products and a
// fault flag that corrupts the next answer (harness self-test).
class LstEngine final : public Engine {
 public:
  std::string apply(const WorkloadOp& op) override {
    std::string answer = apply_impl(op);
    if (fault_pending_ && !answer.empty()) {
      fault_pending_ = false;
      answer += "!corrupted";
    }
    return answer;
  }

  std::uint64_t comparisons() const override {
    std::uint64_t total = tree_.counter().value();
    for (const auto& t : stack_) total += t->counter().value();
    return total + retired_comparisons_;
  }

  std::size_t size() const override { return tree_.size(); }

  std::vector<std::size_t> gap_sizes() const override { return tree_.gap_sizes(); }

  LazySearchTree& tree() { return tree_; }

 private:
  std::string apply_impl(const WorkloadOp& op) {
    switch (op.kind) {
      case WorkloadOp::Kind::Insert: {
        auto ref = tree_.insert(op.key, next_index_);
        refs_[next_index_] = ref;
        return "n=" + std::to_string(tree_.size());
      }
      case WorkloadOp::Kind::Delete: {
        tree_.erase(refs_.at(op.arg));
        refs_.erase(op.arg);
        return "n=" + std::to_string(tree_.size());
      }
      case WorkloadOp::Kind::ChangeKey: {
        auto ref = refs_.at(op.arg);
        try {
          tree_.change_key(ref, op.key);
        } catch (const OutOfGapError&) {
          Entry cur = tree_.entry_of(ref);
          tree_.erase(ref);
          cur.key = op.key;
          tree_.insert_entry(cur);
        }
        return "ck=" + std::to_string(op.key);
      }
      case WorkloadOp::Kind::QueryRank:
        return "e=" + fmt_entry(tree_.query_by_rank(op.arg));
      case WorkloadOp::Kind::QueryKey: {
        auto res = tree_.query_by_key(op.key);
        std::string s = "r=" + std::to_string(res.rank) +
                        " c=" + std::to_string(res.contains ? 1 : 0);
        s += " p=" + (res.predecessor ? fmt_entry(*res.predecessor) : std::string("-"));
        s += " s=" + (res.successor ? fmt_entry(*res.successor) : std::string("-"));
        return s;
      }
      case WorkloadOp::Kind::Split: {
        auto [l, r] = std::move(tree_).split(op.arg);
        std::string s =
            "sizes=" + std::to_string(l.size()) + "," + std::to_string(r.size());
        tree_ = std::move(l);
        stack_.push_back(std::make_unique<LazySearchTree>(std::move(r)));
        return s;
      }
      case WorkloadOp::Kind::Merge: {
        if (stack_.empty()) return "n=" + std::to_string(tree_.size());
        auto top = std::move(stack_.back());
        stack_.pop_back();
        tree_ = LazySearchTree::merge(std::move(tree_), std::move(*top));
        return "n=" + std::to_string(tree_.size());
      }
      case WorkloadOp::Kind::ExtractK: {
        std::size_t k = std::min<std::size_t>(op.arg, tree_.size());
        if (k == 0) return "n=" + std::to_string(tree_.size());
        Entry kth = tree_.query_by_rank(k);
        Entry first = tree_.query_by_rank(1);
        auto [l, r] = std::move(tree_).split(k);
        // The k smallest are discarded; their comparisons stay in the total.
        retired_comparisons_ += l.counter().value();
        for (const Entry& e : l.entries_in_order()) refs_.erase(e.payload);
        tree_ = std::move(r);
        return "min=" + fmt_entry(first) + " kth=" + fmt_entry(kth) +
               " n=" + std::to_string(tree_.size());
      }
      case WorkloadOp::Kind::SelectK: {
        std::size_t k = std::min<std::size_t>(op.arg, tree_.size());
        if (k == 0) return "kth=-";
        return "kth=" + fmt_entry(tree_.query_by_rank(k));
      }
      case WorkloadOp::Kind::DeleteMulti: {
        for (auto r : op.refs) {
          tree_.erase(refs_.at(r));
          refs_.erase(r);
        }
        return "n=" + std::to_string(tree_.size());
      }
      case WorkloadOp::Kind::Fault:
        fault_pending_ = true;
        return "";
    }
    return "";
  }

 public:
  void set_op_index(std::size_t i) override { next_index_ = i; }

 private:
  std::uint64_t next_index_ = 0;
  LazySearchTree tree_;
  std::vector<std::unique_ptr<LazySearchTree>> stack_;
  std::unordered_map<std::uint64_t, LazySearchTree::EntryRef> refs_;
  std::uint64_t retired_comparisons_ = 0;
  bool fault_pending_ = false;
};

// Selectable Fibonacci heap engine; supports the priority-queue subset.
class FibEngine final : public Engine {
 public:
  std::string apply(const WorkloadOp& op) override {
    switch (op.kind) {
      case WorkloadOp::Kind::Insert: {
        Entry e = make_entry(op.key, next_index_);
        refs_[next_index_] = heap_.insert(e);
        return "n=" + std::to_string(heap_.size());
      }
      case WorkloadOp::Kind::Delete: {
        heap_.erase(refs_.at(op.arg));
        refs_.erase(op.arg);
        return "n=" + std::to_string(heap_.size());
      }
      case WorkloadOp::Kind::ChangeKey: {
        auto h = refs_.at(op.arg);
        Entry cur = heap_.entry(h);
        if (op.key <= cur.key) {
          heap_.decrease_key(h, op.key);
        } else {
          heap_.erase(h);
          cur.key = op.key;
          refs_[op.arg] = heap_.insert(cur);
        }
        return "ck=" + std::to_string(op.key);
      }
      case WorkloadOp::Kind::QueryRank: {
        auto res = heap_.select_k(op.arg);
        Entry kth = res.entries.front();
        for (const Entry& e : res.entries) {
          if (raw_less(kth, e)) kth = e;
        }
        return "e=" + fmt_entry(kth);
      }
      case WorkloadOp::Kind::ExtractK: {
        auto got = heap_.extract_k(op.arg);
        if (got.empty()) return "n=" + std::to_string(heap_.size());
        Entry mn = got.front(), mx = got.front();
        for (const Entry& e : got) {
          if (raw_less(e, mn)) mn = e;
          if (raw_less(mx, e)) mx = e;
          refs_.erase(e.payload);
        }
        return "min=" + fmt_entry(mn) + " kth=" + fmt_entry(mx) +
               " n=" + std::to_string(heap_.size());
      }
      case WorkloadOp::Kind::SelectK: {
        auto res = heap_.select_k(op.arg);
        if (res.entries.empty()) return "kth=-";
        Entry kth = res.entries.front();
        for (const Entry& e : res.entries) {
          if (raw_less(kth, e)) kth = e;
        }
        return "kth=" + fmt_entry(kth);
      }
      case WorkloadOp::Kind::DeleteMulti: {
        std::vector<FibHeap::Handle> hs;
        for (auto r : op.refs) hs.push_back(refs_.at(r));
        heap_.erase_multi(hs);
        for (auto r : op.refs) refs_.erase(r);
        return "n=" + std::to_string(heap_.size());
      }
      case WorkloadOp::Kind::Fault:
        return "";
      default:
        throw std::invalid_argument("fibheap engine cannot run this op");
    }
  }

  std::uint64_t comparisons() const override { return heap_.counter().value(); }
  std::size_t size() const override { return heap_.size(); }
  std::vector<std::size_t> gap_sizes() const override { return {heap_.size()}; }
  void set_op_index(std::size_t i) override { next_index_ = i; }

 private:
  std::uint64_t next_index_ = 0;
  FibHeap heap_;
  std::unordered_map<std::uint64_t, FibHeap::Handle> refs_;
};

// Brute-force reference: a sorted vector answering everything by scan or
// binary search. Mirrors the split/merge side stack of the lst engine.
class OracleEngine final : public Engine {
 public:
  std::string apply(const WorkloadOp& op) override {
    switch (op.kind) {
      case WorkloadOp::Kind::Insert: {
        Entry e = make_entry(op.key, next_index_);
        refs_[next_index_] = e;
        insert_sorted(e);
        return "n=" + std::to_string(sorted_.size());
      }
      case WorkloadOp::Kind::Delete: {
        erase_entry(refs_.at(op.arg));
        refs_.erase(op.arg);
        return "n=" + std::to_string(sorted_.size());
      }
      case WorkloadOp::Kind::ChangeKey: {
        Entry e = refs_.at(op.arg);
        erase_entry(e);
        e.key = op.key;
        refs_[op.arg] = e;
        insert_sorted(e);
        return "ck=" + std::to_string(op.key);
      }
      case WorkloadOp::Kind::QueryRank:
        count_.add(static_cast<std::uint64_t>(
            std::log2(std::max<std::size_t>(sorted_.size(), 2))));
        return "e=" + fmt_entry(sorted_[op.arg - 1]);
      case WorkloadOp::Kind::QueryKey: {
        std::size_t r1 = 0, r0 = 0;
        for (const Entry& e : sorted_) {
          r0 += (e.key < op.key);
          r1 += (e.key <= op.key);
        }
        count_.add(sorted_.size());
        std::string s = "r=" + std::to_string(r1) +
                        " c=" + std::to_string(r1 > r0 ? 1 : 0);
        s += " p=" + (r0 >= 1 ? fmt_entry(sorted_[r0 - 1]) : std::string("-"));
        s += " s=" +
             (r1 < sorted_.size() ? fmt_entry(sorted_[r1]) : std::string("-"));
        return s;
      }
      case WorkloadOp::Kind::Split: {
        std::size_t r = op.arg;
        std::vector<Entry> right(sorted_.begin() + static_cast<std::ptrdiff_t>(r),
                                 sorted_.end());
        sorted_.resize(r);
        std::string s = "sizes=" + std::to_string(sorted_.size()) + "," +
                        std::to_string(right.size());
        stack_.push_back(std::move(right));
        return s;
      }
      case WorkloadOp::Kind::Merge: {
        if (stack_.empty()) return "n=" + std::to_string(sorted_.size());
        auto right = std::move(stack_.back());
        stack_.pop_back();
        sorted_.insert(sorted_.end(), right.begin(), right.end());
        return "n=" + std::to_string(sorted_.size());
      }
      case WorkloadOp::Kind::ExtractK: {
        std::size_t k = std::min<std::size_t>(op.arg, sorted_.size());
        if (k == 0) return "n=" + std::to_string(sorted_.size());
        Entry mn = sorted_.front();
        Entry kth = sorted_[k - 1];
        for (std::size_t i = 0; i < k; ++i) refs_.erase(sorted_[i].payload);
        sorted_.erase(sorted_.begin(), sorted_.begin() + static_cast<std::ptrdiff_t>(k));
        return "min=" + fmt_entry(mn) + " kth=" + fmt_entry(kth) +
               " n=" + std::to_string(sorted_.size());
      }
      case WorkloadOp::Kind::SelectK: {
        std::size_t k = std::min<std::size_t>(op.arg, sorted_.size());
        if (k == 0) return "kth=-";
        return "kth=" + fmt_entry(sorted_[k - 1]);
      }
      case WorkloadOp::Kind::DeleteMulti: {
        for (auto r : op.refs) {
          erase_entry(refs_.at(r));
          refs_.erase(r);
        }
        return "n=" + std::to_string(sorted_.size());
      }
      case WorkloadOp::Kind::Fault:
        return "";
    }
    return "";
  }

  std::uint64_t comparisons() const override { return count_.value(); }
  std::size_t size() const override { return sorted_.size(); }
  std::vector<std::size_t> gap_sizes() const override {
    return sorted_.empty() ? std::vector<std::size_t>{} : std::vector<std::size_t>{1};
  }
  void set_op_index(std::size_t i) override { next_index_ = i; }

 private:
  std::uint64_t next_index_ = 0;

  void insert_sorted(const Entry& e) {
    auto it = std::lower_bound(sorted_.begin(), sorted_.end(), e, raw_less);
    count_.add(static_cast<std::uint64_t>(
        std::log2(std::max<std::size_t>(sorted_.size(), 2))));
    sorted_.insert(it, e);
  }
  void erase_entry(const Entry& e) {
    auto it = std::lower_bound(sorted_.begin(), sorted_.end(), e, raw_less);
    sorted_.erase(it);
  }

  std::vector<Entry> sorted_;
  std::vector<std::vector<Entry>> stack_;
  std::unordered_map<std::uint64_t, Entry> refs_;
  ComparisonCounter count_;
};

const char* op_name(WorkloadOp::Kind k) {
  switch (k) {
    case WorkloadOp::Kind::Insert: return "INSERT";
    case WorkloadOp::Kind::Delete: return "DELETE";
    case WorkloadOp::Kind::ChangeKey: return "CHANGEKEY";
    case WorkloadOp::Kind::QueryRank: return "QUERYRANK";
    case WorkloadOp::Kind::QueryKey: return "QUERYKEY";
    case WorkloadOp::Kind::Split: return "SPLIT";
    case WorkloadOp::Kind::Merge: return "MERGE";
    case WorkloadOp::Kind::ExtractK: return "EXTRACTK";
    case WorkloadOp::Kind::SelectK: return "SELECTK";
    case WorkloadOp::Kind::DeleteMulti: return "DELETEMULTI";
    case WorkloadOp::Kind::Fault: return "FAULT";
  }
  return "?";
}

}  // namespace

double b_bound(const std::vector<std::size_t>& gap_sizes) {
  std::size_t n = 0;
  for (std::size_t s : gap_sizes) n += s;
  if (n == 0) return 0.0;
  double b = 0.0;
  for (std::size_t s : gap_sizes) {
    if (s == 0) continue;
    double lg = std::log2(static_cast<double>(n) / static_cast<double>(s));
    b += static_cast<double>(s) * std::max(lg, 1.0);
  }
  return b;
}

std::unique_ptr<Engine> make_engine(const std::string& name) {
  if (name == "lst") return std::make_unique<LstEngine>();
  if (name == "fibheap") return std::make_unique<FibEngine>();
  if (name == "oracle") return std::make_unique<OracleEngine>();
  throw std::invalid_argument("unknown engine: " + name);
}

Report run_workload(const Workload& w, Engine& engine, std::ostream* csv) {
  Report rep;
  if (csv) *csv << "op_index,op,comparisons,cum_comparisons,n,gaps,B\n";
  std::uint64_t prev = engine.comparisons();
  for (std::size_t i = 0; i < w.ops.size(); ++i) {
    const WorkloadOp& op = w.ops[i];
    engine.set_op_index(i);

    OpRecord row;
    row.op_index = i;
    row.op = op_name(op.kind);
    row.answer = engine.apply(op);
    std::uint64_t cum = engine.comparisons();
    row.comparisons = cum - prev;
    row.cum_comparisons = cum;
    prev = cum;
    row.n = engine.size();
    auto gs = engine.gap_sizes();
    row.gaps = gs.size();
    row.b_value = b_bound(gs);
    if (csv) {
      *csv << row.op_index << ',' << row.op << ',' << row.comparisons << ','
           << row.cum_comparisons << ',' << row.n << ',' << row.gaps << ','
           << row.b_value << '\n';
    }
    rep.rows.push_back(std::move(row));
  }
  rep.total_comparisons = engine.comparisons();
  rep.final_gap_sizes = engine.gap_sizes();
  rep.final_b = b_bound(rep.final_gap_sizes);
  return rep;
}

int verify_workload(const Workload& w, std::ostream& diag) {
  auto lst = std::make_unique<LstEngine>();
  auto oracle = std::make_unique<OracleEngine>();
  for (std::size_t i = 0; i < w.ops.size(); ++i) {
    const WorkloadOp& op = w.ops[i];
    lst->set_op_index(i);
    oracle->set_op_index(i);
    std::string a = lst->apply(op);
    std::string b = oracle->apply(op);
    if (a != b) {
      diag << "answer mismatch at op " << i << " (" << op_name(op.kind) << ")\n"
           << "  lst:    " << a << "\n  oracle: " << b << "\n";
      return 1;
    }
    if (i % 256 == 0) {
      auto issues = lst->tree().validate();
      if (!issues.empty()) {
        diag << "validation failed at op " << i << ":\n";
        for (const auto& s : issues) diag << "  " << s << "\n";
        return 1;
      }
    }
  }
  auto issues = lst->tree().validate();
  if (!issues.empty()) {
    diag << "validation failed at end of workload:\n";
    for (const auto& s : issues) diag << "  " << s << "\n";
    return 1;
  }
  return 0;
}

}  // namespace lazydict
