#include "lazydict/workload.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace lazydict {

namespace {

constexpr Key kKeySpan = 1'000'000;

Workload gen_uniform_pq(std::size_t n, std::mt19937_64& rng) {
  Workload w;
  std::uniform_int_distribution<Key> keys(0, kKeySpan);
  for (std::size_t i = 0; i < n; ++i) {
    w.ops.push_back({WorkloadOp::Kind::Insert, keys(rng), 0, {}});
  }
  for (std::size_t i = 0; i < n; ++i) {
    w.ops.push_back({WorkloadOp::Kind::QueryRank, 0, 1, {}});
  }
  return w;
}

Workload gen_range_cluster(std::size_t n, std::size_t q, std::size_t k,
                           std::mt19937_64& rng) {
  Workload w;
  std::uniform_int_distribution<Key> keys(0, kKeySpan);
  std::size_t burst_every = std::max<std::size_t>(1, n / std::max<std::size_t>(q, 1));
  std::size_t live = 0;
  for (std::size_t i = 0; i < n; ++i) {
    w.ops.push_back({WorkloadOp::Kind::Insert, keys(rng), 0, {}});
    ++live;
    if (q > 0 && i % burst_every == burst_every - 1) {
      Key start = keys(rng);
      for (std::size_t j = 0; j < k; ++j) {
        w.ops.push_back(
            {WorkloadOp::Kind::QueryKey, start + static_cast<Key>(j), 0, {}});
      }
    }
  }
  return w;
}

Workload gen_mixed_dict(std::size_t n, std::size_t q, std::mt19937_64& rng) {
  Workload w;
  std::uniform_int_distribution<Key> keys(0, kKeySpan);
  std::vector<std::uint64_t> live;  // op indices of live inserts
  std::size_t inserted = 0;
  std::size_t queries = 0;

  auto insert = [&]() {
    live.push_back(w.ops.size());
    w.ops.push_back({WorkloadOp::Kind::Insert, keys(rng), 0, {}});
    ++inserted;
  };

  insert();
  while (inserted < n) {
    std::size_t what = rng() % 100;
    if (what < 55 || live.empty()) {
      insert();
    } else if (what < 65) {
      std::size_t i = rng() % live.size();
      w.ops.push_back({WorkloadOp::Kind::Delete, 0, live[i], {}});
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(i));
    } else if (what < 75) {
      std::size_t i = rng() % live.size();
      w.ops.push_back({WorkloadOp::Kind::ChangeKey, keys(rng), live[i], {}});
    } else if (what < 83 && queries < q) {
      w.ops.push_back({WorkloadOp::Kind::QueryRank, 0, 1 + rng() % live.size(), {}});
      ++queries;
    } else if (what < 91 && queries < q) {
      w.ops.push_back({WorkloadOp::Kind::QueryKey, keys(rng), 0, {}});
      ++queries;
    } else if (what < 95) {
      // Split and immediately re-merge: exercises both paths while keeping
      // every reference valid.
      w.ops.push_back({WorkloadOp::Kind::Split, 0, rng() % (live.size() + 1), {}});
      w.ops.push_back({WorkloadOp::Kind::Merge, 0, 0, {}});
    } else {
      std::size_t batch = std::min<std::size_t>(1 + rng() % 4, live.size());
      WorkloadOp op{WorkloadOp::Kind::DeleteMulti, 0, 0, {}};
      for (std::size_t j = 0; j < batch; ++j) {
        std::size_t i = rng() % live.size();
        op.refs.push_back(live[i]);
        live.erase(live.begin() + static_cast<std::ptrdiff_t>(i));
      }
      w.ops.push_back(std::move(op));
    }
  }
  return w;
}

Workload gen_multi_select(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  Workload w;
  std::uniform_int_distribution<Key> keys(0, kKeySpan);
  for (std::size_t i = 0; i < n; ++i) {
    w.ops.push_back({WorkloadOp::Kind::Insert, keys(rng), 0, {}});
  }
  for (std::size_t taken = 0; taken + k <= n; taken += k) {
    w.ops.push_back({WorkloadOp::Kind::ExtractK, 0, k, {}});
  }
  return w;
}

}  // namespace

Workload generate_workload(const std::string& kind, std::size_t n, std::size_t q,
                           std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  if (kind == "uniform-pq") return gen_uniform_pq(n, rng);
  if (kind == "range-cluster") return gen_range_cluster(n, q, k, rng);
  if (kind == "mixed-dict") return gen_mixed_dict(n, q, rng);
  if (kind == "multi-select") return gen_multi_select(n, k, rng);
  throw std::invalid_argument("unknown workload kind: " + kind);
}

void write_workload(const Workload& w, std::ostream& out) {
  for (const WorkloadOp& op : w.ops) {
    switch (op.kind) {
      case WorkloadOp::Kind::Insert:
        out << "INSERT " << op.key << '\n';
        break;
      case WorkloadOp::Kind::Delete:
        out << "DELETE " << op.arg << '\n';
        break;
      case WorkloadOp::Kind::ChangeKey:
        out << "CHANGEKEY " << op.arg << ' ' << op.key << '\n';
        break;
      case WorkloadOp::Kind::QueryRank:
        out << "QUERYRANK " << op.arg << '\n';
        break;
      case WorkloadOp::Kind::QueryKey:
        out << "QUERYKEY " << op.key << '\n';
        break;
      case WorkloadOp::Kind::Split:
        out << "SPLIT " << op.arg << '\n';
        break;
      case WorkloadOp::Kind::Merge:
        out << "MERGE\n";
        break;
      case WorkloadOp::Kind::ExtractK:
        out << "EXTRACTK " << op.arg << '\n';
        break;
      case WorkloadOp::Kind::SelectK:
        out << "SELECTK " << op.arg << '\n';
        break;
      case WorkloadOp::Kind::DeleteMulti: {
        out << "DELETEMULTI";
        for (auto r : op.refs) out << ' ' << r;
        out << '\n';
        break;
      }
      case WorkloadOp::Kind::Fault:
        out << "FAULT\n";
        break;
    }
  }
}

Workload parse_workload(std::istream& in) {
  Workload w;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string op;
    ss >> op;
    auto need_u64 = [&](const char* what) {
      std::uint64_t v;
      if (!(ss >> v)) throw ParseError(lineno, std::string("expected ") + what);
      return v;
    };
    auto need_key = [&](const char* what) {
      Key v;
      if (!(ss >> v)) throw ParseError(lineno, std::string("expected ") + what);
      return v;
    };
    if (op == "INSERT") {
      w.ops.push_back({WorkloadOp::Kind::Insert, need_key("key"), 0, {}});
    } else if (op == "DELETE") {
      w.ops.push_back({WorkloadOp::Kind::Delete, 0, need_u64("ref"), {}});
    } else if (op == "CHANGEKEY") {
      std::uint64_t ref = need_u64("ref");
      Key key = need_key("key");
      w.ops.push_back({WorkloadOp::Kind::ChangeKey, key, ref, {}});
    } else if (op == "QUERYRANK") {
      w.ops.push_back({WorkloadOp::Kind::QueryRank, 0, need_u64("rank"), {}});
    } else if (op == "QUERYKEY") {
      w.ops.push_back({WorkloadOp::Kind::QueryKey, need_key("key"), 0, {}});
    } else if (op == "SPLIT") {
      w.ops.push_back({WorkloadOp::Kind::Split, 0, need_u64("rank"), {}});
    } else if (op == "MERGE") {
      w.ops.push_back({WorkloadOp::Kind::Merge, 0, 0, {}});
    } else if (op == "EXTRACTK") {
      w.ops.push_back({WorkloadOp::Kind::ExtractK, 0, need_u64("k"), {}});
    } else if (op == "SELECTK") {
      w.ops.push_back({WorkloadOp::Kind::SelectK, 0, need_u64("k"), {}});
    } else if (op == "DELETEMULTI") {
      WorkloadOp o{WorkloadOp::Kind::DeleteMulti, 0, 0, {}};
      std::uint64_t r;
      while (ss >> r) o.refs.push_back(r);
      if (o.refs.empty()) throw ParseError(lineno, "expected at least one ref");
      w.ops.push_back(std::move(o));
    } else if (op == "FAULT") {
      w.ops.push_back({WorkloadOp::Kind::Fault, 0, 0, {}});
    } else {
      throw ParseError(lineno, "unknown op: " + op);
    }
    std::string trailing;
    if (op != "DELETEMULTI" && (ss >> trailing)) {
      throw ParseError(lineno, "trailing tokens after " + op);
    }
  }
  return w;
}

}  // namespace lazydict
