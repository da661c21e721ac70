#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lazydict/order.hpp"

namespace lazydict {

/// Read-only view of a heap-ordered tree with arbitrary node degrees.
/// Node ids are opaque; children enumeration must be repeatable and
/// side-effect free for the duration of one selection.
class TreeView {
 public:
  using Node = std::uint64_t;

  virtual ~TreeView() = default;

  virtual Node root() const = 0;
  virtual void append_children(Node n, std::vector<Node>& out) const = 0;
  virtual Entry entry(Node n) const = 0;

  /// Total node count when cheaply known; lets selection short-circuit
  /// a full traversal when k covers the whole tree.
  virtual std::optional<std::size_t> size_hint() const { return std::nullopt; }
};

}  // namespace lazydict
