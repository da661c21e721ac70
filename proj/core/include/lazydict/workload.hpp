#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lazydict/order.hpp"

namespace lazydict {

/// One workload operation. Entry references are the index of the INSERT
/// line that created the entry (0-based op index).
struct WorkloadOp {
  enum class Kind : std::uint8_t {
    Insert,
    Delete,
    ChangeKey,
    QueryRank,
    QueryKey,
    Split,
    Merge,
    ExtractK,
    SelectK,
    DeleteMulti,
    Fault,  // harness self-test: flips the next engine answer
  };

  Kind kind = Kind::Insert;
  Key key = 0;
  std::uint64_t arg = 0;           // rank / k / ref depending on kind
  std::vector<std::uint64_t> refs; // DeleteMulti
};

struct Workload {
  std::vector<WorkloadOp> ops;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Deterministic workload generation. Kinds:
///   uniform-pq:   n inserts then n QueryRank(1)
///   range-cluster: n uniform inserts with q interspersed bursts of k
///                  consecutive-key lookups
///   mixed-dict:   inserts, deletes, change-keys, rank/key queries,
///                 split+merge round trips, small multi-deletes
///   multi-select: n inserts then n/k ExtractK(k)
Workload generate_workload(const std::string& kind, std::size_t n, std::size_t q,
                           std::size_t k, std::uint64_t seed);

void write_workload(const Workload& w, std::ostream& out);
Workload parse_workload(std::istream& in);  // throws ParseError

}  // namespace lazydict
