#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>

namespace lazydict {

using Key = std::int64_t;

/// An element of a heap or dictionary. The user-visible key is `key`;
/// `seq` is a unique insertion stamp that breaks ties so the derived
/// (key, seq) order is strict. `payload` is opaque to the library.
struct Entry {
  Key key = 0;
  std::uint64_t seq = 0;
  std::uint64_t payload = 0;
};

/// Hands out globally unique sequence stamps. seq 0 is reserved for
/// internal sentinels (the selection dummy root), so real entries always
/// compare strictly above a sentinel with the same key.
inline std::uint64_t next_seq() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

inline Entry make_entry(Key key, std::uint64_t payload = 0) {
  return Entry{key, next_seq(), payload};
}

enum class Ordering { Less, Greater };

/// Tally of key comparisons. One instance per top-level structure;
/// every key-vs-key comparison anywhere in the library ticks it once.
class ComparisonCounter {
 public:
  void tick() noexcept { ++count_; }
  void add(std::uint64_t n) noexcept { count_ += n; }  // tally folding on merges
  std::uint64_t value() const noexcept { return count_; }

  std::uint64_t snapshot_and_reset() noexcept {
    std::uint64_t v = count_;
    count_ = 0;
    return v;
  }

 private:
  std::uint64_t count_ = 0;
};

/// The one comparison primitive. Never returns "equal": seq breaks ties.
inline Ordering compare(const Entry& a, const Entry& b, ComparisonCounter& c) noexcept {
  c.tick();
  if (a.key != b.key) {
    return a.key < b.key ? Ordering::Less : Ordering::Greater;
  }
  return a.seq < b.seq ? Ordering::Less : Ordering::Greater;
}

inline bool less(const Entry& a, const Entry& b, ComparisonCounter& c) noexcept {
  return compare(a, b, c) == Ordering::Less;
}

/// Uncounted comparison for audits, validators and test oracles only.
/// Production code paths must go through compare()/less().
inline bool raw_less(const Entry& a, const Entry& b) noexcept {
  if (a.key != b.key) return a.key < b.key;
  return a.seq < b.seq;
}

inline bool same_entry(const Entry& a, const Entry& b) noexcept {
  return a.seq == b.seq;
}

// Error types shared across modules.

/// A handle that is stale, foreign, or duplicated where uniqueness is required.
class HandleError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A key change that would leave the entry's current gap.
class OutOfGapError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A priority-queue merge applied to a tree that is not priority-queue shaped.
class ShapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace lazydict
