#pragma once

// Episodic memory: global states are (optionally) random-projected, quantized
// into exact-match keys and stored in bounded tables that keep the highest
// discounted return ever observed per key. A small staging set collects
// (key, return) pairs during rollouts and is merged into the tables in bulk
// when it fills.

#include "marl/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <unordered_map>

namespace marl {

// Entries of a Gaussian random projection matrix are i.i.d. standard normal;
// pairwise distances of the projected states approximately preserve the
// ordering of the original distances (Johnson-Lindenstrauss).
Matrix gaussian_projection(int out_dim, int in_dim, std::mt19937_64& rng);

// Rounds to multiples of `resolution`; equality of quantized components is
// the table's notion of state identity.
std::int64_t quantize(double x, double resolution);

struct MemoryKey {
  std::vector<std::int64_t> q;
  bool operator==(const MemoryKey&) const = default;
};

struct MemoryKeyHash {
  std::size_t operator()(const MemoryKey& k) const;
};

// Projection pointer may be null for low-dimensional discrete states where
// the raw state already makes a good key.
MemoryKey make_key(const Vector& state, const Matrix* projection,
                   double resolution);

struct TableEntry {
  double value = 0.0;
  std::uint64_t access_count = 0;
  std::uint64_t insertion_index = 0;
};

struct MItem {
  MemoryKey key;
  JointAction action;  // empty when the staging set tracks states only
  double ret = 0.0;
};

// Bounded staging set. push() reports whether the set just became full; the
// owner is expected to flush the tables and drain() immediately after.
class ReturnSet {
 public:
  explicit ReturnSet(std::size_t capacity);
  bool push(MItem item);
  std::vector<MItem> drain();
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::vector<MItem>& items() const { return items_; }

 private:
  std::size_t capacity_;
  std::vector<MItem> items_;
};

// Single lookup table keyed by state. Values only ever increase (max-merge);
// at capacity the least-frequently-used entry makes room, ties broken by age.
// Lookups count as accesses, flush merges do not.
class SemTable {
 public:
  explicit SemTable(std::size_t capacity);

  std::optional<double> lookup(const MemoryKey& key);
  void flush(const std::vector<MItem>& items);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }
  // Structural accounting for complexity checks: a flush into this table
  // touches exactly one member table.
  std::uint64_t last_flush_tables_touched() const { return last_flush_touched_; }
  const std::unordered_map<MemoryKey, TableEntry, MemoryKeyHash>& entries() const {
    return entries_;
  }

  void serialize(std::ostream& out) const;
  static SemTable deserialize(std::istream& in);

 private:
  friend class SaemTable;
  void merge_one(const MemoryKey& key, double ret);
  void evict_lfu();

  std::size_t capacity_;
  std::unordered_map<MemoryKey, TableEntry, MemoryKeyHash> entries_;
  std::uint64_t next_insertion_ = 0;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
  std::uint64_t last_flush_touched_ = 0;
};

// Family of per-joint-action tables sharing the SemTable mechanics. Member
// tables are created on demand, so the family holds min(distinct joint
// actions seen, |U|^n) tables; a flush touches one member per distinct joint
// action in the staged items.
class SaemTable {
 public:
  SaemTable(std::size_t member_capacity) : member_capacity_(member_capacity) {}

  std::optional<double> lookup(const MemoryKey& key, const JointAction& action);
  void flush(const std::vector<MItem>& items);

  std::size_t member_tables() const { return members_.size(); }
  std::size_t total_entries() const;
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }
  std::uint64_t last_flush_tables_touched() const { return last_flush_touched_; }
  const std::map<JointAction, SemTable>& members() const { return members_; }

  void serialize(std::ostream& out) const;
  static SaemTable deserialize(std::istream& in);

 private:
  std::size_t member_capacity_;
  std::map<JointAction, SemTable> members_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
  std::uint64_t last_flush_touched_ = 0;
};

}  // namespace marl
