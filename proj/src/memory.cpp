#include "marl/memory.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace marl {
namespace {

// Deterministic across builds, unlike std::hash.
std::size_t fnv1a(const void* data, std::size_t len, std::size_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::size_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_double(std::ostream& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

}  // namespace

Matrix gaussian_projection(int out_dim, int in_dim, std::mt19937_64& rng) {
  if (out_dim <= 0 || in_dim <= 0)
    throw ShapeError("gaussian_projection: dimensions must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix v(out_dim, in_dim);
  for (int i = 0; i < out_dim; ++i)
    for (int j = 0; j < in_dim; ++j) v(i, j) = normal(rng);
  return v;
}

std::int64_t quantize(double x, double resolution) {
  if (!(resolution > 0.0)) throw ConfigError("quantize: resolution must be positive");
  if (!std::isfinite(x)) throw NumericsError("quantize: non-finite component");
  double scaled = x / resolution;
  if (std::abs(scaled) >= 9.0e18)
    throw NumericsError("quantize: component overflows key range");
  return std::llround(scaled);
}

std::size_t MemoryKeyHash::operator()(const MemoryKey& k) const {
  return fnv1a(k.q.data(), k.q.size() * sizeof(std::int64_t), 0xcbf29ce484222325ULL);
}

MemoryKey make_key(const Vector& state, const Matrix* projection,
                   double resolution) {
  MemoryKey key;
  if (projection != nullptr) {
    if (projection->cols() != state.size())
      throw ShapeError("make_key: projection/state dimension mismatch");
    Vector z = (*projection) * state;
    key.q.resize(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) key.q[i] = quantize(z(i), resolution);
  } else {
    key.q.resize(state.size());
    for (Eigen::Index i = 0; i < state.size(); ++i)
      key.q[i] = quantize(state(i), resolution);
  }
  return key;
}

ReturnSet::ReturnSet(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("return set capacity must be positive");
  items_.reserve(capacity_);
}

bool ReturnSet::push(MItem item) {
  if (items_.size() >= capacity_)
    throw Error("return set: push onto full set (owner must flush first)");
  items_.push_back(std::move(item));
  return items_.size() == capacity_;
}

std::vector<MItem> ReturnSet::drain() {
  std::vector<MItem> out;
  out.swap(items_);
  items_.reserve(capacity_);
  return out;
}

SemTable::SemTable(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("table capacity must be positive");
}

std::optional<double> SemTable::lookup(const MemoryKey& key) {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  ++it->second.access_count;
  return it->second.value;
}

void SemTable::merge_one(const MemoryKey& key, double ret) {
  auto it = entries_.find(key);
  if (it != entries_.end()) {
    if (ret > it->second.value) it->second.value = ret;
    return;
  }
  if (entries_.size() >= capacity_) evict_lfu();
  TableEntry e;
  e.value = ret;
  e.insertion_index = next_insertion_++;
  entries_.emplace(key, e);
}

void SemTable::evict_lfu() {
  auto victim = entries_.end();
  for (auto it = entries_.begin(); it != entries_.end(); ++it) {
    if (victim == entries_.end() ||
        it->second.access_count < victim->second.access_count ||
        (it->second.access_count == victim->second.access_count &&
         it->second.insertion_index < victim->second.insertion_index)) {
      victim = it;
    }
  }
  if (victim != entries_.end()) entries_.erase(victim);
}

void SemTable::flush(const std::vector<MItem>& items) {
  last_flush_touched_ = items.empty() ? 0 : 1;
  // Group per key first (first-appearance order) so a key staged several
  // times costs one merge and eviction order stays deterministic.
  std::vector<const MemoryKey*> order;
  std::unordered_map<MemoryKey, double, MemoryKeyHash> best;
  order.reserve(items.size());
  for (const auto& item : items) {
    auto [it, fresh] = best.emplace(item.key, item.ret);
    if (fresh) {
      order.push_back(&it->first);
    } else if (item.ret > it->second) {
      it->second = item.ret;
    }
  }
  for (const MemoryKey* key : order) merge_one(*key, best.at(*key));
}

std::size_t SaemTable::total_entries() const {
  std::size_t n = 0;
  for (const auto& [action, table] : members_) n += table.size();
  return n;
}

std::optional<double> SaemTable::lookup(const MemoryKey& key,
                                        const JointAction& action) {
  auto it = members_.find(action);
  if (it == members_.end()) {
    ++misses_;
    return std::nullopt;
  }
  auto v = it->second.lookup(key);
  if (v.has_value()) ++hits_; else ++misses_;
  return v;
}

void SaemTable::flush(const std::vector<MItem>& items) {
  // Partition by joint action, preserving first-appearance order; each
  // distinct action is one member-table touch, which is what makes this
  // family's flush cost scale with the staged set in the worst case.
  std::vector<const JointAction*> order;
  std::map<JointAction, std::vector<MItem>> groups;
  for (const auto& item : items) {
    if (item.action.empty())
      throw Error("saem flush: staged item carries no joint action");
    auto [it, fresh] = groups.try_emplace(item.action);
    if (fresh) order.push_back(&it->first);
    it->second.push_back(item);
  }
  last_flush_touched_ = order.size();
  for (const JointAction* action : order) {
    auto [it, fresh] = members_.try_emplace(*action, SemTable(member_capacity_));
    it->second.flush(groups.at(*action));
  }
}

void SemTable::serialize(std::ostream& out) const {
  out << "marl-table v1\n";
  out << "capacity " << capacity_ << "\n";
  out << "dim " << (entries_.empty() ? 0 : entries_.begin()->first.q.size())
      << "\n";
  out << "entries " << entries_.size() << "\n";
  // Stable order: sort by insertion index so dumps of equal tables match.
  std::vector<const std::pair<const MemoryKey, TableEntry>*> rows;
  rows.reserve(entries_.size());
  for (const auto& kv : entries_) rows.push_back(&kv);
  std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
    return a->second.insertion_index < b->second.insertion_index;
  });
  for (const auto* row : rows) {
    for (std::int64_t c : row->first.q) out << c << " ";
    write_double(out, row->second.value);
    out << " " << row->second.access_count << " " << row->second.insertion_index
        << "\n";
  }
}

SemTable SemTable::deserialize(std::istream& in) {
  std::string magic, version, field;
  in >> magic >> version;
  if (magic != "marl-table" || version != "v1")
    throw IoError("table load: unrecognised header");
  std::size_t capacity = 0, dim = 0, count = 0;
  in >> field >> capacity;
  if (field != "capacity") throw IoError("table load: missing capacity");
  in >> field >> dim;
  if (field != "dim") throw IoError("table load: missing dim");
  in >> field >> count;
  if (field != "entries") throw IoError("table load: missing entries");
  SemTable table(capacity);
  std::uint64_t max_index = 0;
  for (std::size_t i = 0; i < count; ++i) {
    MemoryKey key;
    key.q.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) in >> key.q[d];
    TableEntry e;
    in >> e.value >> e.access_count >> e.insertion_index;
    if (!in) throw IoError("table load: truncated entry");
    max_index = std::max(max_index, e.insertion_index + 1);
    table.entries_.emplace(std::move(key), e);
  }
  table.next_insertion_ = max_index;
  return table;
}

void SaemTable::serialize(std::ostream& out) const {
  out << "marl-saem v1\n";
  out << "capacity " << member_capacity_ << "\n";
  out << "tables " << members_.size() << "\n";
  for (const auto& [action, table] : members_) {
    out << "action";
    for (int a : action) out << " " << a;
    out << "\n";
    table.serialize(out);
  }
}

SaemTable SaemTable::deserialize(std::istream& in) {
  std::string magic, version, field;
  in >> magic >> version;
  if (magic != "marl-saem" || version != "v1")
    throw IoError("table load: unrecognised header");
  std::size_t capacity = 0, count = 0;
  in >> field >> capacity;
  if (field != "capacity") throw IoError("table load: missing capacity");
  in >> field >> count;
  if (field != "tables") throw IoError("table load: missing tables");
  std::string line;
  std::getline(in, line);
  SaemTable family(capacity);
  for (std::size_t i = 0; i < count; ++i) {
    std::getline(in, line);
    std::istringstream header(line);
    header >> field;
    if (field != "action") throw IoError("table load: missing action header");
    JointAction action;
    int a;
    while (header >> a) action.push_back(a);
    SemTable member = SemTable::deserialize(in);
    std::getline(in, line);  // consume trailing newline of the member block
    family.members_.emplace(std::move(action), std::move(member));
  }
  return family;
}

}  // namespace marl
