#include "secpm/workloads.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace secpm {

std::string_view to_string(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::Array: return "array";
    case WorkloadKind::Queue: return "queue";
    case WorkloadKind::BTree: return "btree";
    case WorkloadKind::HashTable: return "hashtable";
    case WorkloadKind::RBTree: return "rbtree";
  }
  return "?";
}

std::optional<WorkloadKind> parse_workload(std::string_view s) {
  for (WorkloadKind k : kAllWorkloads) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::uint64_t default_footprint(WorkloadKind k) {
  return (k == WorkloadKind::Array || k == WorkloadKind::Queue) ? (1ULL << 30) : (2ULL << 30);
}

void WorkloadSpec::validate() const {
  if (txn_size == 0 || txn_size % kLineBytes != 0) throw std::invalid_argument("txn size must be a multiple of 64");
  if (txn_size > kPageBytes) throw std::invalid_argument("txn size above 4 KiB");
  const std::uint64_t fp = effective_footprint();
  if (fp % kPageBytes != 0 || fp < kBTreeFanout * txn_size * 4) throw std::invalid_argument("footprint too small");
}

LogLayout default_log_layout(const WorkloadSpec& spec) { return {spec.effective_footprint()}; }

std::uint64_t required_data_bytes(const WorkloadSpec& spec, std::uint64_t txn_size_for_logs) {
  const std::uint64_t size = txn_size_for_logs ? txn_size_for_logs : spec.txn_size;
  const std::uint64_t logs = spec.txn_count * (size / kLineBytes + 2) * kLineBytes;
  const std::uint64_t total = spec.effective_footprint() + logs + kPageBytes;
  return (total + kPageBytes - 1) / kPageBytes * kPageBytes;
}

Line item_value(std::uint64_t seed, std::uint64_t txn_id, Addr address) {
  std::uint64_t x = seed * 0x9e3779b97f4a7c15ULL ^ (txn_id << 20) ^ address;
  Line l;
  for (std::size_t i = 0; i < kLineBytes; i += 8) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    store_le64(l.data() + i, z ^ (z >> 31));
  }
  return l;
}

void assign_logs(TxnStream& stream, const LogLayout& layout) {
  Addr next = layout.log_area_base;
  for (TxnDescriptor& t : stream) {
    t.log_base = next;
    next += t.log_lines() * kLineBytes;
  }
}

namespace {

void add_range(TxnDescriptor& t, std::uint64_t seed, Addr start, std::uint64_t bytes) {
  for (Addr a = start; a < start + bytes; a += kLineBytes) t.write_set.push_back({a, item_value(seed, t.txn_id, a)});
}

void add_reads(TxnDescriptor& t, Addr start, std::uint64_t bytes) {
  for (Addr a = start; a < start + bytes; a += kLineBytes) t.read_set.push_back(a);
}

class Generator {
 public:
  explicit Generator(const WorkloadSpec& s)
      : spec_(s), fp_(s.effective_footprint()), rng_(s.seed * 0x100000001b3ULL + static_cast<unsigned>(s.kind)) {}

  TxnStream run() {
    TxnStream out;
    out.reserve(spec_.txn_count);
    for (std::uint64_t id = 0; id < spec_.txn_count; ++id) {
      TxnDescriptor t;
      t.txn_id = id;
      switch (spec_.kind) {
        case WorkloadKind::Array: array(t); break;
        case WorkloadKind::Queue: queue(t); break;
        case WorkloadKind::BTree: btree(t); break;
        case WorkloadKind::HashTable: hashtable(t); break;
        case WorkloadKind::RBTree: rbtree(t); break;
      }
      out.push_back(std::move(t));
    }
    return out;
  }

 private:
  std::uint64_t uniform(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng_); }

  // A swap is two transactions: the first writes entry i reading j, the
  // second writes j reading i.
  void array(TxnDescriptor& t) {
    const std::uint64_t entries = fp_ / spec_.txn_size;
    if (t.txn_id % 2 == 0) {
      swap_i_ = uniform(entries);
      do swap_j_ = uniform(entries);
      while (swap_j_ == swap_i_);
    } else {
      std::swap(swap_i_, swap_j_);
    }
    add_reads(t, swap_j_ * spec_.txn_size, spec_.txn_size);
    add_range(t, spec_.seed, swap_i_ * spec_.txn_size, spec_.txn_size);
  }

  void queue(TxnDescriptor& t) {
    if (tail_ + spec_.txn_size > fp_) tail_ = 0;
    add_range(t, spec_.seed, tail_, spec_.txn_size);
    tail_ += spec_.txn_size;
  }

  // B+-tree leaves are bump-allocated nodes of kBTreeFanout item slots; an
  // insert appends the item to its leaf's next slot. Splits move keys in the
  // shadow tree only.
  struct Leaf {
    Addr node = 0;
    std::vector<std::uint64_t> keys;
  };

  Addr allocate_node() {
    const std::uint64_t node_bytes = kBTreeFanout * spec_.txn_size;
    if (bump_ + node_bytes > fp_) throw std::length_error("b-tree arena exhausted");
    const Addr a = bump_;
    bump_ += node_bytes;
    return a;
  }

  void btree(TxnDescriptor& t) {
    if (leaves_.empty()) leaves_.emplace(0, Leaf{allocate_node(), {}});
    const std::uint64_t key = rng_();
    auto it = std::prev(leaves_.upper_bound(key));
    if (it->second.keys.size() == kBTreeFanout) {
      auto& keys = it->second.keys;
      std::sort(keys.begin(), keys.end());
      const std::uint64_t mid = keys[kBTreeFanout / 2];
      Leaf right{allocate_node(), {keys.begin() + kBTreeFanout / 2, keys.end()}};
      keys.resize(kBTreeFanout / 2);
      leaves_.emplace(mid, std::move(right));
      it = std::prev(leaves_.upper_bound(key));
    }
    // interior levels: one line per level, laid out at the arena top
    std::size_t level = 0;
    for (std::size_t span = leaves_.size(); span > 1; span = (span + kBTreeFanout - 1) / kBTreeFanout, ++level) {
      const auto rank = static_cast<std::uint64_t>(std::distance(leaves_.begin(), it));
      std::uint64_t idx = rank;
      for (std::size_t l = 0; l <= level; ++l) idx /= kBTreeFanout;
      t.read_set.push_back(fp_ - kPageBytes * (level + 1) * 64 + (idx % 4096) * kLineBytes);
    }
    Leaf& leaf = it->second;
    const Addr slot = leaf.node + leaf.keys.size() * spec_.txn_size;
    leaf.keys.push_back(key);
    add_range(t, spec_.seed, slot, spec_.txn_size);
  }

  void hashtable(TxnDescriptor& t) {
    const std::uint64_t bucket_bytes = kBucketItems * spec_.txn_size;
    const std::uint64_t buckets = fp_ / bucket_bytes;
    const std::uint64_t b = uniform(buckets);
    const std::uint64_t slot = fill_[b]++ % kBucketItems;
    t.read_set.push_back(b * bucket_bytes);  // probe the bucket head
    add_range(t, spec_.seed, b * bucket_bytes + slot * spec_.txn_size, spec_.txn_size);
  }

  // Red-black tree: one item per node at a scattered address. The search
  // path is approximated by binary search over the sorted key set (a
  // balanced tree of the same size).
  void rbtree(TxnDescriptor& t) {
    const std::uint64_t slots = fp_ / spec_.txn_size;
    const std::uint64_t key = rng_();
    std::size_t lo = 0, hi = rb_keys_.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      t.read_set.push_back(rb_nodes_.at(rb_keys_[mid]));
      if (rb_keys_[mid] < key) lo = mid + 1;
      else hi = mid;
    }
    std::uint64_t slot;
    do slot = uniform(slots);
    while (!rb_used_.insert(slot).second);
    const Addr node = slot * spec_.txn_size;
    rb_keys_.insert(rb_keys_.begin() + static_cast<std::ptrdiff_t>(lo), key);
    rb_nodes_[key] = node;
    add_range(t, spec_.seed, node, spec_.txn_size);
  }

  WorkloadSpec spec_;
  std::uint64_t fp_;
  std::mt19937_64 rng_;
  std::uint64_t swap_i_ = 0, swap_j_ = 0;
  Addr tail_ = 0;
  Addr bump_ = 0;
  std::map<std::uint64_t, Leaf> leaves_;
  std::unordered_map<std::uint64_t, std::uint64_t> fill_;
  std::vector<std::uint64_t> rb_keys_;
  std::unordered_map<std::uint64_t, Addr> rb_nodes_;
  std::set<std::uint64_t> rb_used_;
};

}  // namespace

TxnStream generate(const WorkloadSpec& spec) {
  spec.validate();
  TxnStream s = Generator(spec).run();
  assign_logs(s, default_log_layout(spec));
  return s;
}

void write_trace(std::ostream& out, const TxnStream& stream) {
  for (const TxnDescriptor& t : stream) {
    for (Addr a : t.read_set) out << "TXN " << t.txn_id << " READ " << std::hex << a << std::dec << " 64\n";
    std::size_t i = 0;
    while (i < t.write_set.size()) {
      std::size_t j = i + 1;
      while (j < t.write_set.size() && t.write_set[j].address == t.write_set[j - 1].address + kLineBytes) ++j;
      out << "TXN " << t.txn_id << " WRITE " << std::hex << t.write_set[i].address << std::dec << ' '
          << (j - i) * kLineBytes << '\n';
      i = j;
    }
  }
}

TxnStream read_trace(std::istream& in, std::uint64_t seed, const LogLayout& layout) {
  TxnStream out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tag, op, addr_text;
    std::uint64_t id = 0, len = 0;
    if (!(ss >> tag >> id >> op >> addr_text >> len) || tag != "TXN" || (op != "WRITE" && op != "READ")) {
      throw std::runtime_error("trace line " + std::to_string(lineno) + ": malformed");
    }
    std::size_t used = 0;
    Addr addr = 0;
    try {
      addr = std::stoull(addr_text, &used, 16);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != addr_text.size() || !is_line_aligned(addr) || len == 0 || len % kLineBytes != 0) {
      throw std::runtime_error("trace line " + std::to_string(lineno) + ": bad address or length");
    }
    if (out.empty() || out.back().txn_id != id) {
      out.emplace_back();
      out.back().txn_id = id;
    }
    if (op == "WRITE") add_range(out.back(), seed, addr, len);
    else add_reads(out.back(), addr, len);
  }
  assign_logs(out, layout);
  return out;
}

}  // namespace secpm
