#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "secpm/txn.hpp"

namespace secpm {

enum class WorkloadKind { Array, Queue, BTree, HashTable, RBTree };

std::string_view to_string(WorkloadKind k);
std::optional<WorkloadKind> parse_workload(std::string_view s);
inline constexpr WorkloadKind kAllWorkloads[] = {WorkloadKind::Array, WorkloadKind::Queue, WorkloadKind::BTree,
                                                 WorkloadKind::HashTable, WorkloadKind::RBTree};

/// 1 GiB for array/queue, 2 GiB for the tree and table stores.
std::uint64_t default_footprint(WorkloadKind k);

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::Array;
  std::uint64_t txn_size = 1024;  // bytes, multiple of 64
  std::uint64_t txn_count = 1000;
  std::uint64_t seed = 1;
  std::uint64_t footprint = 0;  // 0 = default_footprint(kind)

  std::uint64_t effective_footprint() const { return footprint ? footprint : default_footprint(kind); }
  void validate() const;
};

/// Shadow-structure shape. Nodes hold `btree_fanout` items; buckets hold
/// `bucket_items`.
inline constexpr std::size_t kBTreeFanout = 16;
inline constexpr std::size_t kBucketItems = 4;

/// Where each transaction's undo log lives: packed back to back from
/// `log_area_base`, in stream order.
struct LogLayout {
  Addr log_area_base = 0;
};

/// Logs start right after the data footprint (page aligned).
LogLayout default_log_layout(const WorkloadSpec& spec);
/// Bytes of data region needed to hold the footprint plus every log.
std::uint64_t required_data_bytes(const WorkloadSpec& spec, std::uint64_t txn_size_for_logs = 0);

/// Synthetic item bytes for one written line.
Line item_value(std::uint64_t seed, std::uint64_t txn_id, Addr address);

using TxnStream = std::vector<TxnDescriptor>;

TxnStream generate(const WorkloadSpec& spec);

/// Assigns log areas in stream order (used by generate and trace import).
void assign_logs(TxnStream& stream, const LogLayout& layout);

/// `TXN <id> WRITE <hex-address> <len>` per contiguous write range, plus
/// `TXN <id> READ <hex-address> <len>` for traversal reads.
void write_trace(std::ostream& out, const TxnStream& stream);
/// Rebuilds the stream; values come from item_value(seed, ...). Throws
/// std::runtime_error on malformed input.
TxnStream read_trace(std::istream& in, std::uint64_t seed, const LogLayout& layout);

}  // namespace secpm
