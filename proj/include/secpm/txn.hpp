#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "secpm/controller.hpp"

namespace secpm {

enum class TxnStage { None, Prepare, Mutate, Commit, Done };
std::string_view to_string(TxnStage s);

struct LineWrite {
  Addr address = 0;
  Line value{};
  friend bool operator==(const LineWrite&, const LineWrite&) = default;
};

/// One durable transaction. `read_set` holds structure-traversal reads that
/// precede the transaction proper and are not logged.
struct TxnDescriptor {
  std::uint64_t txn_id = 0;
  std::vector<LineWrite> write_set;
  std::vector<Addr> read_set;
  Addr log_base = 0;
  TxnStage stage = TxnStage::Prepare;

  std::size_t log_lines() const { return write_set.size() + 2; }
  friend bool operator==(const TxnDescriptor&, const TxnDescriptor&) = default;
};

/// Undo-log entry layout: header line, one old-value line per written line,
/// end-tag line. Invalidation overwrites the end tag with zeros.
namespace log_format {
inline constexpr std::uint32_t kHeaderMagic = 0x48474f4cU;  // "LOGH"
inline constexpr std::uint32_t kEndMagic = 0x444e4554U;     // "TEND"
inline constexpr std::size_t kMaxRanges = 3;

struct Range {
  Addr start = 0;
  std::uint32_t lines = 0;
  friend bool operator==(const Range&, const Range&) = default;
};

struct Header {
  std::uint64_t txn_id = 0;
  std::uint32_t lines = 0;
  std::vector<Range> ranges;
  friend bool operator==(const Header&, const Header&) = default;
};

struct EndTag {
  std::uint64_t txn_id = 0;
  std::uint64_t checksum = 0;
};

/// Coalesces the write set into contiguous ranges. Throws if more than kMaxRanges.
Header header_for(const TxnDescriptor& txn);
std::vector<Addr> expand(const Header& h);
Line encode(const Header& h);
std::optional<Header> decode_header(const Line& l);
Line encode(const EndTag& t);
std::optional<EndTag> decode_end_tag(const Line& l);
std::uint64_t checksum(const Line& header, std::span<const Line> old_values);
}  // namespace log_format

struct ExecutorOptions {
  /// CPU work charged before each flush and each read (data preparation).
  Nanos cpu_ns_per_line = 0;
  /// Fixed CPU work per transaction (begin/commit bookkeeping).
  Nanos cpu_ns_per_txn = 0;
};

struct TxnRecord {
  std::uint64_t txn_id = 0;
  std::size_t core = 0;
  Nanos start = 0;
  Nanos end = 0;
};

/// Deterministic event loop over N logical cores sharing one controller.
/// The next step always belongs to the core with the smallest (ready time, id).
class Executor {
 public:
  Executor(Controller& controller, std::size_t cores, ExecutorOptions opts = {});

  void submit(std::size_t core, TxnDescriptor txn);
  /// Runs until every submitted transaction is done. Returns the finish time.
  Nanos run();
  /// Executes a single step; false when no work remains.
  bool step();

  TxnStage stage(std::size_t core) const { return cores_.at(core).stage; }
  const std::vector<TxnRecord>& completed() const { return completed_; }
  Nanos now() const;
  void set_start_time(Nanos t);

 private:
  enum class OpKind { TraversalRead, ReadOld, FlushHeader, FlushOld, FlushEndTag, FlushNew, Invalidate, Fence };
  struct Op {
    OpKind kind;
    std::size_t index = 0;
  };
  struct Core {
    std::deque<TxnDescriptor> pending;
    std::optional<TxnDescriptor> current;
    std::vector<Op> program;
    std::size_t pc = 0;
    std::vector<Line> old_values;
    Line header{};
    Nanos ready = 0;
    Nanos txn_start = 0;
    TxnStage stage = TxnStage::None;
  };

  void start_next(Core& core);
  void execute(std::size_t core_id, Core& core);

  Controller& ctl_;
  ExecutorOptions opts_;
  std::vector<Core> cores_;
  std::vector<TxnRecord> completed_;
};

/// Runs one transaction to completion on a single core.
Nanos run_transaction(Controller& controller, const TxnDescriptor& txn, Nanos now = 0,
                      ExecutorOptions opts = {});

struct LogRegion {
  Addr base = 0;
  std::uint64_t bytes = 0;
  bool contains(Addr a) const { return a >= base && a < base + bytes; }
};

struct LogRecovery {
  std::uint64_t txn_id = 0;
  Addr header_address = 0;
  bool complete = false;
};

struct RecoveryReport {
  std::vector<LogRecovery> logs;
  Nanos finished = 0;
};

/// Undo recovery: scan every written line of the log regions, roll back
/// complete entries, drop incomplete ones, then drain.
RecoveryReport recover_logs(Controller& controller, std::span<const LogRegion> regions, Nanos now = 0);

enum class Outcome { RolledBack, Committed, Inconsistent };
std::string_view to_string(Outcome o);

struct TxnExpectation {
  std::uint64_t txn_id = 0;
  std::vector<Addr> addresses;
  std::vector<Line> pre;
  std::vector<Line> post;
};

struct RecoveryVerdict {
  std::uint64_t txn_id = 0;
  std::uint64_t crash_point = 0;
  TxnStage stage = TxnStage::None;
  Outcome outcome = Outcome::RolledBack;
  std::optional<Addr> failing_address;

  friend bool operator==(const RecoveryVerdict&, const RecoveryVerdict&) = default;
};

/// Classifies recovered data against the pre- and post-images.
RecoveryVerdict judge(Controller& controller, const TxnExpectation& expect);

/// `txn_id,crash_point_id,stage,verdict`
void write_verdicts_csv(std::ostream& out, std::span<const RecoveryVerdict> verdicts);

/// Exhaustive crash-point enumeration of one transaction against a
/// pre-populated image (see crash.hpp for the engine).
std::vector<RecoveryVerdict> enumerate_crash_points(const TxnDescriptor& txn, const ControllerConfig& cfg);

}  // namespace secpm
