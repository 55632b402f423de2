#include "secpm/txn.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace secpm {

std::string_view to_string(TxnStage s) {
  switch (s) {
    case TxnStage::None: return "NONE";
    case TxnStage::Prepare: return "PREPARE";
    case TxnStage::Mutate: return "MUTATE";
    case TxnStage::Commit: return "COMMIT";
    case TxnStage::Done: return "DONE";
  }
  return "?";
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::RolledBack: return "ROLLED_BACK";
    case Outcome::Committed: return "COMMITTED";
    case Outcome::Inconsistent: return "INCONSISTENT";
  }
  return "?";
}

namespace log_format {

Header header_for(const TxnDescriptor& txn) {
  Header h;
  h.txn_id = txn.txn_id;
  h.lines = static_cast<std::uint32_t>(txn.write_set.size());
  for (const LineWrite& w : txn.write_set) {
    if (!h.ranges.empty() && h.ranges.back().start + h.ranges.back().lines * kLineBytes == w.address) {
      ++h.ranges.back().lines;
    } else {
      h.ranges.push_back({w.address, 1});
    }
  }
  if (h.ranges.size() > kMaxRanges) throw std::invalid_argument("write set has too many discontiguous ranges");
  return h;
}

std::vector<Addr> expand(const Header& h) {
  std::vector<Addr> out;
  out.reserve(h.lines);
  for (const Range& r : h.ranges) {
    for (std::uint32_t i = 0; i < r.lines; ++i) out.push_back(r.start + i * kLineBytes);
  }
  return out;
}

Line encode(const Header& h) {
  Line l{};
  store_le32(l.data(), kHeaderMagic);
  store_le64(l.data() + 4, h.txn_id);
  store_le32(l.data() + 12, h.lines);
  store_le32(l.data() + 16, static_cast<std::uint32_t>(h.ranges.size()));
  for (std::size_t i = 0; i < h.ranges.size(); ++i) {
    store_le64(l.data() + 20 + 12 * i, h.ranges[i].start);
    store_le32(l.data() + 28 + 12 * i, h.ranges[i].lines);
  }
  return l;
}

std::optional<Header> decode_header(const Line& l) {
  if (load_le32(l.data()) != kHeaderMagic) return std::nullopt;
  Header h;
  h.txn_id = load_le64(l.data() + 4);
  h.lines = load_le32(l.data() + 12);
  const std::uint32_t n = load_le32(l.data() + 16);
  if (n == 0 || n > kMaxRanges || h.lines == 0) return std::nullopt;
  std::uint64_t total = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    Range r{load_le64(l.data() + 20 + 12 * i), load_le32(l.data() + 28 + 12 * i)};
    if (!is_line_aligned(r.start) || r.lines == 0) return std::nullopt;
    total += r.lines;
    h.ranges.push_back(r);
  }
  if (total != h.lines) return std::nullopt;
  return h;
}

Line encode(const EndTag& t) {
  Line l{};
  store_le32(l.data(), kEndMagic);
  store_le64(l.data() + 4, t.txn_id);
  store_le64(l.data() + 12, t.checksum);
  return l;
}

std::optional<EndTag> decode_end_tag(const Line& l) {
  if (load_le32(l.data()) != kEndMagic) return std::nullopt;
  return EndTag{load_le64(l.data() + 4), load_le64(l.data() + 12)};
}

std::uint64_t checksum(const Line& header, std::span<const Line> old_values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  auto mix = [&h](const Line& l) {
    for (std::uint8_t b : l) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  };
  mix(header);
  for (const Line& l : old_values) mix(l);
  return h;
}

}  // namespace log_format

Executor::Executor(Controller& controller, std::size_t cores, ExecutorOptions opts)
    : ctl_(controller), opts_(opts), cores_(cores) {
  if (cores == 0) throw std::invalid_argument("executor needs at least one core");
}

void Executor::submit(std::size_t core, TxnDescriptor txn) {
  if (txn.write_set.empty()) throw std::invalid_argument("transaction with an empty write set");
  cores_.at(core).pending.push_back(std::move(txn));
}

Nanos Executor::now() const {
  Nanos t = 0;
  for (const Core& c : cores_) t = std::max(t, c.ready);
  return t;
}

void Executor::set_start_time(Nanos t) {
  for (Core& c : cores_) c.ready = std::max(c.ready, t);
}

void Executor::start_next(Core& core) {
  core.current = std::move(core.pending.front());
  core.pending.pop_front();
  const TxnDescriptor& txn = *core.current;
  const std::size_t n = txn.write_set.size();

  core.program.clear();
  core.pc = 0;
  for (std::size_t i = 0; i < txn.read_set.size(); ++i) core.program.push_back({OpKind::TraversalRead, i});
  for (std::size_t i = 0; i < n; ++i) core.program.push_back({OpKind::ReadOld, i});
  core.program.push_back({OpKind::FlushHeader});
  for (std::size_t i = 0; i < n; ++i) core.program.push_back({OpKind::FlushOld, i});
  core.program.push_back({OpKind::FlushEndTag});
  core.program.push_back({OpKind::Fence});
  for (std::size_t i = 0; i < n; ++i) core.program.push_back({OpKind::FlushNew, i});
  core.program.push_back({OpKind::Fence});
  core.program.push_back({OpKind::Invalidate});
  core.program.push_back({OpKind::Fence});

  core.old_values.assign(n, kZeroLine);
  core.header = log_format::encode(log_format::header_for(txn));
  core.txn_start = core.ready;
  core.ready += opts_.cpu_ns_per_txn;
  core.stage = TxnStage::Prepare;
  core.current->stage = TxnStage::Prepare;
}

void Executor::execute(std::size_t core_id, Core& core) {
  TxnDescriptor& txn = *core.current;
  const Op op = core.program[core.pc++];
  const Addr end_tag = txn.log_base + (txn.write_set.size() + 1) * kLineBytes;
  auto flush = [&](Addr a, const Line& l) {
    core.ready = ctl_.handle_flush(a, l, core.ready + opts_.cpu_ns_per_line);
  };
  switch (op.kind) {
    case OpKind::TraversalRead:
      core.ready = ctl_.handle_read(txn.read_set[op.index], core.ready + opts_.cpu_ns_per_line).completion;
      break;
    case OpKind::ReadOld: {
      const ReadResult r = ctl_.handle_read(txn.write_set[op.index].address, core.ready + opts_.cpu_ns_per_line);
      core.old_values[op.index] = r.payload;
      core.ready = r.completion;
      break;
    }
    case OpKind::FlushHeader:
      flush(txn.log_base, core.header);
      break;
    case OpKind::FlushOld:
      flush(txn.log_base + (op.index + 1) * kLineBytes, core.old_values[op.index]);
      break;
    case OpKind::FlushEndTag:
      flush(end_tag, log_format::encode(log_format::EndTag{
                         txn.txn_id, log_format::checksum(core.header, core.old_values)}));
      break;
    case OpKind::FlushNew:
      flush(txn.write_set[op.index].address, txn.write_set[op.index].value);
      break;
    case OpKind::Invalidate:
      flush(end_tag, kZeroLine);
      break;
    case OpKind::Fence:
      core.ready = ctl_.fence(core.ready);
      switch (core.stage) {
        case TxnStage::Prepare: core.stage = TxnStage::Mutate; break;
        case TxnStage::Mutate: core.stage = TxnStage::Commit; break;
        default: core.stage = TxnStage::Done; break;
      }
      txn.stage = core.stage;
      break;
  }
  if (core.pc == core.program.size()) {
    completed_.push_back({txn.txn_id, core_id, core.txn_start, core.ready});
    core.current.reset();
  }
}

bool Executor::step() {
  Core* best = nullptr;
  std::size_t best_id = 0;
  for (std::size_t i = 0; i < cores_.size(); ++i) {
    Core& c = cores_[i];
    if (!c.current && c.pending.empty()) continue;
    if (!best || c.ready < best->ready) {
      best = &c;
      best_id = i;
    }
  }
  if (!best) return false;
  if (!best->current) start_next(*best);
  execute(best_id, *best);
  return true;
}

Nanos Executor::run() {
  while (step()) {
  }
  return now();
}

Nanos run_transaction(Controller& controller, const TxnDescriptor& txn, Nanos now, ExecutorOptions opts) {
  Executor ex(controller, 1, opts);
  ex.set_start_time(now);
  ex.submit(0, txn);
  return ex.run();
}

RecoveryReport recover_logs(Controller& ctl, std::span<const LogRegion> regions, Nanos now) {
  std::vector<Addr> candidates;
  for (const auto& [a, l] : ctl.nvm().contents()) {
    if (std::any_of(regions.begin(), regions.end(), [a](const LogRegion& r) { return r.contains(a); })) {
      candidates.push_back(a);
    }
  }
  std::sort(candidates.begin(), candidates.end());

  RecoveryReport report;
  Nanos t = now;
  Addr skip_until = 0;
  for (Addr a : candidates) {
    if (a < skip_until) continue;
    const ReadResult hr = ctl.handle_read(a, t);
    t = hr.completion;
    const auto header = log_format::decode_header(hr.payload);
    if (!header) continue;
    const std::vector<Addr> targets = log_format::expand(*header);
    const Addr end_tag = a + (header->lines + 1) * kLineBytes;
    const bool in_region =
        std::any_of(regions.begin(), regions.end(), [&](const LogRegion& r) { return r.contains(a) && r.contains(end_tag); });
    const bool targets_ok = std::all_of(targets.begin(), targets.end(), [&](Addr x) {
      return ctl.address_map().in_data_region(x);
    });
    if (!in_region || !targets_ok) continue;

    std::vector<Line> old_values;
    old_values.reserve(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const ReadResult r = ctl.handle_read(a + (i + 1) * kLineBytes, t);
      t = r.completion;
      old_values.push_back(r.payload);
    }
    const ReadResult er = ctl.handle_read(end_tag, t);
    t = er.completion;
    const auto tag = log_format::decode_end_tag(er.payload);
    const bool complete =
        tag && tag->txn_id == header->txn_id && tag->checksum == log_format::checksum(hr.payload, old_values);
    report.logs.push_back({header->txn_id, a, complete});
    skip_until = end_tag + kLineBytes;
    if (!complete) continue;  // crashed in PREPARE: data untouched

    for (std::size_t i = 0; i < targets.size(); ++i) t = ctl.handle_flush(targets[i], old_values[i], t);
    t = ctl.fence(t);
    t = ctl.handle_flush(end_tag, kZeroLine, t);
    t = ctl.fence(t);
  }
  report.finished = ctl.quiesce(t);
  return report;
}

RecoveryVerdict judge(Controller& ctl, const TxnExpectation& expect) {
  RecoveryVerdict v;
  v.txn_id = expect.txn_id;
  bool all_pre = true;
  bool all_post = true;
  Nanos t = ctl.quiesce(0);
  for (std::size_t i = 0; i < expect.addresses.size(); ++i) {
    const ReadResult r = ctl.handle_read(expect.addresses[i], t);
    t = r.completion;
    const bool is_pre = r.payload == expect.pre[i];
    const bool is_post = r.payload == expect.post[i];
    if (!is_pre && !is_post && !v.failing_address) v.failing_address = expect.addresses[i];
    all_pre = all_pre && is_pre;
    all_post = all_post && is_post;
  }
  if (all_pre) {
    v.outcome = Outcome::RolledBack;
    v.failing_address.reset();
  } else if (all_post) {
    v.outcome = Outcome::Committed;
    v.failing_address.reset();
  } else {
    v.outcome = Outcome::Inconsistent;
    if (!v.failing_address && !expect.addresses.empty()) v.failing_address = expect.addresses.front();
  }
  return v;
}

void write_verdicts_csv(std::ostream& out, std::span<const RecoveryVerdict> verdicts) {
  out << "txn_id,crash_point_id,stage,verdict\n";
  for (const RecoveryVerdict& v : verdicts) {
    out << v.txn_id << ',' << v.crash_point << ',' << to_string(v.stage) << ',' << to_string(v.outcome) << '\n';
  }
}

}  // namespace secpm
