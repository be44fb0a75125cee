#include "optsmr/linearizability.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "optsmr/fnv.hpp"

namespace optsmr {

// ------------------------------------------------------------ SequentialModel

std::string SequentialModel::apply(CommandKind kind, uint64_t key,
                                   const std::optional<std::string>& arg) {
  std::string outcome;
  apply_undoable(kind, key, arg, &outcome);
  return outcome;
}

static uint64_t entry_mix(uint64_t key, const std::string& value) {
  uint64_t h = fnv1a_u64(kFnvOffset, key);
  h = fnv1a_bytes(h, value);
  return h;
}

SequentialModel::Undo SequentialModel::apply_undoable(CommandKind kind, uint64_t key,
                                                      const std::optional<std::string>& arg,
                                                      std::string* outcome) {
  Undo u{key, std::nullopt, false};
  auto it = data_.find(key);
  switch (kind) {
    case CommandKind::Read:
      *outcome = it == data_.end() ? outcome_absent() : outcome_value(it->second);
      return u;
    case CommandKind::Update:
      if (it == data_.end()) {
        *outcome = outcome_notfound();
        return u;
      }
      u.prior = it->second;
      u.had_effect = true;
      digest_ ^= entry_mix(key, it->second);
      it->second = arg.value_or("");
      digest_ ^= entry_mix(key, it->second);
      *outcome = outcome_ok();
      return u;
    case CommandKind::Insert:
      if (it != data_.end()) {
        u.prior = it->second;
        digest_ ^= entry_mix(key, it->second);
        it->second = arg.value_or("");
      } else {
        data_.emplace(key, arg.value_or(""));
      }
      u.had_effect = true;
      digest_ ^= entry_mix(key, arg.value_or(""));
      *outcome = outcome_ok();
      return u;
    case CommandKind::Delete:
      if (it == data_.end()) {
        *outcome = outcome_notfound();
        return u;
      }
      u.prior = it->second;
      u.had_effect = true;
      digest_ ^= entry_mix(key, it->second);
      data_.erase(it);
      *outcome = outcome_ok();
      return u;
  }
  *outcome = outcome_notfound();
  return u;
}

void SequentialModel::undo(const Undo& u) {
  if (!u.had_effect) return;
  auto it = data_.find(u.key);
  if (it != data_.end()) digest_ ^= entry_mix(u.key, it->second);
  if (u.prior) {
    if (it != data_.end())
      it->second = *u.prior;
    else
      data_.emplace(u.key, *u.prior);
    digest_ ^= entry_mix(u.key, *u.prior);
  } else {
    data_.erase(it);
  }
}

// ------------------------------------------------------------------ histories

std::string Operation::describe() const {
  std::ostringstream os;
  os << "c" << client_id << "#" << client_seq << " " << kind_name(kind) << "(" << key;
  if (arg) os << ",\"" << hex_encode(*arg) << "\"";
  os << ")";
  if (outcome)
    os << " -> " << *outcome;
  else
    os << " -> <pending>";
  return os.str();
}

std::vector<Operation> operations_from_history(const std::vector<HistoryEvent>& events) {
  std::vector<Operation> ops;
  std::unordered_map<uint64_t, size_t> open;  // (client, seq) -> index
  auto slot = [](uint32_t c, uint64_t s) { return (uint64_t(c) << 40) ^ s; };

  for (const auto& ev : events) {
    if (ev.kind == EventKind::Invoke) {
      Operation op;
      op.client_id = ev.client_id;
      op.client_seq = ev.client_seq;
      op.kind = ev.command;
      op.key = ev.key;
      op.arg = ev.arg;
      op.invoke_ns = ev.wallclock_ns;
      open[slot(ev.client_id, ev.client_seq)] = ops.size();
      ops.push_back(std::move(op));
    } else {
      auto it = open.find(slot(ev.client_id, ev.client_seq));
      if (it == open.end())
        throw std::invalid_argument("response without a matching invocation");
      ops[it->second].respond_ns = ev.wallclock_ns;
      ops[it->second].outcome = ev.outcome;
      open.erase(it);
    }
  }
  std::stable_sort(ops.begin(), ops.end(),
                   [](const Operation& a, const Operation& b) { return a.invoke_ns < b.invoke_ns; });
  return ops;
}

// -------------------------------------------------------------------- checker

namespace {

constexpr uint64_t kInf = std::numeric_limits<uint64_t>::max();

struct SearchState {
  const std::vector<Operation>& ops;
  CheckerBudget budget;
  SequentialModel model;
  std::vector<bool> done;
  std::vector<size_t> sequence;
  size_t completed_remaining;
  uint64_t states = 0;
  bool out_of_budget = false;
  std::unordered_set<uint64_t> memo;
  std::vector<size_t> best_prefix;
  std::vector<std::string> best_evidence;

  explicit SearchState(const std::vector<Operation>& ops_, CheckerBudget b)
      : ops(ops_), budget(b), done(ops_.size(), false) {
    completed_remaining = 0;
    for (const auto& op : ops)
      if (!op.pending()) ++completed_remaining;
  }

  uint64_t config_hash() const {
    uint64_t h = kFnvOffset;
    uint64_t word = 0;
    for (size_t i = 0; i < done.size(); ++i) {
      word = (word << 1) | (done[i] ? 1 : 0);
      if (i % 64 == 63) {
        h = fnv1a_u64(h, word);
        word = 0;
      }
    }
    h = fnv1a_u64(h, word);
    h = fnv1a_u64(h, model.digest());
    return h;
  }

  // An operation is linearizable next iff no other remaining operation
  // responded before it was invoked.
  uint64_t min_remaining_response() const {
    uint64_t m = kInf;
    for (size_t i = 0; i < ops.size(); ++i)
      if (!done[i] && ops[i].respond_ns && *ops[i].respond_ns < m) m = *ops[i].respond_ns;
    return m;
  }

  bool search() {
    if (completed_remaining == 0) return true;
    if (++states > budget.max_states) {
      out_of_budget = true;
      return false;
    }
    if (!memo.insert(config_hash()).second) return false;

    uint64_t frontier = min_remaining_response();
    std::vector<std::string> evidence_here;
    for (size_t i = 0; i < ops.size(); ++i) {
      if (done[i]) continue;
      const Operation& op = ops[i];
      if (op.invoke_ns > frontier) continue;  // someone finished before this started

      std::string outcome;
      auto undo = model.apply_undoable(op.kind, op.key, op.arg, &outcome);
      bool matches = op.pending() || outcome == *op.outcome;
      if (matches) {
        done[i] = true;
        sequence.push_back(i);
        if (!op.pending()) --completed_remaining;
        if (search()) return true;
        if (!op.pending()) ++completed_remaining;
        sequence.pop_back();
        done[i] = false;
      } else if (sequence.size() >= best_prefix.size()) {
        evidence_here.push_back(op.describe() + " (sequential spec expects " + outcome + ")");
      }
      model.undo(undo);
      if (out_of_budget) return false;
    }
    if (sequence.size() > best_prefix.size() ||
        (sequence.size() == best_prefix.size() && !evidence_here.empty() &&
         best_evidence.empty())) {
      best_prefix = sequence;
      best_evidence = std::move(evidence_here);
    }
    return false;
  }
};

}  // namespace

CheckResult check_linearizable(const std::vector<Operation>& ops, CheckerBudget budget) {
  for (const auto& op : ops) {
    if (op.respond_ns && *op.respond_ns < op.invoke_ns)
      throw std::invalid_argument("response precedes invocation");
  }
  SearchState st(ops, budget);
  CheckResult res;
  bool ok = st.search();
  res.states_explored = st.states;
  if (ok) {
    res.verdict = Verdict::Ok;
    res.witness = st.sequence;
  } else if (st.out_of_budget) {
    res.verdict = Verdict::Inconclusive;
  } else {
    res.verdict = Verdict::Violation;
    res.best_prefix = st.best_prefix;
    res.evidence = st.best_evidence;
    if (res.evidence.empty()) res.evidence.push_back("no operation can be linearized first");
  }
  return res;
}

CheckResult check_linearizable(const std::vector<HistoryEvent>& events, CheckerBudget budget) {
  return check_linearizable(operations_from_history(events), budget);
}

bool check_convergence(const std::vector<std::string>& replica_digests) {
  if (replica_digests.empty())
    throw std::invalid_argument("convergence check needs at least one live replica");
  for (const auto& d : replica_digests)
    if (d != replica_digests.front()) return false;
  return true;
}

}  // namespace optsmr
