#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "optsmr/command.hpp"
#include "optsmr/history.hpp"

namespace optsmr {

/// Sequential specification of the key-value service used to replay
/// candidate linearizations. Deliberately independent of the B+-tree
/// implementation: a plain sorted map with the same outcome alphabet.
class SequentialModel {
public:
  std::string apply(CommandKind kind, uint64_t key,
                    const std::optional<std::string>& arg);

  struct Undo {
    uint64_t key;
    std::optional<std::string> prior;
    bool had_effect;
  };
  Undo apply_undoable(CommandKind kind, uint64_t key,
                      const std::optional<std::string>& arg, std::string* outcome);
  void undo(const Undo& u);

  /// Order-independent digest of the current contents; collisions only
  /// matter for search memoization, not verdicts.
  uint64_t digest() const { return digest_; }

private:
  std::map<uint64_t, std::string> data_;
  uint64_t digest_ = 0;
};

/// A completed (or pending) client operation reconstructed from the history.
struct Operation {
  uint32_t client_id = 0;
  uint64_t client_seq = 0;
  CommandKind kind = CommandKind::Read;
  uint64_t key = 0;
  std::optional<std::string> arg;
  uint64_t invoke_ns = 0;
  std::optional<uint64_t> respond_ns;   // nullopt: pending at history end
  std::optional<std::string> outcome;   // nullopt: pending

  bool pending() const { return !outcome.has_value(); }
  std::string describe() const;
};

enum class Verdict { Ok, Violation, Inconclusive };

struct CheckResult {
  Verdict verdict = Verdict::Ok;
  /// For Ok: a witness permutation (indices into ops) respecting real-time
  /// order and the sequential spec.
  std::vector<size_t> witness;
  /// For Violation: the longest linearizable prefix found and, per candidate
  /// operation blocked at that frontier, expected vs observed outcomes.
  std::vector<size_t> best_prefix;
  std::vector<std::string> evidence;
  uint64_t states_explored = 0;

  bool ok() const { return verdict == Verdict::Ok; }
};

struct CheckerBudget {
  uint64_t max_states = 2'000'000;
};

std::vector<Operation> operations_from_history(const std::vector<HistoryEvent>& events);

/// Exhaustive search (with memoized pruning) over linear extensions of the
/// real-time partial order, replaying each against the sequential model.
/// Pending operations may be linearized or omitted. Exceeding the budget
/// yields Inconclusive, never a wrong verdict.
CheckResult check_linearizable(const std::vector<Operation>& ops,
                               CheckerBudget budget = {});
CheckResult check_linearizable(const std::vector<HistoryEvent>& events,
                               CheckerBudget budget = {});

/// True iff all live replica digests are equal; throws when none are given.
bool check_convergence(const std::vector<std::string>& replica_digests);

}  // namespace optsmr
