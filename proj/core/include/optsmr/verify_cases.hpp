#pragma once

#include <string>
#include <vector>

namespace optsmr {

struct CaseOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Drives the four correctness cases for two concurrent commands where the
/// conservative and optimistic mappings disagree: (a1) both safety checks
/// pass, (a2) exactly one fails, (a3) both fail, and (b) only one command is
/// checked at all. Each case runs on a live two-replica deployment with
/// constructed tree states and asserts convergence, linearizability, and the
/// expected per-replica execution journal.
std::vector<CaseOutcome> case_suite_44();

}  // namespace optsmr
