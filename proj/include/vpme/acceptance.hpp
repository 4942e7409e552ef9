#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vpme {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::string detail;
};

inline constexpr int kCriterionCount = 10;

std::string criterion_title(int id);
double criterion_budget(int id);

/// Runs one acceptance criterion. Exceptions become a FAIL carrying the message,
/// and a run that exceeds its time budget fails as well.
CriterionResult run_criterion(int id);

/// Runs the selected criteria (all when empty), printing one PASS/FAIL line each.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids, std::ostream& out);

}  // namespace vpme
