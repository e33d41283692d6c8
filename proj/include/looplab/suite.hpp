#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "looplab/experiments.hpp"

namespace looplab {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  std::vector<double> fingerprint;
};

struct SuiteOptions {
  std::uint64_t seed = 2024;
  unsigned workers = 1;
  // Smaller sample sizes (self-test); tolerances are unchanged.
  bool quick = false;
};

inline constexpr int kCriteria = 10;

// Criteria 1..9; criterion 10 reruns the others and compares fingerprints bit for bit.
CriterionResult run_criterion(int id, const SuiteOptions& opt);
// Runs the selected criteria (all when empty) and prints one line per criterion.
std::vector<CriterionResult> run_acceptance(const SuiteOptions& opt, const std::vector<int>& ids, std::ostream& log);

// Module-by-module invariant report. Returns the number of failed checks.
int run_selftest(const SuiteOptions& opt, std::ostream& log);

}  // namespace looplab
