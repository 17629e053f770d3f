#pragma once

// The acceptance suite: twelve pass/fail criteria, shared by the `selftest`
// subcommand and the acceptance test binary.

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace anisoflow {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string summary;
  nlohmann::json details;
};

struct Criterion {
  int id;
  std::string title;
  std::function<CriterionResult(std::uint64_t seed)> run;
};

// Criteria 1..11; criterion 12 (determinism) is derived by running these twice.
std::vector<Criterion> acceptance_criteria();

// Runs everything, writing one line per criterion to `out` as it finishes.
std::vector<CriterionResult> run_acceptance(std::uint64_t seed, std::ostream& out);

std::string format_line(const CriterionResult& result);

}  // namespace anisoflow
