#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace prodrm::verify {

struct CriterionResult {
  std::string id;  // "A1" .. "A10"
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string details;
  double runtime_seconds = 0.0;
  std::string error;  // set when the criterion threw
};

struct VerifyOptions {
  std::uint64_t seed = 20240611;
  int threads = 1;
  // keyed by criterion id or name; replaces that criterion's threshold
  std::map<std::string, double> tolerance_overrides;
  // Monte Carlo replica counts are multiplied by this (1 = stated scale)
  double replica_scale = 1.0;
};

struct Criterion {
  std::string id;
  std::string name;
  std::string summary;
  std::function<CriterionResult(const VerifyOptions&)> run;
};

const std::vector<Criterion>& registry();

// Finds a criterion by id ("A3", case-insensitive) or name ("duality").
const Criterion* find(const std::string& key);

// Runs the selected criteria (all when `only` is empty) in registry order.
// Exceptions inside a criterion become a failed result.
std::vector<CriterionResult> run(const VerifyOptions& opt, const std::vector<std::string>& only = {});

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace prodrm::verify
