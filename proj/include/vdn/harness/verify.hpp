#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace vdn::harness {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  std::filesystem::path maps_dir;
  // Adds 1 to one analytic gradient before comparing, to show the gradient
  // suite detects errors.
  bool inject_gradient_fault = false;
};

// gradient, argmax, invariance, lambda, env
const std::vector<std::string>& suite_names();

// Throws ConfigError for an unknown suite name.
SuiteResult run_suite(const std::string& name, const VerifyOptions& options);

}  // namespace vdn::harness
