#pragma once

#include <string>
#include <vector>

namespace chdqn {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelfCheckOptions {
  /// Test hook: scales every analytic gradient by (1 + 1e-3) before the
  /// finite-difference comparison, which must then fail.
  bool perturb_gradient = false;
};

/// Fast numerical verification of the core components: polynomial
/// recurrence, quadrature orthogonality, parameter accounting, backprop,
/// environment fixtures and replay buffer behaviour.
std::vector<CheckResult> run_self_checks(const SelfCheckOptions& options = {});

}  // namespace chdqn
