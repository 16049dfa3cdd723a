#ifndef WHEELPRED_SELFTEST_HPP
#define WHEELPRED_SELFTEST_HPP

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace wheelpred {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelftestOptions {
  /// Applied to every analytic LML gradient before it is compared with finite
  /// differences. Lets tests inject a fault.
  std::function<void(Eigen::VectorXd&)> gradient_hook;
};

/// Embedded numerical checks, in a fixed order.
std::vector<CheckResult> run_selftest(const SelftestOptions& options = {});

}  // namespace wheelpred

#endif  // WHEELPRED_SELFTEST_HPP
