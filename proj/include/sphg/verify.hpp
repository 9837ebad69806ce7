#pragma once

#include <string>
#include <vector>

namespace sphg {

struct CheckResult {
  std::string module;
  std::string name;
  double value = 0.0;      // measured defect
  double tolerance = 0.0;  // pass iff value <= tolerance
  bool pass = false;
  double seconds = 0.0;
};

struct VerifyOptions {
  int lmax = 15;  // transform-level checks run on a Gauss (lmax+1) x 2(lmax+1) grid
  int threads = 1;
};

/// Runs the property suite of every module. Checks that throw are reported as
/// failures with value = +inf.
std::vector<CheckResult> run_verification(const VerifyOptions& opts);

}  // namespace sphg
