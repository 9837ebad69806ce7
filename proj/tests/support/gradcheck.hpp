#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include <Eigen/Dense>

namespace sphg::check {

struct GradCheckResult {
  double worst_rel = 0.0;  // max |an - fd| / max(|fd|, |an|, floor)
  Eigen::Index worst_index = -1;
  Eigen::VectorXd fd;
};

// Central differences of `loss` at `x`. Entries whose derivatives are tiny
// compared with the largest one are measured against `floor_frac * max|fd|`,
// which keeps round-off in near-zero entries from dominating the ratio.
inline GradCheckResult grad_check(const std::function<double(const Eigen::VectorXd&)>& loss,
                                  const Eigen::VectorXd& x, const Eigen::VectorXd& analytic,
                                  double h = 1e-5, double floor_frac = 1e-3) {
  GradCheckResult r;
  r.fd.resize(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    const double up = loss(xp);
    xp(i) = x(i) - h;
    const double down = loss(xp);
    xp(i) = x(i);
    r.fd(i) = (up - down) / (2.0 * h);
  }
  const double floor = floor_frac * std::max(r.fd.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double denom = std::max({std::abs(r.fd(i)), std::abs(analytic(i)), floor});
    const double rel = std::abs(analytic(i) - r.fd(i)) / denom;
    if (rel > r.worst_rel) {
      r.worst_rel = rel;
      r.worst_index = i;
    }
  }
  return r;
}

}  // namespace sphg::check
