#include "sphg/harmonics.hpp"

#include <algorithm>
#include <limits>

namespace sphg {

int mode_degree(std::size_t k) {
  int l = static_cast<int>((std::sqrt(8.0 * static_cast<double>(k) + 1.0) - 1.0) / 2.0);
  while (mode_index(l + 1, 0) <= k) ++l;
  while (mode_index(l, 0) > k) --l;
  return l;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre_nodes(int n) {
  if (n < 1) throw ConfigError("gauss_legendre_nodes: n must be >= 1");
  Eigen::VectorXd nodes(n);
  Eigen::VectorXd weights(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess for the i-th largest root, then Newton.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) <= 4.0 * std::numeric_limits<double>::epsilon()) break;
    }
    // Refresh the derivative at the converged root.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes(n - 1 - i) = x;
    nodes(i) = -x;
    weights(n - 1 - i) = w;
    weights(i) = w;
  }
  if (n % 2 == 1) nodes(n / 2) = 0.0;
  return {nodes, weights};
}

namespace {

// Fejer's first rule on midpoint colatitudes; exact for polynomials in
// cos(theta) of degree < nlat.
Eigen::VectorXd fejer_weights(const Eigen::VectorXd& theta) {
  const int n = static_cast<int>(theta.size());
  Eigen::VectorXd w(n);
  for (int k = 0; k < n; ++k) {
    double s = 0.0;
    for (int j = 1; j <= n / 2; ++j) {
      s += std::cos(2.0 * j * theta(k)) / (4.0 * j * j - 1.0);
    }
    w(k) = 2.0 / n * (1.0 - 2.0 * s);
  }
  return w;
}

}  // namespace

SphericalGrid build_grid(int nlat, int nlon, GridKind kind) {
  if (nlat < 2) throw ConfigError("build_grid: nlat must be >= 2");
  const int lmax = nlat - 1;
  if (nlon < 2 * lmax + 1) {
    throw ConfigError("build_grid: nlon=" + std::to_string(nlon) +
                      " violates longitudinal Nyquist for lmax=" +
                      std::to_string(lmax) + " (need >= " +
                      std::to_string(2 * lmax + 1) + ")");
  }
  SphericalGrid g;
  g.nlat = nlat;
  g.nlon = nlon;
  g.kind = kind;
  g.lmax = lmax;
  if (kind == GridKind::GaussLegendre) {
    auto [x, w] = gauss_legendre_nodes(nlat);
    g.colatitudes.resize(nlat);
    g.quad_weights.resize(nlat);
    for (int i = 0; i < nlat; ++i) {
      g.colatitudes(i) = std::acos(x(nlat - 1 - i));
      g.quad_weights(i) = w(nlat - 1 - i);
    }
  } else {
    g.colatitudes.resize(nlat);
    for (int i = 0; i < nlat; ++i) {
      g.colatitudes(i) = (i + 0.5) * std::numbers::pi / nlat;
    }
    g.quad_weights = fejer_weights(g.colatitudes);
  }
  return g;
}

const char* to_string(GridKind kind) {
  return kind == GridKind::GaussLegendre ? "gauss" : "equiangular";
}

GridKind grid_kind_from_string(const std::string& name) {
  if (name == "gauss" || name == "gauss-legendre" || name == "GaussLegendre") {
    return GridKind::GaussLegendre;
  }
  if (name == "equiangular" || name == "Equiangular") return GridKind::Equiangular;
  throw ConfigError("unknown grid kind: " + name);
}

}  // namespace sphg
