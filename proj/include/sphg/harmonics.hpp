#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sphg {

/// Raised when a grid or transform is asked for something it cannot represent
/// (Nyquist violations, degrees beyond the grid's capability, bad sizes).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a basis function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Shape or channel-count mismatch between operands.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class GridKind : std::uint8_t { GaussLegendre = 0, Equiangular = 1 };

/// Number of (l, m >= 0) pairs with l <= lmax.
constexpr std::size_t num_modes(int lmax) {
  return static_cast<std::size_t>(lmax + 1) * static_cast<std::size_t>(lmax + 2) / 2;
}

/// Row of mode (l, m), m >= 0, in triangular storage.
constexpr std::size_t mode_index(int l, int m) {
  return static_cast<std::size_t>(l) * static_cast<std::size_t>(l + 1) / 2 +
         static_cast<std::size_t>(m);
}

/// Degree of the mode stored at row `k` of triangular storage.
int mode_degree(std::size_t k);

/// Sampling of S^2: rings of constant colatitude, each with `nlon` uniformly
/// spaced longitudes starting at phi = 0. Quadrature weights are the latitude
/// weights in d(cos theta); the longitude factor 2*pi/nlon is applied by users.
struct SphericalGrid {
  int nlat = 0;
  int nlon = 0;
  GridKind kind = GridKind::GaussLegendre;
  int lmax = 0;
  Eigen::VectorXd colatitudes;
  Eigen::VectorXd quad_weights;

  std::size_t num_points() const {
    return static_cast<std::size_t>(nlat) * static_cast<std::size_t>(nlon);
  }
  double longitude(int j) const { return 2.0 * std::numbers::pi * j / nlon; }
  double dphi() const { return 2.0 * std::numbers::pi / nlon; }

  bool operator==(const SphericalGrid& other) const {
    return nlat == other.nlat && nlon == other.nlon && kind == other.kind &&
           lmax == other.lmax;
  }
};

/// Gauss-Legendre nodes (ascending) and weights on [-1, 1].
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre_nodes(int n);

/// Builds a grid. Gauss grids have colatitudes arccos of the Legendre roots,
/// north pole first; equiangular grids use midpoint rings with Fejer weights.
SphericalGrid build_grid(int nlat, int nlon, GridKind kind);

const char* to_string(GridKind kind);
GridKind grid_kind_from_string(const std::string& name);

/// Fully normalized associated Legendre values at one abscissa, so that
/// Y_l^m(theta, phi) = value(l, m) * exp(i m phi) for m >= 0. The
/// Condon-Shortley phase is included.
template <typename Scalar = double>
struct LegendreTable {
  int lmax = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;

  Scalar operator()(int l, int m) const { return values(mode_index(l, m)); }
};

/// Diagonal P_m^m by running product, then upward three-term recurrence in l.
template <typename Scalar = double>
LegendreTable<Scalar> assoc_legendre(int lmax, Scalar x) {
  using std::abs;
  using std::sqrt;
  if (lmax < 0) throw DomainError("assoc_legendre: lmax must be non-negative");
  if (!(abs(x) <= Scalar(1))) throw DomainError("assoc_legendre: |x| > 1");

  LegendreTable<Scalar> table;
  table.lmax = lmax;
  table.values.setZero(static_cast<Eigen::Index>(num_modes(lmax)));
  auto& p = table.values;

  const Scalar sin_theta = sqrt((Scalar(1) - x) * (Scalar(1) + x));
  Scalar diag = Scalar(1) / sqrt(Scalar(4) * std::numbers::pi_v<Scalar>);
  for (int m = 0; m <= lmax; ++m) {
    if (m > 0) {
      diag *= -sqrt(Scalar(2 * m + 1) / Scalar(2 * m)) * sin_theta;
    }
    p(mode_index(m, m)) = diag;
    if (m + 1 <= lmax) {
      p(mode_index(m + 1, m)) = sqrt(Scalar(2 * m + 3)) * x * diag;
    }
    for (int l = m + 2; l <= lmax; ++l) {
      const Scalar ll = Scalar(l) * Scalar(l);
      const Scalar mm = Scalar(m) * Scalar(m);
      const Scalar lm1 = Scalar(l - 1) * Scalar(l - 1);
      const Scalar a = sqrt((Scalar(4) * ll - Scalar(1)) / (ll - mm));
      const Scalar b = sqrt((lm1 - mm) / (Scalar(4) * lm1 - Scalar(1)));
      p(mode_index(l, m)) =
          a * (x * p(mode_index(l - 1, m)) - b * p(mode_index(l - 2, m)));
    }
  }
  return table;
}

/// Orthonormal complex spherical harmonic Y_l^m(theta, phi), any |m| <= l.
template <typename Scalar = double>
std::complex<Scalar> sph_harm(int l, int m, Scalar theta, Scalar phi) {
  if (l < 0 || m > l || -m > l) {
    throw DomainError("sph_harm: require 0 <= l and |m| <= l");
  }
  const int am = m < 0 ? -m : m;
  const Scalar p = assoc_legendre<Scalar>(l, std::cos(theta))(l, am);
  const Scalar angle = static_cast<Scalar>(am) * phi;
  const std::complex<Scalar> y(p * std::cos(angle), p * std::sin(angle));
  if (m >= 0) return y;
  return (am % 2 == 0 ? Scalar(1) : Scalar(-1)) * std::conj(y);
}

}  // namespace sphg
