#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

#include "sphg/transform.hpp"

namespace sphg {

/// m = 0 column h[l][0] of a convolution kernel; the only part of a kernel
/// that survives spherical convolution.
struct ZonalKernel {
  Eigen::VectorXcd coeffs;

  int lmax() const { return static_cast<int>(coeffs.size()) - 1; }

  /// Extracts the m = 0 column of channel `c`.
  static ZonalKernel from_coeffs(const SpectralCoeffs<double>& h, int c = 0) {
    ZonalKernel k;
    k.coeffs.resize(h.lmax + 1);
    for (int l = 0; l <= h.lmax; ++l) k.coeffs(l) = h(l, 0, c);
    return k;
  }
};

/// Fixed spectral multiplier, either per degree s[l] or per mode s[l][m].
struct SpectralSymbol {
  Eigen::VectorXcd per_degree;  // used when per_mode is empty
  Eigen::VectorXcd per_mode;    // triangular, num_modes(lmax) entries

  int lmax() const {
    if (per_mode.size() > 0) return mode_degree(static_cast<std::size_t>(per_mode.size() - 1));
    return static_cast<int>(per_degree.size()) - 1;
  }
  std::complex<double> at(int l, int m) const {
    return per_mode.size() > 0 ? per_mode(mode_index(l, m)) : per_degree(l);
  }

  static SpectralSymbol identity(int lmax) {
    SpectralSymbol s;
    s.per_degree = Eigen::VectorXcd::Ones(lmax + 1);
    return s;
  }
  /// Laplace-Beltrami eigenvalues -l(l+1).
  static SpectralSymbol laplacian(int lmax) {
    SpectralSymbol s;
    s.per_degree.resize(lmax + 1);
    for (int l = 0; l <= lmax; ++l) s.per_degree(l) = -double(l) * (l + 1);
    return s;
  }
  /// Green's symbol of the Laplace-Beltrami operator on mean-free functions:
  /// 0 at l = 0, -1/(l(l+1)) otherwise.
  static SpectralSymbol inverse_laplacian(int lmax) {
    SpectralSymbol s;
    s.per_degree.resize(lmax + 1);
    s.per_degree(0) = 0.0;
    for (int l = 1; l <= lmax; ++l) s.per_degree(l) = -1.0 / (double(l) * (l + 1));
    return s;
  }
};

/// Scalar of the convolution theorem at degree l: 2 pi sqrt(4 pi / (2l + 1)).
inline double convolution_constant(int l) {
  return 2.0 * std::numbers::pi * std::sqrt(4.0 * std::numbers::pi / (2.0 * l + 1.0));
}

/// out[l][m] = 2 pi sqrt(4 pi/(2l+1)) h[l] fc[l][m], for every channel.
template <typename Scalar>
SpectralCoeffs<Scalar> zonal_conv_spectral(const SpectralCoeffs<Scalar>& fc, const ZonalKernel& h) {
  if (h.lmax() < fc.lmax) throw ShapeError("zonal_conv_spectral: kernel lmax too small");
  SpectralCoeffs<Scalar> out(fc.lmax, fc.channels());
  for (int l = 0; l <= fc.lmax; ++l) {
    const std::complex<Scalar> s(static_cast<Scalar>(convolution_constant(l) * h.coeffs(l).real()),
                                 static_cast<Scalar>(convolution_constant(l) * h.coeffs(l).imag()));
    for (int m = 0; m <= l; ++m) out.data.row(mode_index(l, m)) = s * fc.data.row(mode_index(l, m));
  }
  return out;
}

/// out[l][m] = s[l] fc[l][m] (or s[l][m] fc[l][m] in per-mode form).
template <typename Scalar>
SpectralCoeffs<Scalar> greens_apply(const SpectralSymbol& s, const SpectralCoeffs<Scalar>& fc) {
  if (s.lmax() < fc.lmax) throw ShapeError("greens_apply: symbol lmax too small");
  SpectralCoeffs<Scalar> out(fc.lmax, fc.channels());
  for (int l = 0; l <= fc.lmax; ++l) {
    for (int m = 0; m <= l; ++m) {
      const auto v = s.at(l, m);
      const std::complex<Scalar> sv(static_cast<Scalar>(v.real()), static_cast<Scalar>(v.imag()));
      out.data.row(mode_index(l, m)) = sv * fc.data.row(mode_index(l, m));
    }
  }
  return out;
}

/// Euler-angle quadrature resolution for the SO(3) oracle.
struct EulerResolution {
  int alpha = 24;
  int beta = 12;
  int gamma = 24;
};

struct OracleOptions {
  int lmax = 4;              // band limit used to evaluate f and h off-grid
  bool allow_large = false;  // lifts the lmax <= 6 cost guard
  int threads = 1;
};

/// Brute-force spherical convolution
///   (f * h)(w) = int_{SO(3)} f(R n) h(R^-1 w) dR
/// with R = Rz(alpha) Ry(beta) Rz(gamma) and dR = d(alpha) d(cos beta) d(gamma)
/// (total mass 8 pi^2). Trapezoid in alpha and gamma, Gauss in cos(beta).
/// f and h are evaluated off-grid through their band-limited synthesis.
/// `h` may have one channel (shared) or as many channels as `f`.
Field<double> so3_conv_oracle(const Field<double>& f, const Field<double>& h,
                              const EulerResolution& res, const OracleOptions& opts = {});

}  // namespace sphg
