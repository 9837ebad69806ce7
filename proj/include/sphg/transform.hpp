#pragma once

#include <complex>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "sphg/harmonics.hpp"

namespace sphg {

using GridPtr = std::shared_ptr<const SphericalGrid>;

inline GridPtr make_grid(int nlat, int nlon, GridKind kind = GridKind::GaussLegendre) {
  return std::make_shared<const SphericalGrid>(build_grid(nlat, nlon, kind));
}

/// Real multi-channel samples on a grid. Stored as a row-major
/// (channels x nlat*nlon) matrix; each row is one channel in ring-major order.
template <typename Scalar = double>
class Field {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using ChannelMap = Eigen::Map<Matrix>;
  using ConstChannelMap = Eigen::Map<const Matrix>;

  Field() = default;
  Field(GridPtr grid, int channels) : grid_(std::move(grid)) {
    values_.setZero(channels, static_cast<Eigen::Index>(grid_->num_points()));
  }
  Field(GridPtr grid, Matrix values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.cols() != static_cast<Eigen::Index>(grid_->num_points())) {
      throw ShapeError("Field: value matrix does not match grid size");
    }
  }

  template <typename Fn>
  static Field from_function(GridPtr grid, int channels, Fn&& fn) {
    Field f(grid, channels);
    for (int c = 0; c < channels; ++c) {
      for (int i = 0; i < grid->nlat; ++i) {
        for (int j = 0; j < grid->nlon; ++j) {
          f(c, i, j) = static_cast<Scalar>(fn(c, grid->colatitudes(i), grid->longitude(j)));
        }
      }
    }
    return f;
  }

  const SphericalGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int channels() const { return static_cast<int>(values_.rows()); }
  int nlat() const { return grid_->nlat; }
  int nlon() const { return grid_->nlon; }

  Matrix& values() { return values_; }
  const Matrix& values() const { return values_; }

  Scalar& operator()(int c, int i, int j) { return values_(c, i * grid_->nlon + j); }
  Scalar operator()(int c, int i, int j) const { return values_(c, i * grid_->nlon + j); }

  /// Channel `c` viewed as an nlat x nlon matrix.
  ChannelMap channel(int c) {
    return ChannelMap(values_.row(c).data(), grid_->nlat, grid_->nlon);
  }
  ConstChannelMap channel(int c) const {
    return ConstChannelMap(values_.row(c).data(), grid_->nlat, grid_->nlon);
  }

  bool all_finite() const { return values_.allFinite(); }

  Field& operator+=(const Field& other) {
    check_same_shape(other);
    values_ += other.values_;
    return *this;
  }
  Field& operator-=(const Field& other) {
    check_same_shape(other);
    values_ -= other.values_;
    return *this;
  }
  Field& operator*=(Scalar s) {
    values_ *= s;
    return *this;
  }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Scalar s, Field a) { return a *= s; }

  void check_same_shape(const Field& other) const {
    if (!(*grid_ == *other.grid_) || channels() != other.channels()) {
      throw ShapeError("Field: shape mismatch");
    }
  }

 private:
  GridPtr grid_;
  Matrix values_;
};

/// Triangular complex coefficients c[l][m], 0 <= m <= l <= lmax, per channel.
/// Negative orders are implied by c[l][-m] = (-1)^m conj(c[l][m]).
template <typename Scalar = double>
struct SpectralCoeffs {
  using Complex = std::complex<Scalar>;
  using Matrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

  int lmax = 0;
  Matrix data;  // rows: modes, cols: channels

  SpectralCoeffs() = default;
  SpectralCoeffs(int lmax_, int channels) : lmax(lmax_) {
    data.setZero(static_cast<Eigen::Index>(num_modes(lmax_)), channels);
  }

  int channels() const { return static_cast<int>(data.cols()); }
  Complex& operator()(int l, int m, int c) { return data(mode_index(l, m), c); }
  Complex operator()(int l, int m, int c) const { return data(mode_index(l, m), c); }
};

/// Precomputed Legendre and longitude tables for one (grid, lmax) pair.
/// Provides the forward/inverse transforms and their exact adjoints.
template <typename Scalar = double>
class ShtPlan {
 public:
  using Real = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowReal = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using FieldT = Field<Scalar>;
  using CoeffsT = SpectralCoeffs<Scalar>;

  ShtPlan(GridPtr grid, int lmax) : grid_(std::move(grid)), lmax_(lmax) {
    if (lmax < 0 || lmax > grid_->lmax) {
      throw ConfigError("ShtPlan: lmax=" + std::to_string(lmax) +
                        " exceeds grid capability " + std::to_string(grid_->lmax));
    }
    const int nlat = grid_->nlat;
    const int nlon = grid_->nlon;
    legendre_.resize(lmax + 1);
    weighted_.resize(lmax + 1);
    for (int m = 0; m <= lmax; ++m) {
      legendre_[m].resize(lmax - m + 1, nlat);
      weighted_[m].resize(lmax - m + 1, nlat);
    }
    const double dphi = grid_->dphi();
    for (int i = 0; i < nlat; ++i) {
      const auto table = assoc_legendre<double>(lmax, std::cos(grid_->colatitudes(i)));
      const double q = grid_->quad_weights(i) * dphi;
      for (int m = 0; m <= lmax; ++m) {
        for (int l = m; l <= lmax; ++l) {
          legendre_[m](l - m, i) = static_cast<Scalar>(table(l, m));
          weighted_[m](l - m, i) = static_cast<Scalar>(table(l, m) * q);
        }
      }
    }
    cos_.resize(nlon, lmax + 1);
    sin_.resize(nlon, lmax + 1);
    for (int j = 0; j < nlon; ++j) {
      for (int m = 0; m <= lmax; ++m) {
        // Reduce m*j modulo nlon before scaling so the phase is exact.
        const long long r = (static_cast<long long>(m) * j) % nlon;
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(r) / nlon;
        cos_(j, m) = static_cast<Scalar>(std::cos(angle));
        sin_(j, m) = static_cast<Scalar>(std::sin(angle));
      }
    }
  }

  const SphericalGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int lmax() const { return lmax_; }

  /// Forward transform: quadrature projection onto conj(Y_l^m).
  CoeffsT analyze(const FieldT& f) const {
    check_grid(f);
    return project(f.values(), weighted_, false);
  }

  /// Inverse transform of the conjugate-symmetric completion; real output.
  /// Coefficients with smaller lmax are zero-padded.
  FieldT synthesize(const CoeffsT& c) const { return expand(c, legendre_, true); }

  /// Adjoint of `synthesize` (maps a field cotangent to a coefficient cotangent).
  CoeffsT synthesize_adjoint(const FieldT& grad) const {
    check_grid(grad);
    return project(grad.values(), legendre_, true);
  }

  /// Adjoint of `analyze` (maps a coefficient cotangent to a field cotangent).
  FieldT analyze_adjoint(const CoeffsT& grad) const { return expand(grad, weighted_, false); }

 private:
  void check_grid(const FieldT& f) const {
    if (!(f.grid() == *grid_)) throw ShapeError("ShtPlan: field is on a different grid");
  }

  CoeffsT project(const typename FieldT::Matrix& values, const std::vector<Real>& leg,
                  bool double_orders) const {
    const int channels = static_cast<int>(values.rows());
    const int nlat = grid_->nlat;
    const int nlon = grid_->nlon;
    Eigen::Map<const RowReal> rings(values.data(), static_cast<Eigen::Index>(channels) * nlat,
                                    nlon);
    const RowReal re = rings * cos_;
    const RowReal im = -(rings * sin_);

    CoeffsT out(lmax_, channels);
    Real fr(nlat, channels);
    Real fi(nlat, channels);
    for (int m = 0; m <= lmax_; ++m) {
      for (int c = 0; c < channels; ++c) {
        fr.col(c) = re.col(m).segment(static_cast<Eigen::Index>(c) * nlat, nlat);
        fi.col(c) = im.col(m).segment(static_cast<Eigen::Index>(c) * nlat, nlat);
      }
      const Scalar scale = (double_orders && m > 0) ? Scalar(2) : Scalar(1);
      const Real cr = scale * (leg[m] * fr);
      const Real ci = scale * (leg[m] * fi);
      for (int l = m; l <= lmax_; ++l) {
        for (int c = 0; c < channels; ++c) {
          out.data(mode_index(l, m), c) = {cr(l - m, c), ci(l - m, c)};
        }
      }
    }
    return out;
  }

  FieldT expand(const CoeffsT& c, const std::vector<Real>& leg, bool double_orders) const {
    if (c.lmax > lmax_) {
      throw ConfigError("ShtPlan: coefficient lmax " + std::to_string(c.lmax) +
                        " exceeds plan lmax " + std::to_string(lmax_));
    }
    const int channels = c.channels();
    const int nlat = grid_->nlat;
    const int nlon = grid_->nlon;
    const int lmax = c.lmax;
    RowReal a = RowReal::Zero(static_cast<Eigen::Index>(channels) * nlat, lmax_ + 1);
    RowReal b = RowReal::Zero(static_cast<Eigen::Index>(channels) * nlat, lmax_ + 1);
    Real cr(0, channels);
    Real ci(0, channels);
    for (int m = 0; m <= lmax; ++m) {
      cr.resize(lmax - m + 1, channels);
      ci.resize(lmax - m + 1, channels);
      for (int l = m; l <= lmax; ++l) {
        for (int ch = 0; ch < channels; ++ch) {
          const auto v = c.data(mode_index(l, m), ch);
          cr(l - m, ch) = v.real();
          ci(l - m, ch) = v.imag();
        }
      }
      const auto p = leg[m].topRows(lmax - m + 1);
      const Scalar scale = (double_orders && m > 0) ? Scalar(2) : Scalar(1);
      const Real gr = scale * (p.transpose() * cr);
      const Real gi = scale * (p.transpose() * ci);
      for (int ch = 0; ch < channels; ++ch) {
        a.col(m).segment(static_cast<Eigen::Index>(ch) * nlat, nlat) = gr.col(ch);
        b.col(m).segment(static_cast<Eigen::Index>(ch) * nlat, nlat) = gi.col(ch);
      }
    }
    typename FieldT::Matrix values(channels, static_cast<Eigen::Index>(nlat) * nlon);
    Eigen::Map<RowReal> rings(values.data(), static_cast<Eigen::Index>(channels) * nlat, nlon);
    rings.noalias() = a * cos_.transpose();
    rings.noalias() -= b * sin_.transpose();
    return FieldT(grid_, std::move(values));
  }

  GridPtr grid_;
  int lmax_;
  std::vector<Real> legendre_;
  std::vector<Real> weighted_;
  Real cos_;
  Real sin_;
};

template <typename Scalar>
SpectralCoeffs<Scalar> sht(const Field<Scalar>& f, int lmax) {
  return ShtPlan<Scalar>(f.grid_ptr(), lmax).analyze(f);
}

template <typename Scalar>
Field<Scalar> isht(const SpectralCoeffs<Scalar>& c, const GridPtr& grid) {
  return ShtPlan<Scalar>(grid, c.lmax).synthesize(c);
}

/// Keeps degrees l <= lmax_keep (triangular storage is ordered by degree).
template <typename Scalar>
SpectralCoeffs<Scalar> truncate(const SpectralCoeffs<Scalar>& c, int lmax_keep) {
  if (lmax_keep > c.lmax) throw ConfigError("truncate: lmax_keep exceeds coefficient lmax");
  SpectralCoeffs<Scalar> out;
  out.lmax = lmax_keep;
  out.data = c.data.topRows(static_cast<Eigen::Index>(num_modes(lmax_keep)));
  return out;
}

/// Spectral resampling: analysis at the source grid's full degree, truncation,
/// synthesis on `dst`. No spatial interpolation.
template <typename Scalar>
Field<Scalar> resample(const Field<Scalar>& f, const GridPtr& dst, int lmax_keep) {
  if (lmax_keep > f.grid().lmax || lmax_keep > dst->lmax) {
    throw ConfigError("resample: lmax_keep exceeds source or destination capability");
  }
  return isht(truncate(sht(f, f.grid().lmax), lmax_keep), dst);
}

/// Integral over S^2 of each channel (quadrature sum).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> spherical_integral(const Field<Scalar>& f) {
  const auto& g = f.grid();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> ring_w(g.num_points());
  for (int i = 0; i < g.nlat; ++i) {
    ring_w.segment(static_cast<Eigen::Index>(i) * g.nlon, g.nlon)
        .setConstant(static_cast<Scalar>(g.quad_weights(i) * g.dphi()));
  }
  return f.values() * ring_w;
}

/// Per-point quadrature weights w_i * 2pi/nlon, flattened ring-major.
inline Eigen::VectorXd point_weights(const SphericalGrid& g) {
  Eigen::VectorXd w(g.num_points());
  for (int i = 0; i < g.nlat; ++i) {
    w.segment(static_cast<Eigen::Index>(i) * g.nlon, g.nlon)
        .setConstant(g.quad_weights(i) * g.dphi());
  }
  return w;
}

/// Rotation about the polar axis by k longitude steps (cyclic column shift).
template <typename Scalar>
Field<Scalar> rotate_z(const Field<Scalar>& f, int k) {
  const int nlon = f.nlon();
  const int shift = ((k % nlon) + nlon) % nlon;
  Field<Scalar> out(f.grid_ptr(), f.channels());
  if (shift == 0) {
    out.values() = f.values();
    return out;
  }
  for (int c = 0; c < f.channels(); ++c) {
    auto src = f.channel(c);
    auto dst = out.channel(c);
    dst.rightCols(nlon - shift) = src.leftCols(nlon - shift);
    dst.leftCols(shift) = src.rightCols(shift);
  }
  return out;
}

/// Point evaluation of the band-limited synthesis of channel `c` at (theta, phi).
template <typename Scalar>
Scalar evaluate(const SpectralCoeffs<Scalar>& coeffs, int c, Scalar theta, Scalar phi) {
  const auto p = assoc_legendre<Scalar>(coeffs.lmax, std::cos(theta));
  Scalar sum = 0;
  for (int m = 0; m <= coeffs.lmax; ++m) {
    std::complex<Scalar> acc = 0;
    for (int l = m; l <= coeffs.lmax; ++l) acc += coeffs(l, m, c) * p(l, m);
    const std::complex<Scalar> e(std::cos(m * phi), std::sin(m * phi));
    sum += (m == 0 ? Scalar(1) : Scalar(2)) * (acc * e).real();
  }
  return sum;
}

/// Sum over all orders -l..l of |c|^2, per channel (equals the L2 norm of the
/// synthesized real field by Parseval).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> spectral_energy(const SpectralCoeffs<Scalar>& c) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(c.channels());
  for (int l = 0; l <= c.lmax; ++l) {
    for (int m = 0; m <= l; ++m) {
      const Scalar w = m == 0 ? Scalar(1) : Scalar(2);
      for (int ch = 0; ch < c.channels(); ++ch) e(ch) += w * std::norm(c(l, m, ch));
    }
  }
  return e;
}

/// Quadrature integral of f^2 per channel.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> field_energy(const Field<Scalar>& f) {
  Field<Scalar> sq(f.grid_ptr(), f.values().array().square().matrix());
  return spherical_integral(sq);
}

}  // namespace sphg
