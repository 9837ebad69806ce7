#include "sphg/spherical_conv.hpp"

#include <algorithm>
#include <vector>

#include "sphg/parallel.hpp"

namespace sphg {

namespace {

Eigen::Vector3d direction(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

std::pair<double, double> angles(const Eigen::Vector3d& v) {
  const double z = std::clamp(v.z() / v.norm(), -1.0, 1.0);
  return {std::acos(z), std::atan2(v.y(), v.x())};
}

Eigen::Matrix3d rot_z(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}
Eigen::Matrix3d rot_y(double b) {
  return Eigen::AngleAxisd(b, Eigen::Vector3d::UnitY()).toRotationMatrix();
}

}  // namespace

Field<double> so3_conv_oracle(const Field<double>& f, const Field<double>& h,
                              const EulerResolution& res, const OracleOptions& opts) {
  if (opts.lmax > 6 && !opts.allow_large) {
    throw ConfigError("so3_conv_oracle: lmax > 6 refused (set allow_large to override)");
  }
  if (!(f.grid() == h.grid())) throw ShapeError("so3_conv_oracle: f and h on different grids");
  if (h.channels() != 1 && h.channels() != f.channels()) {
    throw ShapeError("so3_conv_oracle: h must have 1 channel or match f");
  }
  if (res.alpha < 1 || res.beta < 1 || res.gamma < 1) {
    throw ConfigError("so3_conv_oracle: Euler resolution must be positive");
  }
  const int lmax = opts.lmax;
  const auto fc = sht(f, lmax);
  const auto hc = sht(h, lmax);
  const int channels = f.channels();
  const auto& grid = f.grid();

  const double two_pi = 2.0 * std::numbers::pi;
  const double w_alpha = two_pi / res.alpha;
  const double w_gamma = two_pi / res.gamma;
  const auto [cos_beta, w_beta] = gauss_legendre_nodes(res.beta);

  // f(R n) depends on (alpha, beta) only.
  const int nab = res.alpha * res.beta;
  Eigen::MatrixXd f_at(nab, channels);
  std::vector<Eigen::Matrix3d> inv_ab(nab);
  for (int a = 0; a < res.alpha; ++a) {
    const double alpha = w_alpha * a;
    for (int b = 0; b < res.beta; ++b) {
      const double beta = std::acos(cos_beta(b));
      const int idx = a * res.beta + b;
      const Eigen::Matrix3d rab = rot_z(alpha) * rot_y(beta);
      const auto [t, p] = angles(rab * Eigen::Vector3d::UnitZ());
      for (int c = 0; c < channels; ++c) f_at(idx, c) = evaluate(fc, c, t, p);
      inv_ab[idx] = rab.transpose();
    }
  }

  Field<double> out(f.grid_ptr(), channels);
  const std::size_t npts = grid.num_points();
  parallel_for(npts, opts.threads, [&](std::size_t pt) {
    const int i = static_cast<int>(pt) / grid.nlon;
    const int j = static_cast<int>(pt) % grid.nlon;
    const Eigen::Vector3d w = direction(grid.colatitudes(i), grid.longitude(j));
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(channels);
    std::vector<std::complex<double>> partial(lmax + 1);
    for (int idx = 0; idx < nab; ++idx) {
      // R^-1 w = Rz(-gamma) [ (Rz(alpha) Ry(beta))^T w ]; the gamma factor only
      // shifts longitude, so the Legendre sums are shared across gamma.
      const auto [tq, pq] = angles(inv_ab[idx] * w);
      const auto leg = assoc_legendre<double>(lmax, std::cos(tq));
      const double wab = w_alpha * w_beta(idx % res.beta);
      for (int c = 0; c < channels; ++c) {
        const int hch = h.channels() == 1 ? 0 : c;
        for (int m = 0; m <= lmax; ++m) {
          std::complex<double> s = 0;
          for (int l = m; l <= lmax; ++l) s += hc(l, m, hch) * leg(l, m);
          partial[m] = s;
        }
        double hsum = 0.0;
        for (int g = 0; g < res.gamma; ++g) {
          const double phi = pq - w_gamma * g;
          double v = partial[0].real();
          for (int m = 1; m <= lmax; ++m) {
            v += 2.0 * (partial[m] * std::complex<double>(std::cos(m * phi), std::sin(m * phi))).real();
          }
          hsum += w_gamma * v;
        }
        acc(c) += wab * f_at(idx, c) * hsum;
      }
    }
    for (int c = 0; c < channels; ++c) out(c, i, j) = acc(c);
  });
  return out;
}

}  // namespace sphg
