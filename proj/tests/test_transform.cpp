#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "sphg/transform.hpp"

namespace sphg {
namespace {

constexpr double kPi = std::numbers::pi;

SpectralCoeffs<double> random_coeffs(int lmax, int channels, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  SpectralCoeffs<double> c(lmax, channels);
  for (int ch = 0; ch < channels; ++ch) {
    for (int l = 0; l <= lmax; ++l) {
      for (int m = 0; m <= l; ++m) {
        const double re = n01(rng);
        const double im = m == 0 ? 0.0 : n01(rng);
        c(l, m, ch) = {re, im};
      }
    }
  }
  return c;
}

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

double real_inner(const SpectralCoeffs<double>& a, const SpectralCoeffs<double>& b) {
  return (a.data.conjugate().cwiseProduct(b.data)).sum().real();
}

TEST(Sht, ConstantField) {
  auto grid = make_grid(16, 33);
  Field<double> f = Field<double>::from_function(grid, 1, [](int, double, double) { return 1.0; });
  const auto c = sht(f, grid->lmax);
  EXPECT_NEAR(c(0, 0, 0).real(), std::sqrt(4.0 * kPi), 1e-12);
  EXPECT_NEAR(c(0, 0, 0).real(), 3.5449077, 1e-7);
  Eigen::MatrixXcd rest = c.data;
  rest(0, 0) = 0;
  EXPECT_LE(max_abs(rest), 1e-12);
}

TEST(Sht, RealPartOfY32) {
  auto grid = make_grid(16, 33);
  auto f = Field<double>::from_function(
      grid, 1, [](int, double t, double p) { return sph_harm(3, 2, t, p).real(); });
  const auto c = sht(f, grid->lmax);
  EXPECT_NEAR(c(3, 2, 0).real(), 0.5, 1e-12);
  EXPECT_NEAR(c(3, 2, 0).imag(), 0.0, 1e-12);
  Eigen::MatrixXcd rest = c.data;
  rest(mode_index(3, 2), 0) = 0;
  EXPECT_LE(max_abs(rest), 1e-12);
}

TEST(Sht, MatchesDirectSum) {
  auto grid = make_grid(8, 17);
  auto coeffs = random_coeffs(7, 2, 11);
  auto f = isht(coeffs, grid);
  f.values().array() += 0.1 * f.values().array().square();  // not band-limited
  const auto fast = sht(f, 7);
  for (int ch = 0; ch < 2; ++ch) {
    for (int l = 0; l <= 7; ++l) {
      for (int m = 0; m <= l; ++m) {
        std::complex<double> direct = 0;
        for (int i = 0; i < grid->nlat; ++i) {
          for (int j = 0; j < grid->nlon; ++j) {
            direct += f(ch, i, j) *
                      std::conj(sph_harm(l, m, grid->colatitudes(i), grid->longitude(j))) *
                      grid->quad_weights(i) * grid->dphi();
          }
        }
        EXPECT_NEAR(std::abs(fast(l, m, ch) - direct), 0.0, 1e-12);
      }
    }
  }
}

TEST(Sht, RoundTripLmax15) {
  auto grid = make_grid(16, 33);
  const auto c = random_coeffs(15, 3, 5);
  const auto back = sht(isht(c, grid), 15);
  EXPECT_LE(max_abs(back.data - c.data) / max_abs(c.data), 1e-11);
}

TEST(Sht, RoundTripLmax31) {
  auto grid = make_grid(32, 64);
  const auto c = random_coeffs(31, 1, 9);
  const auto back = sht(isht(c, grid), 31);
  EXPECT_LE(max_abs(back.data - c.data), 1e-11);
}

TEST(Sht, ZeroOrderImaginaryPartVanishesForRealFields) {
  auto grid = make_grid(12, 24);
  const auto f = isht(random_coeffs(11, 2, 3), grid);
  const auto c = sht(f, 11);
  for (int l = 0; l <= 11; ++l) {
    for (int ch = 0; ch < 2; ++ch) EXPECT_NEAR(c(l, 0, ch).imag(), 0.0, 1e-12);
  }
}

TEST(Sht, RejectsLmaxBeyondGrid) {
  auto grid = make_grid(8, 17);
  Field<double> f(grid, 1);
  EXPECT_THROW(sht(f, 8), ConfigError);
}

TEST(Sht, Linearity) {
  auto grid = make_grid(12, 24);
  const auto f = isht(random_coeffs(11, 1, 1), grid);
  const auto g = isht(random_coeffs(11, 1, 2), grid);
  const double a = 0.7, b = -1.9;
  const auto lhs = sht(a * f + b * g, 11);
  const Eigen::MatrixXcd rhs = a * sht(f, 11).data + b * sht(g, 11).data;
  EXPECT_LE(max_abs(lhs.data - rhs), 1e-12);
}

TEST(Sht, Parseval) {
  auto grid = make_grid(16, 33);
  const auto c = random_coeffs(15, 2, 17);
  const auto f = isht(c, grid);
  const auto ec = spectral_energy(c);
  const auto ef = field_energy(f);
  for (int ch = 0; ch < 2; ++ch) EXPECT_NEAR(ec(ch), ef(ch), 1e-10 * ef(ch));
}

TEST(Isht, ConstantAndDipole) {
  auto grid = make_grid(12, 24);
  SpectralCoeffs<double> c(3, 1);
  c(0, 0, 0) = std::sqrt(4.0 * kPi);
  const auto one = isht(c, grid);
  EXPECT_LE((one.values().array() - 1.0).abs().maxCoeff(), 1e-12);

  SpectralCoeffs<double> d(3, 1);
  d(1, 0, 0) = 1.0;
  const auto y10 = isht(d, grid);
  for (int i = 0; i < grid->nlat; ++i) {
    for (int j = 0; j < grid->nlon; ++j) {
      EXPECT_NEAR(y10(0, i, j), std::sqrt(3.0 / (4.0 * kPi)) * std::cos(grid->colatitudes(i)),
                  1e-14);
    }
  }
}

TEST(Isht, SynthesisOnTwoGridsAgreesSpectrally) {
  const auto c = random_coeffs(6, 1, 21);
  const auto coarse = isht(c, make_grid(12, 24));
  const auto fine = isht(c, make_grid(32, 64));
  const auto from_coarse = sht(coarse, 6);
  const auto from_fine = sht(fine, 6);
  EXPECT_LE(max_abs(from_coarse.data - from_fine.data), 1e-12);
  EXPECT_LE(max_abs(from_fine.data - c.data), 1e-12);
}

TEST(Isht, MatchesPointEvaluation) {
  auto grid = make_grid(8, 17);
  const auto c = random_coeffs(5, 2, 4);
  const auto f = isht(c, grid);
  for (int ch = 0; ch < 2; ++ch) {
    for (int i = 0; i < grid->nlat; i += 3) {
      for (int j = 0; j < grid->nlon; j += 4) {
        EXPECT_NEAR(f(ch, i, j), evaluate(c, ch, grid->colatitudes(i), grid->longitude(j)), 1e-12);
      }
    }
  }
}

TEST(Adjoint, SynthesisAndAnalysisAdjointsSatisfyInnerProductIdentity) {
  auto grid = make_grid(8, 17);
  ShtPlan<double> plan(grid, 6);
  const auto c = random_coeffs(6, 2, 31);
  // Cotangent fields are arbitrary (not band-limited).
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  Field<double> g(grid, 2);
  for (Eigen::Index k = 0; k < g.values().size(); ++k) g.values().data()[k] = n01(rng);

  const double lhs = (plan.synthesize(c).values().array() * g.values().array()).sum();
  const double rhs = real_inner(c, plan.synthesize_adjoint(g));
  EXPECT_NEAR(lhs, rhs, 1e-11 * std::abs(lhs));

  // Coefficient cotangent may carry an imaginary m = 0 part; the transform
  // never produces one, so only the real part pairs.
  auto cg = random_coeffs(6, 2, 32);
  const double lhs2 = real_inner(plan.analyze(g), cg);
  const double rhs2 = (g.values().array() * plan.analyze_adjoint(cg).values().array()).sum();
  EXPECT_NEAR(lhs2, rhs2, 1e-11 * std::abs(lhs2));
}

TEST(Resample, BandLimitedRoundTrip) {
  auto fine = make_grid(32, 64);
  auto coarse = make_grid(16, 33);
  const auto f = isht(random_coeffs(7, 2, 8), fine);
  const auto back = resample(resample(f, coarse, 7), fine, 7);
  EXPECT_LE((back.values() - f.values()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Resample, ConstantStaysConstant) {
  auto src = make_grid(12, 24);
  auto f = Field<double>::from_function(src, 1, [](int, double, double) { return 1.0; });
  for (auto dst : {make_grid(4, 9), make_grid(32, 64), make_grid(10, 20, GridKind::Equiangular)}) {
    const auto r = resample(f, dst, std::min(3, dst->lmax));
    EXPECT_LE((r.values().array() - 1.0).abs().maxCoeff(), 1e-12);
  }
}

TEST(Resample, WhiteNoiseDownsampleObeysParseval) {
  auto src = make_grid(16, 33);
  auto dst = make_grid(8, 17);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n01;
  Field<double> f(src, 1);
  for (Eigen::Index k = 0; k < f.values().size(); ++k) f.values().data()[k] = n01(rng);
  const auto out = resample(f, dst, 3);
  const auto expected = spectral_energy(truncate(sht(f, src->lmax), 3));
  EXPECT_NEAR(field_energy(out)(0), expected(0), 1e-10 * expected(0));
}

TEST(SphericalIntegral, KnownValues) {
  auto grid = make_grid(12, 24);
  auto one = Field<double>::from_function(grid, 1, [](int, double, double) { return 1.0; });
  EXPECT_NEAR(spherical_integral(one)(0), 4.0 * kPi, 1e-12);
  EXPECT_NEAR(spherical_integral(one)(0), 12.566370, 1e-6);

  auto y10 = Field<double>::from_function(
      grid, 1, [](int, double t, double p) { return sph_harm(1, 0, t, p).real(); });
  EXPECT_NEAR(spherical_integral(y10)(0), 0.0, 1e-13);

  auto noise = random_coeffs(8, 1, 4);
  noise(0, 0, 0) = 2.0 * std::sqrt(4.0 * kPi);
  EXPECT_NEAR(spherical_integral(isht(noise, grid))(0), 8.0 * kPi, 1e-10);
}

TEST(SphericalIntegral, AgreesWithZeroModeAndIsRotationInvariant) {
  auto grid = make_grid(12, 24);
  auto f = isht(random_coeffs(11, 3, 12), grid);
  const auto cf = spherical_integral(f);
  const auto c = sht(f, 11);
  for (int ch = 0; ch < 3; ++ch) {
    EXPECT_NEAR(cf(ch), std::sqrt(4.0 * kPi) * c(0, 0, ch).real(), 1e-12);
    for (int k : {1, 5, 12, 23}) {
      EXPECT_NEAR(spherical_integral(rotate_z(f, k))(ch), cf(ch), 1e-13);
    }
  }
}

TEST(RotateZ, IdentityShifts) {
  auto grid = make_grid(8, 17);
  const auto f = isht(random_coeffs(7, 2, 1), grid);
  EXPECT_EQ(rotate_z(f, 0).values(), f.values());
  EXPECT_EQ(rotate_z(f, grid->nlon).values(), f.values());
  EXPECT_EQ(rotate_z(rotate_z(f, 3), -3).values(), f.values());
}

TEST(RotateZ, ColumnShiftDefinition) {
  auto grid = make_grid(4, 9);
  const auto f = isht(random_coeffs(3, 1, 2), grid);
  const auto r = rotate_z(f, 2);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 9; ++j) EXPECT_EQ(r(0, i, j), f(0, i, (j - 2 + 9) % 9));
  }
}

TEST(RotateZ, SpectralPhaseShift) {
  auto grid = make_grid(12, 24);
  const auto f = isht(random_coeffs(11, 1, 6), grid);
  const auto c = sht(f, 11);
  for (int k : {1, 6, 13}) {
    const auto cr = sht(rotate_z(f, k), 11);
    for (int l = 0; l <= 11; ++l) {
      for (int m = 0; m <= l; ++m) {
        const double a = -m * k * grid->dphi();
        const std::complex<double> phase(std::cos(a), std::sin(a));
        EXPECT_NEAR(std::abs(cr(l, m, 0) - phase * c(l, m, 0)), 0.0, 1e-12);
      }
    }
  }
}

TEST(FloatPrecision, RoundTripInSinglePrecision) {
  auto grid = make_grid(16, 33);
  const auto cd = random_coeffs(15, 1, 3);
  SpectralCoeffs<float> cf(15, 1);
  cf.data = cd.data.cast<std::complex<float>>();
  const auto back = sht(isht(cf, grid), 15);
  EXPECT_LE((back.data - cf.data).cwiseAbs().maxCoeff(), 1e-4f);
}

}  // namespace
}  // namespace sphg
