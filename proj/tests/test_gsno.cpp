#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sphg/gsno.hpp"
#include "sphg/tasks.hpp"
#include "support/gradcheck.hpp"

using namespace sphg;

namespace {

const double kPi = std::numbers::pi;

Field<double> random_field(const GridPtr& g, int channels, std::uint64_t seed, int lmax = -1) {
  return random_bandlimited(g, lmax < 0 ? g->lmax : lmax, channels, 0.5, seed);
}

Field<double> noise_field(const GridPtr& g, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Field<double> f(g, channels);
  for (Eigen::Index k = 0; k < f.values().size(); ++k) f.values().data()[k] = n01(rng);
  return f;
}

void randomize(GsnoLayer& layer, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  for (auto& t : layer.tensors()) {
    for (double& v : t.values) v = scale * n01(rng);
  }
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

void set_identity_g1(GsnoLayer& layer) {
  for (auto& m : layer.g1) m = Eigen::MatrixXcd::Identity(layer.c_out, layer.c_in);
}

// Direct evaluation of the spectral core straight from its definition.
Field<double> core_oracle(const GsnoLayer& layer, const Field<double>& f, bool correction) {
  const auto fc = sht(f, layer.lmax);
  const Eigen::VectorXd cf = spherical_integral(f);
  SpectralCoeffs<double> out(layer.lmax, layer.c_out);
  for (int l = 0; l <= layer.lmax; ++l) {
    for (int m = 0; m <= l; ++m) {
      for (int co = 0; co < layer.c_out; ++co) {
        std::complex<double> acc = 0.0;
        for (int ci = 0; ci < layer.c_in; ++ci) {
          std::complex<double> a = fc(l, m, ci);
          if (correction) a += cf(ci) * layer.g2(mode_index(l, m), ci);
          acc += layer.g1[l](co, ci) * a;
        }
        out(l, m, co) = acc;
      }
    }
  }
  return isht(out, layer.out_grid);
}

}  // namespace

TEST(GsnoLayer, InitIsDeterministicAndStartsFromZeroCorrection) {
  auto g = make_grid(8, 17);
  const GsnoLayer a = layer_init(g, 7, 2, 3, 2.0, 42);
  const GsnoLayer b = layer_init(g, 7, 2, 3, 2.0, 42);
  EXPECT_EQ(pack(a), pack(b));
  EXPECT_EQ(a.g2.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(a.hidden, 6);
  EXPECT_EQ(a.g2.rows(), static_cast<Eigen::Index>(num_modes(7)));
  const GsnoLayer c = layer_init(g, 7, 2, 3, 2.0, 43);
  EXPECT_NE(pack(a), pack(c));
}

TEST(GsnoLayer, FreshGsnoEqualsSfno) {
  auto g = make_grid(8, 17);
  const GsnoLayer layer = layer_init(g, 7, 2, 2, 2.0, 5);
  const auto f = random_field(g, 2, 1);
  EXPECT_LE(max_abs(gsno_forward(layer, f).values() - sfno_forward(layer, f).values()), 1e-14);
}

TEST(GsnoLayer, CoreMatchesDirectDefinition) {
  auto g = make_grid(8, 17);
  GsnoLayer layer = layer_init(g, 7, 2, 3, 2.0, 9, {true, false});
  randomize(layer, 3);
  const auto f = noise_field(g, 2, 4);
  EXPECT_LE(max_abs(gsno_forward(layer, f).values() - core_oracle(layer, f, true).values()), 1e-12);
  EXPECT_LE(max_abs(sfno_forward(layer, f).values() - core_oracle(layer, f, false).values()), 1e-12);
}

TEST(GsnoLayer, IdentityG1ProjectsOntoBandLimit) {
  auto g = make_grid(12, 25);
  GsnoLayer layer = layer_init(g, 11, 1, 1, 2.0, 1, {false, false});
  set_identity_g1(layer);
  const auto f = random_field(g, 1, 8);
  EXPECT_LE(max_abs(gsno_forward(layer, f).values() - f.values()), 1e-12);
}

TEST(GsnoLayer, ConstantInputWithSingleCorrectionWeight) {
  // lmax = 0: fc = sqrt(4 pi), C_f = 4 pi, output = (sqrt(4 pi) + 4 pi beta) Y00
  // = 1 + sqrt(4 pi) beta.
  auto g = make_grid(4, 9);
  GsnoLayer layer = layer_init(g, 0, 1, 1, 2.0, 1, {true, false});
  set_identity_g1(layer);
  const double beta = 0.37;
  layer.g2(0, 0) = beta;
  Field<double> one(g, 1);
  one.values().setOnes();
  const auto out = gsno_forward(layer, one);
  const double expected = 1.0 + std::sqrt(4.0 * kPi) * beta;
  EXPECT_LE((out.values().array() - expected).abs().maxCoeff(), 1e-13);
}

TEST(GsnoLayer, CoreIsLinear) {
  auto g = make_grid(8, 17);
  GsnoLayer layer = layer_init(g, 7, 2, 2, 2.0, 2, {true, false});
  randomize(layer, 11);
  const auto f = noise_field(g, 2, 12);
  const double alpha = -2.75;
  const auto lhs = gsno_forward(layer, alpha * f);
  const auto rhs = alpha * gsno_forward(layer, f);
  EXPECT_LE(max_abs(lhs.values() - rhs.values()), 1e-12);
}

TEST(GsnoLayer, ZeroG1GivesZeroCore) {
  auto g = make_grid(8, 17);
  GsnoLayer layer = layer_init(g, 7, 2, 2, 2.0, 2, {true, false});
  randomize(layer, 11);
  for (auto& m : layer.g1) m.setZero();
  EXPECT_EQ(max_abs(gsno_forward(layer, noise_field(g, 2, 1)).values()), 0.0);
}

TEST(GsnoLayer, PoissonSymbolSolvesPoisson) {
  auto g = make_grid(16, 32);
  GsnoLayer layer = layer_init(g, 15, 1, 1, 2.0, 1, {false, false});
  layer.g1[0].setZero();
  for (int l = 1; l <= 15; ++l) layer.g1[l](0, 0) = -1.0 / (l * (l + 1.0));
  const auto [x, y] = poisson_pair(random_field(g, 1, 3));
  EXPECT_LE(max_abs(sfno_forward(layer, x).values() - y.values()), 1e-12);
}

TEST(GsnoLayer, SfnoCommutesWithZRotations) {
  auto g = make_grid(8, 17);
  for (bool mlp : {false, true}) {
    GsnoLayer layer = layer_init(g, 7, 2, 2, 2.0, 6, {true, mlp});
    randomize(layer, 7);
    const auto f = noise_field(g, 2, 8);
    for (int k : {1, 4, 8, 16}) {
      const auto a = sfno_forward(layer, rotate_z(f, k));
      const auto b = rotate_z(sfno_forward(layer, f), k);
      EXPECT_LE(max_abs(a.values() - b.values()), 1e-11) << "k=" << k << " mlp=" << mlp;
    }
  }
}

TEST(GsnoLayer, EquivarianceDefectIsTheCorrectionDecomposition) {
  auto g = make_grid(8, 16);
  GsnoLayer layer = layer_init(g, 7, 2, 3, 2.0, 6, {true, false});
  randomize(layer, 21);
  const auto f = noise_field(g, 2, 22);
  const Eigen::VectorXd cf = spherical_integral(f);
  // b_ci = isht(G1 * G2[:, ci]) built channel by channel.
  std::vector<Field<double>> b;
  for (int ci = 0; ci < layer.c_in; ++ci) {
    SpectralCoeffs<double> bc(layer.lmax, layer.c_out);
    for (int l = 0; l <= layer.lmax; ++l) {
      for (int m = 0; m <= l; ++m) {
        for (int co = 0; co < layer.c_out; ++co) {
          bc(l, m, co) = layer.g1[l](co, ci) * layer.g2(mode_index(l, m), ci);
        }
      }
    }
    b.push_back(isht(bc, g));
  }
  for (int k : {1, 4, 8}) {
    const auto defect = gsno_forward(layer, rotate_z(f, k)) - rotate_z(gsno_forward(layer, f), k);
    Field<double> expected(g, layer.c_out);
    for (int ci = 0; ci < layer.c_in; ++ci) expected += cf(ci) * (b[ci] - rotate_z(b[ci], k));
    EXPECT_LE(max_abs(defect.values() - expected.values()), 1e-10) << "k=" << k;
    EXPECT_GT(max_abs(defect.values()), 1e-3);
  }
}

TEST(GsnoLayer, CorrectionContributionIsRotationInvariant) {
  auto g = make_grid(8, 16);
  GsnoLayer layer = layer_init(g, 7, 2, 2, 2.0, 6, {true, false});
  randomize(layer, 31);
  const auto f = noise_field(g, 2, 32);
  auto correction = [&](const Field<double>& x) { return gsno_forward(layer, x) - sfno_forward(layer, x); };
  for (int k : {3, 8}) {
    EXPECT_LE(max_abs(correction(rotate_z(f, k)).values() - correction(f).values()), 1e-12);
  }
}

TEST(GsnoLayer, MeanFreeInputsGiveNoCorrectionGradient) {
  auto g = make_grid(8, 17);
  GsnoLayer layer = layer_init(g, 7, 2, 2, 2.0, 6, {true, false});
  randomize(layer, 41);
  const auto f = random_bandlimited(g, 7, 2, 0.0, 5, true);
  GradientTape tape;
  const auto y = gsno_forward(layer, f, &tape);
  const auto grads = gsno_backward(layer, noise_field(g, 2, 6), tape);
  EXPECT_LE(grads.params.g2.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(tape.empty());
}

TEST(GsnoLayer, BackwardOfLinearCoreIsTheAdjoint) {
  // Gram matrices <A e_i, A e_j> built from forward and from adjoint-of-forward
  // agree and are symmetric.
  auto g = make_grid(4, 9);
  GsnoLayer layer = layer_init(g, 3, 1, 1, 2.0, 6, {true, false});
  randomize(layer, 51);
  const int n = g->num_points();
  Eigen::MatrixXd A(n, n), AtA(n, n);
  for (int i = 0; i < n; ++i) {
    Field<double> e(g, 1);
    e.values()(0, i) = 1.0;
    A.col(i) = gsno_forward(layer, e).values().row(0).transpose();
  }
  for (int i = 0; i < n; ++i) {
    Field<double> e(g, 1);
    e.values()(0, i) = 1.0;
    GradientTape tape;
    const auto y = gsno_forward(layer, e, &tape);
    AtA.col(i) = gsno_backward(layer, y, tape).input.values().row(0).transpose();
  }
  const Eigen::MatrixXd gram = A.transpose() * A;
  EXPECT_LE((AtA - gram).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((AtA - AtA.transpose()).cwiseAbs().maxCoeff(), 1e-10);
}

namespace {

// L = sum(w * y) + 0.25 * sum(y^2), dL/dy = w + 0.5 y.
struct ProbeLoss {
  Field<double> w;
  double value(const Field<double>& y) const {
    return (w.values().cwiseProduct(y.values())).sum() + 0.25 * y.values().squaredNorm();
  }
  Field<double> grad(const Field<double>& y) const { return w + 0.5 * y; }
};

void check_layer_gradients(const GsnoLayer& proto, const Field<double>& f, double tol) {
  ProbeLoss probe{noise_field(proto.out_grid, proto.c_out, 77)};
  GsnoLayer layer = proto;
  GradientTape tape;
  const auto y = gsno_forward(layer, f, &tape);
  const auto grads = gsno_backward(layer, probe.grad(y), tape);

  const Eigen::VectorXd theta = pack(layer);
  auto loss_of_params = [&](const Eigen::VectorXd& p) {
    GsnoLayer tmp = layer;
    unpack(tmp, p);
    return probe.value(gsno_forward(tmp, f));
  };
  const auto r = check::grad_check(loss_of_params, theta, pack(grads.params));
  EXPECT_LE(r.worst_rel, tol) << "worst parameter index " << r.worst_index;

  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(f.values().data(), f.values().size());
  auto loss_of_input = [&](const Eigen::VectorXd& v) {
    Field<double> ff(f.grid_ptr(), f.channels());
    ff.values() = Eigen::Map<const Field<double>::Matrix>(v.data(), f.channels(), f.grid().num_points());
    return probe.value(gsno_forward(layer, ff));
  };
  const Eigen::VectorXd gin =
      Eigen::Map<const Eigen::VectorXd>(grads.input.values().data(), grads.input.values().size());
  const auto ri = check::grad_check(loss_of_input, x, gin);
  EXPECT_LE(ri.worst_rel, tol) << "worst input index " << ri.worst_index;
}

}  // namespace

TEST(GsnoGradients, SameGridLayerMatchesFiniteDifferences) {
  auto g = make_grid(8, 17);
  GsnoLayer layer = layer_init(g, 7, 2, 2, 2.0, 3);
  randomize(layer, 61);
  check_layer_gradients(layer, noise_field(g, 2, 62), 1e-6);
}

TEST(GsnoGradients, CoreOnlyLayerMatchesFiniteDifferences) {
  auto g = make_grid(8, 17);
  GsnoLayer layer = layer_init(g, 7, 2, 3, 2.0, 3, {true, false});
  randomize(layer, 63);
  check_layer_gradients(layer, noise_field(g, 2, 64), 1e-6);
}

TEST(GsnoGradients, ResamplingLayerMatchesFiniteDifferences) {
  LayerConfig cfg;
  cfg.in_grid = make_grid(8, 17);
  cfg.out_grid = make_grid(4, 9);
  cfg.c_in = 2;
  cfg.c_out = 3;
  GsnoLayer layer = layer_init(cfg, 4);
  randomize(layer, 65);
  check_layer_gradients(layer, noise_field(cfg.in_grid, 2, 66), 1e-6);
}

TEST(GsnoGradients, TapeMismatchIsAStateError) {
  auto g = make_grid(8, 17);
  const GsnoLayer a = layer_init(g, 7, 1, 1, 2.0, 1);
  const GsnoLayer b = layer_init(g, 7, 1, 1, 2.0, 2);
  GradientTape tape;
  const auto y = gsno_forward(a, noise_field(g, 1, 1), &tape);
  EXPECT_THROW(gsno_backward(b, y, tape), StateError);
  GradientTape empty;
  EXPECT_THROW(gsno_backward(a, y, empty), StateError);
}

TEST(GsnoLayer, RejectsChannelMismatch) {
  auto g = make_grid(8, 17);
  const GsnoLayer a = layer_init(g, 7, 2, 1, 2.0, 1);
  EXPECT_THROW(gsno_forward(a, noise_field(g, 1, 1)), ShapeError);
  EXPECT_THROW(gsno_forward(a, noise_field(make_grid(4, 9), 2, 1)), ShapeError);
}

TEST(Gelu, DerivativeMatchesFiniteDifferences) {
  for (double x : {-3.0, -0.7, 0.0, 0.4, 2.5}) {
    const double h = 1e-6;
    const double fd = (gelu(x + h) - gelu(x - h)) / (2 * h);
    EXPECT_NEAR(gelu_derivative(x), fd, 1e-9);
  }
  EXPECT_NEAR(gelu(1.0), 0.8413447460685429, 1e-15);
}
