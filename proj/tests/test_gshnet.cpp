#include <gtest/gtest.h>

#include <random>

#include "sphg/gshnet.hpp"
#include "sphg/tasks.hpp"
#include "support/gradcheck.hpp"

using namespace sphg;

namespace {

Field<double> noise_field(const GridPtr& g, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Field<double> f(g, channels);
  for (Eigen::Index k = 0; k < f.values().size(); ++k) f.values().data()[k] = n01(rng);
  return f;
}

GshNetConfig small_config(int embed = 4) {
  GshNetConfig cfg;
  cfg.c_in = 2;
  cfg.c_out = 1;
  cfg.embed = embed;
  cfg.full = make_grid(8, 17);
  return cfg;
}

void randomize(GshNet& net, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  for (auto& t : net.tensors()) {
    for (double& v : t.values) v = scale * n01(rng);
  }
}

std::size_t layer_params(int lmax, int ci, int co, double ratio) {
  const std::size_t hidden = static_cast<std::size_t>(std::lround(ratio * co));
  const std::size_t modes = num_modes(lmax);
  return 2 * (lmax + 1) * co * ci   // G1, complex
         + 2 * modes * ci           // G2, complex
         + hidden * co + hidden     // mlp.w1, mlp.b1
         + co * hidden + co         // mlp.w2, mlp.b2
         + co * ci;                 // skip
}

}  // namespace

TEST(GshNet, LevelGridsAndWidths) {
  GshNetConfig cfg;
  cfg.embed = 8;
  cfg.full = make_grid(16, 33);
  const GshNet net = build_gshnet(cfg, 1);
  EXPECT_EQ(net.half->nlat, 8);
  EXPECT_EQ(net.half->nlon, 17);
  EXPECT_EQ(net.quarter->nlat, 4);
  EXPECT_EQ(net.quarter->nlon, 9);
  const int widths[5] = {8, 16, 32, 16, 8};
  for (int b = 0; b < 4; ++b) {
    EXPECT_EQ(net.blocks[b].c_in, widths[b]);
    EXPECT_EQ(net.blocks[b].c_out, widths[b + 1]);
  }
  EXPECT_EQ(net.out_block.c_in, 8);
  EXPECT_EQ(net.out_block.c_out, 8);
  EXPECT_EQ(*net.blocks[0].out_grid, *net.half);
  EXPECT_EQ(*net.blocks[1].out_grid, *net.quarter);
  EXPECT_EQ(*net.blocks[2].out_grid, *net.half);
  EXPECT_EQ(*net.blocks[3].out_grid, *net.full);
  EXPECT_EQ(net.blocks[1].lmax, 3);
}

TEST(GshNet, RejectsIndivisibleGrids) {
  GshNetConfig cfg = small_config();
  cfg.full = make_grid(10, 21);
  EXPECT_THROW(build_gshnet(cfg, 1), ConfigError);
  cfg.full = make_grid(4, 9);
  EXPECT_THROW(build_gshnet(cfg, 1), ConfigError);
}

TEST(GshNet, ParameterCountFollowsTheFormula) {
  GshNetConfig cfg;
  cfg.c_in = 3;
  cfg.c_out = 3;
  cfg.embed = 8;
  cfg.mlp_ratio = 2.0;
  cfg.full = make_grid(16, 33);
  const GshNet net = build_gshnet(cfg, 1);
  const int C = cfg.embed;
  const int lf = 15, lh = 7, lq = 3;
  const std::size_t expected = (C * cfg.c_in + C)                // encoder
                               + C * 16 * 33                     // pos
                               + layer_params(lh, C, 2 * C, 2)    // full -> half
                               + layer_params(lq, 2 * C, 4 * C, 2)
                               + layer_params(lq, 4 * C, 2 * C, 2)
                               + layer_params(lh, 2 * C, C, 2)
                               + layer_params(lf, C, C, 2)
                               + cfg.c_out * (C + cfg.c_in) + cfg.c_out;  // decoder
  EXPECT_EQ(parameter_count(net), expected);
  cfg.pos_enc = false;
  EXPECT_EQ(parameter_count(build_gshnet(cfg, 1)), expected - C * 16 * 33);
}

TEST(GshNet, DeterministicBuildAndForward) {
  const auto cfg = small_config();
  const GshNet a = build_gshnet(cfg, 9);
  const GshNet b = build_gshnet(cfg, 9);
  EXPECT_EQ(pack(a), pack(b));
  const auto x = noise_field(cfg.full, 2, 3);
  EXPECT_EQ(net_forward(a, x).values(), net_forward(b, x).values());
  EXPECT_NE(pack(a), pack(build_gshnet(cfg, 10)));
}

TEST(GshNet, ZeroPosMakesPosFlagIrrelevantAtInit) {
  auto cfg = small_config();
  const GshNet with_pos = build_gshnet(cfg, 4);
  cfg.pos_enc = false;
  const GshNet without = build_gshnet(cfg, 4);
  const auto x = noise_field(cfg.full, 2, 5);
  EXPECT_EQ(net_forward(with_pos, x).values(), net_forward(without, x).values());
}

TEST(GshNet, ZeroDecoderGivesZeroOutput) {
  const auto cfg = small_config();
  GshNet net = build_gshnet(cfg, 4);
  net.decoder.weight.setZero();
  net.decoder.bias.setZero();
  EXPECT_EQ(net_forward(net, noise_field(cfg.full, 2, 1)).values().cwiseAbs().maxCoeff(), 0.0);
}

TEST(GshNet, IdentityBlocksRoundTripBandLimitedFields) {
  // Down-down-up-up with G1 = identity embeddings and no MLP is lossless for
  // fields within the quarter grid's band limit.
  auto cfg = small_config(1);
  cfg.full = make_grid(16, 33);
  cfg.use_correction = false;
  cfg.use_mlp = false;
  GshNet net = build_gshnet(cfg, 2);
  for (auto& b : net.blocks) {
    for (auto& m : b.g1) m = Eigen::MatrixXcd::Identity(b.c_out, b.c_in);
  }
  const int lq = net.quarter->lmax;
  Field<double> x = random_bandlimited(net.full, lq, 1, 0.0, 17);
  Field<double> h = x;
  for (auto& b : net.blocks) h = gsno_forward(b, h);
  EXPECT_LE((h.values() - x.values()).cwiseAbs().maxCoeff(), 1e-10);

  // Applying the chain twice changes nothing further.
  Field<double> rough = noise_field(net.full, 1, 3);
  Field<double> p1 = rough, p2;
  for (auto& b : net.blocks) p1 = gsno_forward(b, p1);
  p2 = p1;
  for (auto& b : net.blocks) p2 = gsno_forward(b, p2);
  EXPECT_LE((p2.values() - p1.values()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GshNet, ConcatAdjointSplitsByChannelRange) {
  const auto cfg = small_config();
  GshNet net = build_gshnet(cfg, 4);
  // With zero embedding-path decoder columns, the input gradient is exactly
  // decoder.weight(:, C:)^T * grad_out.
  net.decoder.weight.leftCols(cfg.embed).setZero();
  const auto x = noise_field(cfg.full, 2, 1);
  GradientTape tape;
  const auto y = net_forward(net, x, &tape);
  GshNet grads = net.zeros_like();
  const auto go = noise_field(cfg.full, 1, 2);
  const auto gx = net_backward(net, go, tape, grads);
  const Eigen::MatrixXd expected = net.decoder.weight.rightCols(cfg.c_in).transpose() * go.values();
  EXPECT_LE((gx.values() - expected).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_TRUE(tape.empty());
}

TEST(GshNet, GradientsMatchFiniteDifferences) {
  const auto cfg = small_config(4);
  GshNet net = build_gshnet(cfg, 3);
  randomize(net, 7);
  const auto x = noise_field(cfg.full, cfg.c_in, 8);
  const auto w = noise_field(cfg.full, cfg.c_out, 9);
  auto loss = [&](const GshNet& n) {
    const auto y = net_forward(n, x);
    return w.values().cwiseProduct(y.values()).sum() + 0.25 * y.values().squaredNorm();
  };
  GradientTape tape;
  const auto y = net_forward(net, x, &tape);
  GshNet grads = net.zeros_like();
  net_backward(net, w + 0.5 * y, tape, grads);

  auto loss_of_params = [&](const Eigen::VectorXd& p) {
    GshNet tmp = net;
    unpack(tmp, p);
    return loss(tmp);
  };
  const auto r = check::grad_check(loss_of_params, pack(net), pack(grads));
  EXPECT_LE(r.worst_rel, 1e-6) << "worst index " << r.worst_index;
}
