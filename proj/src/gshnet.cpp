#include "sphg/gshnet.hpp"

#include <random>
#include <string>

#include "sphg/parallel.hpp"

namespace sphg {

namespace {

PointwiseLinear init_pointwise(int out, int in, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  PointwiseLinear p;
  p.weight.resize(out, in);
  const double scale = 1.0 / std::sqrt(double(in));
  for (Eigen::Index j = 0; j < in; ++j) {
    for (Eigen::Index i = 0; i < out; ++i) p.weight(i, j) = scale * n01(rng);
  }
  p.bias = Eigen::VectorXd::Zero(out);
  return p;
}

PointwiseLinear zeros_like(const PointwiseLinear& p) {
  return {Eigen::MatrixXd::Zero(p.weight.rows(), p.weight.cols()),
          Eigen::VectorXd::Zero(p.bias.size())};
}

}  // namespace

GridPtr coarsen_grid(const SphericalGrid& grid) {
  if (grid.nlat % 2 != 0) {
    throw ConfigError("coarsen_grid: nlat=" + std::to_string(grid.nlat) + " is not even");
  }
  return make_grid(grid.nlat / 2, (grid.nlon + 1) / 2, grid.kind);
}

GshNet build_gshnet(const GshNetConfig& cfg, std::uint64_t seed) {
  if (!cfg.full) throw ConfigError("build_gshnet: full-resolution grid required");
  if (cfg.full->nlat % 4 != 0 || cfg.full->nlat < 8) {
    throw ConfigError("build_gshnet: nlat must be a multiple of 4 and at least 8");
  }
  if (cfg.embed < 1 || cfg.c_in < 1 || cfg.c_out < 1) {
    throw ConfigError("build_gshnet: channel counts must be positive");
  }
  GshNet net;
  net.cfg = cfg;
  net.full = cfg.full;
  net.half = coarsen_grid(*net.full);
  net.quarter = coarsen_grid(*net.half);

  const int c = cfg.embed;
  net.encoder = init_pointwise(c, cfg.c_in, mix_seed(seed, 0));
  net.pos = Eigen::MatrixXd::Zero(c, static_cast<Eigen::Index>(net.full->num_points()));

  const LayerFlags flags{cfg.use_correction, cfg.use_mlp};
  struct Spec {
    GridPtr in, out;
    int c_in, c_out;
  };
  const std::array<Spec, 5> specs = {{{net.full, net.half, c, 2 * c},
                                      {net.half, net.quarter, 2 * c, 4 * c},
                                      {net.quarter, net.half, 4 * c, 2 * c},
                                      {net.half, net.full, 2 * c, c},
                                      {net.full, net.full, c, c}}};
  for (int b = 0; b < 5; ++b) {
    LayerConfig lc;
    lc.in_grid = specs[b].in;
    lc.out_grid = specs[b].out;
    lc.c_in = specs[b].c_in;
    lc.c_out = specs[b].c_out;
    lc.mlp_ratio = cfg.mlp_ratio;
    lc.flags = flags;
    GsnoLayer layer = layer_init(lc, mix_seed(seed, 1 + b));
    if (b < 4) {
      net.blocks[b] = std::move(layer);
    } else {
      net.out_block = std::move(layer);
    }
  }
  net.decoder = init_pointwise(cfg.c_out, c + cfg.c_in, mix_seed(seed, 6));
  return net;
}

GshNet GshNet::zeros_like() const {
  GshNet z = *this;
  z.encoder = sphg::zeros_like(encoder);
  z.pos.setZero();
  for (auto& b : z.blocks) b = b.zeros_like();
  z.out_block = out_block.zeros_like();
  z.decoder = sphg::zeros_like(decoder);
  return z;
}

std::vector<TensorView> GshNet::tensors() {
  std::vector<TensorView> v;
  v.push_back({"encoder.weight", as_span(encoder.weight)});
  v.push_back({"encoder.bias", as_span(encoder.bias)});
  if (cfg.pos_enc) v.push_back({"pos", as_span(pos)});
  auto add_layer = [&v](const std::string& prefix, GsnoLayer& layer) {
    for (auto& t : layer.tensors()) v.push_back({prefix + "." + t.name, t.values});
  };
  for (int b = 0; b < 4; ++b) add_layer("block" + std::to_string(b + 1), blocks[b]);
  add_layer("out", out_block);
  v.push_back({"decoder.weight", as_span(decoder.weight)});
  v.push_back({"decoder.bias", as_span(decoder.bias)});
  return v;
}

Field<double> net_forward(const GshNet& net, const Field<double>& x, GradientTape* tape) {
  if (x.channels() != net.cfg.c_in || !(x.grid() == *net.full)) {
    throw ShapeError("net_forward: input does not match (c_in, full grid)");
  }
  const int c = net.cfg.embed;
  Eigen::MatrixXd e = pointwise_forward(net.encoder, x.values(), tape);
  if (net.cfg.pos_enc) e += net.pos;
  const Field<double> h0(net.full, Field<double>::Matrix(std::move(e)));
  const Field<double> h1 = gsno_forward(net.blocks[0], h0, tape);
  const Field<double> h2 = gsno_forward(net.blocks[1], h1, tape);
  const Field<double> h3 = gsno_forward(net.blocks[2], h2, tape) + h1;
  const Field<double> h4 = gsno_forward(net.blocks[3], h3, tape) + h0;
  const Field<double> h5 = gsno_forward(net.out_block, h4, tape);

  Eigen::MatrixXd cat(c + net.cfg.c_in, h5.values().cols());
  cat.topRows(c) = h5.values();
  cat.bottomRows(net.cfg.c_in) = x.values();
  Eigen::MatrixXd y = pointwise_forward(net.decoder, cat, tape);
  return Field<double>(net.full, Field<double>::Matrix(std::move(y)));
}

Field<double> net_backward(const GshNet& net, const Field<double>& grad_out, GradientTape& tape,
                           GshNet& grads) {
  if (grad_out.channels() != net.cfg.c_out || !(grad_out.grid() == *net.full)) {
    throw ShapeError("net_backward: gradient does not match network output");
  }
  const int c = net.cfg.embed;
  const Eigen::MatrixXd gcat =
      pointwise_backward(net.decoder, grad_out.values(), tape, grads.decoder);
  Field<double> gx(net.full, Field<double>::Matrix(gcat.bottomRows(net.cfg.c_in)));
  const Field<double> gh5(net.full, Field<double>::Matrix(gcat.topRows(c)));

  const Field<double> gh4 = gsno_backward(net.out_block, gh5, tape, grads.out_block);
  const Field<double> gh3 = gsno_backward(net.blocks[3], gh4, tape, grads.blocks[3]);
  Field<double> gh0 = gh4;
  const Field<double> gh2 = gsno_backward(net.blocks[2], gh3, tape, grads.blocks[2]);
  Field<double> gh1 = gh3;
  gh1 += gsno_backward(net.blocks[1], gh2, tape, grads.blocks[1]);
  gh0 += gsno_backward(net.blocks[0], gh1, tape, grads.blocks[0]);

  if (net.cfg.pos_enc) grads.pos += gh0.values();
  gx.values() += pointwise_backward(net.encoder, gh0.values(), tape, grads.encoder);
  return gx;
}

}  // namespace sphg
