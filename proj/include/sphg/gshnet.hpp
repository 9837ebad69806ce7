#pragma once

#include <array>
#include <cstdint>

#include "sphg/gsno.hpp"

namespace sphg {

struct GshNetConfig {
  int c_in = 1;
  int c_out = 1;
  int embed = 8;
  double mlp_ratio = 2.0;
  GridPtr full;
  bool pos_enc = true;
  bool use_correction = true;  // false builds the same network from SFNO blocks
  bool use_mlp = true;
};

/// Coarser grid of the multi-scale hierarchy: half the rings, ceil(nlon/2)
/// longitudes, same grid kind.
GridPtr coarsen_grid(const SphericalGrid& grid);

/// Depth-2 multi-scale network of GSNO blocks:
///   h0 = encoder(x) + pos
///   h1 = block1(h0)            full -> half,    C  -> 2C
///   h2 = block2(h1)            half -> quarter, 2C -> 4C
///   h3 = block3(h2) + h1       quarter -> half, 4C -> 2C
///   h4 = block4(h3) + h0       half -> full,    2C -> C
///   h5 = out_block(h4)         full -> full,    C  -> C
///   y  = decoder([h5; x])
struct GshNet {
  GshNetConfig cfg;
  GridPtr full;
  GridPtr half;
  GridPtr quarter;

  PointwiseLinear encoder;  // C x c_in
  Eigen::MatrixXd pos;      // C x full points
  std::array<GsnoLayer, 4> blocks;
  GsnoLayer out_block;
  PointwiseLinear decoder;  // c_out x (C + c_in)

  GshNet zeros_like() const;
  std::vector<TensorView> tensors();
};

GshNet build_gshnet(const GshNetConfig& cfg, std::uint64_t seed);

Field<double> net_forward(const GshNet& net, const Field<double>& x, GradientTape* tape = nullptr);

/// Accumulates parameter gradients into `grads`; returns the input gradient.
Field<double> net_backward(const GshNet& net, const Field<double>& grad_out, GradientTape& tape,
                           GshNet& grads);

}  // namespace sphg
