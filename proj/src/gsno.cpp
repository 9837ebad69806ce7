#include "sphg/gsno.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace sphg {

namespace {

Eigen::Index degree_offset(int l) { return static_cast<Eigen::Index>(mode_index(l, 0)); }

void check_input(const GsnoLayer& layer, const Field<double>& f) {
  if (f.channels() != layer.c_in) {
    throw ShapeError("gsno: expected " + std::to_string(layer.c_in) + " input channels, got " +
                     std::to_string(f.channels()));
  }
  if (!(f.grid() == *layer.in_grid)) throw ShapeError("gsno: input is on the wrong grid");
}

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                         double scale) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * n01(rng);
  }
  return m;
}

// spec[k, :] = G1(l) * a[k, :]^T for every mode k of degree l.
SpectralCoeffs<double> contract(const GsnoLayer& layer, const SpectralCoeffs<double>& a) {
  SpectralCoeffs<double> out(layer.lmax, layer.c_out);
  for (int l = 0; l <= layer.lmax; ++l) {
    out.data.middleRows(degree_offset(l), l + 1).noalias() =
        a.data.middleRows(degree_offset(l), l + 1) * layer.g1[l].transpose();
  }
  return out;
}

Field<double> forward_impl(const GsnoLayer& layer, const Field<double>& f, bool correction,
                           GradientTape* tape) {
  check_input(layer, f);
  LayerRecord rec;
  rec.owner = &layer;
  rec.correction = correction;
  rec.input_coeffs = layer.analysis->analyze(f);
  rec.mixed = rec.input_coeffs;
  if (correction) {
    rec.integral = spherical_integral(f);
    rec.mixed.data += layer.g2 * rec.integral.asDiagonal();
  }
  rec.core = layer.synthesis->synthesize(contract(layer, rec.mixed));
  if (!layer.flags.use_mlp) {
    Field<double> out = rec.core;
    if (tape) {
      rec.input = f;
      tape->push(std::move(rec));
    }
    return out;
  }

  rec.pre_activation = layer.mlp_w1 * rec.core.values();
  rec.pre_activation.colwise() += layer.mlp_b1;
  rec.activation = rec.pre_activation.unaryExpr(&gelu);
  Eigen::MatrixXd y = layer.mlp_w2 * rec.activation;
  y.colwise() += layer.mlp_b2;
  if (layer.same_grid()) {
    y.noalias() += layer.skip * f.values();
  } else {
    SpectralCoeffs<double> skip_coeffs(layer.lmax, layer.c_out);
    skip_coeffs.data = rec.input_coeffs.data * layer.skip.transpose();
    y += layer.synthesis->synthesize(skip_coeffs).values();
  }
  Field<double> out(layer.out_grid, Field<double>::Matrix(std::move(y)));
  if (tape) {
    rec.input = f;
    tape->push(std::move(rec));
  }
  return out;
}

}  // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

GsnoLayer GsnoLayer::zeros_like() const {
  GsnoLayer z = *this;
  for (auto& m : z.g1) m.setZero();
  z.g2.setZero();
  z.mlp_w1.setZero();
  z.mlp_b1.setZero();
  z.mlp_w2.setZero();
  z.mlp_b2.setZero();
  z.skip.setZero();
  return z;
}

std::vector<TensorView> GsnoLayer::tensors() {
  std::vector<TensorView> v;
  for (int l = 0; l <= lmax; ++l) v.push_back({"g1." + std::to_string(l), as_span(g1[l])});
  v.push_back({"g2", as_span(g2)});
  v.push_back({"mlp.w1", as_span(mlp_w1)});
  v.push_back({"mlp.b1", as_span(mlp_b1)});
  v.push_back({"mlp.w2", as_span(mlp_w2)});
  v.push_back({"mlp.b2", as_span(mlp_b2)});
  v.push_back({"skip", as_span(skip)});
  return v;
}

LayerRecord GradientTape::pop_layer(const GsnoLayer& owner) {
  if (entries_.empty()) throw StateError("GradientTape: empty tape");
  auto* rec = std::get_if<LayerRecord>(&entries_.back());
  if (!rec || rec->owner != &owner) {
    throw StateError("GradientTape: last record does not belong to this layer");
  }
  LayerRecord out = std::move(*rec);
  entries_.pop_back();
  return out;
}

PointwiseRecord GradientTape::pop_pointwise(const PointwiseLinear& owner) {
  if (entries_.empty()) throw StateError("GradientTape: empty tape");
  auto* rec = std::get_if<PointwiseRecord>(&entries_.back());
  if (!rec || rec->owner != &owner) {
    throw StateError("GradientTape: last record does not belong to this map");
  }
  PointwiseRecord out = std::move(*rec);
  entries_.pop_back();
  return out;
}

GsnoLayer layer_init(const LayerConfig& cfg, std::uint64_t seed) {
  if (!cfg.in_grid) throw ConfigError("layer_init: input grid required");
  if (cfg.c_in < 1 || cfg.c_out < 1 || cfg.mlp_ratio <= 0.0) {
    throw ConfigError("layer_init: dimensions must be positive");
  }
  GsnoLayer layer;
  layer.in_grid = cfg.in_grid;
  layer.out_grid = cfg.out_grid ? cfg.out_grid : cfg.in_grid;
  const int cap = std::min(layer.in_grid->lmax, layer.out_grid->lmax);
  layer.lmax = cfg.lmax < 0 ? cap : cfg.lmax;
  if (layer.lmax > cap) throw ConfigError("layer_init: lmax exceeds grid capability");
  layer.c_in = cfg.c_in;
  layer.c_out = cfg.c_out;
  layer.hidden = std::max(1, static_cast<int>(std::lround(cfg.mlp_ratio * cfg.c_out)));
  layer.flags = cfg.flags;
  layer.analysis = std::make_shared<const ShtPlan<double>>(layer.in_grid, layer.lmax);
  layer.synthesis = std::make_shared<const ShtPlan<double>>(layer.out_grid, layer.lmax);

  std::mt19937_64 rng(seed);
  const double g1_scale = 1.0 / std::sqrt(2.0 * cfg.c_in);
  layer.g1.resize(layer.lmax + 1);
  for (auto& m : layer.g1) {
    const Eigen::MatrixXd re = gaussian(rng, cfg.c_out, cfg.c_in, g1_scale);
    const Eigen::MatrixXd im = gaussian(rng, cfg.c_out, cfg.c_in, g1_scale);
    m = re.cast<std::complex<double>>() + std::complex<double>(0, 1) * im.cast<std::complex<double>>();
  }
  layer.g2 = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(num_modes(layer.lmax)), cfg.c_in);
  layer.mlp_w1 = gaussian(rng, layer.hidden, cfg.c_out, 1.0 / std::sqrt(double(cfg.c_out)));
  layer.mlp_b1 = Eigen::VectorXd::Zero(layer.hidden);
  layer.mlp_w2 = gaussian(rng, cfg.c_out, layer.hidden, 1.0 / std::sqrt(double(layer.hidden)));
  layer.mlp_b2 = Eigen::VectorXd::Zero(cfg.c_out);
  layer.skip = gaussian(rng, cfg.c_out, cfg.c_in, 1.0 / std::sqrt(double(cfg.c_in)));
  return layer;
}

GsnoLayer layer_init(GridPtr grid, int lmax, int c_in, int c_out, double mlp_ratio,
                     std::uint64_t seed, LayerFlags flags) {
  LayerConfig cfg;
  cfg.in_grid = std::move(grid);
  cfg.lmax = lmax;
  cfg.c_in = c_in;
  cfg.c_out = c_out;
  cfg.mlp_ratio = mlp_ratio;
  cfg.flags = flags;
  return layer_init(cfg, seed);
}

Field<double> gsno_forward(const GsnoLayer& layer, const Field<double>& f, GradientTape* tape) {
  return forward_impl(layer, f, layer.flags.use_correction, tape);
}

Field<double> sfno_forward(const GsnoLayer& layer, const Field<double>& f, GradientTape* tape) {
  return forward_impl(layer, f, false, tape);
}

Field<double> gsno_backward(const GsnoLayer& layer, const Field<double>& grad_out,
                            GradientTape& tape, GsnoLayer& grads) {
  if (grad_out.channels() != layer.c_out || !(grad_out.grid() == *layer.out_grid)) {
    throw ShapeError("gsno_backward: gradient shape does not match layer output");
  }
  LayerRecord rec = tape.pop_layer(layer);
  const Field<double>& f = rec.input;

  Field<double> grad_in(layer.in_grid, layer.c_in);
  SpectralCoeffs<double> grad_coeffs(layer.lmax, layer.c_in);
  Field<double> grad_core(layer.out_grid, layer.c_out);

  if (layer.flags.use_mlp) {
    const Eigen::MatrixXd& gy = grad_out.values();
    grads.mlp_w2.noalias() += gy * rec.activation.transpose();
    grads.mlp_b2 += gy.rowwise().sum();
    Eigen::MatrixXd gz = layer.mlp_w2.transpose() * gy;
    gz.array() *= rec.pre_activation.unaryExpr(&gelu_derivative).array();
    grads.mlp_w1.noalias() += gz * rec.core.values().transpose();
    grads.mlp_b1 += gz.rowwise().sum();
    grad_core.values().noalias() = layer.mlp_w1.transpose() * gz;

    if (layer.same_grid()) {
      grads.skip.noalias() += gy * f.values().transpose();
      grad_in.values().noalias() += layer.skip.transpose() * gy;
    } else {
      const auto gs = layer.synthesis->synthesize_adjoint(grad_out);
      grads.skip += (gs.data.transpose() * rec.input_coeffs.data.conjugate()).real();
      grad_coeffs.data += gs.data * layer.skip.cast<std::complex<double>>();
    }
  } else {
    grad_core.values() = grad_out.values();
  }

  const auto grad_spec = layer.synthesis->synthesize_adjoint(grad_core);
  SpectralCoeffs<double> grad_mixed(layer.lmax, layer.c_in);
  for (int l = 0; l <= layer.lmax; ++l) {
    const auto gs = grad_spec.data.middleRows(degree_offset(l), l + 1);
    const auto a = rec.mixed.data.middleRows(degree_offset(l), l + 1);
    grads.g1[l].noalias() += gs.transpose() * a.conjugate();
    grad_mixed.data.middleRows(degree_offset(l), l + 1).noalias() = gs * layer.g1[l].conjugate();
  }
  grad_coeffs.data += grad_mixed.data;

  grad_in.values() += layer.analysis->analyze_adjoint(grad_coeffs).values();
  if (rec.correction) {
    grads.g2 += grad_mixed.data * rec.integral.asDiagonal();
    const Eigen::VectorXd grad_integral =
        (layer.g2.conjugate().cwiseProduct(grad_mixed.data)).colwise().sum().real().transpose();
    const Eigen::VectorXd w = point_weights(*layer.in_grid);
    grad_in.values().noalias() += grad_integral * w.transpose();
  }
  return grad_in;
}

LayerGradients gsno_backward(const GsnoLayer& layer, const Field<double>& grad_out,
                             GradientTape& tape) {
  LayerGradients out{Field<double>(), layer.zeros_like()};
  out.input = gsno_backward(layer, grad_out, tape, out.params);
  return out;
}

Eigen::MatrixXd pointwise_forward(const PointwiseLinear& map, const Eigen::MatrixXd& x,
                                  GradientTape* tape) {
  if (x.rows() != map.weight.cols()) throw ShapeError("pointwise: channel mismatch");
  if (tape) tape->push(PointwiseRecord{&map, x});
  return map.apply(x);
}

Eigen::MatrixXd pointwise_backward(const PointwiseLinear& map, const Eigen::MatrixXd& grad_out,
                                   GradientTape& tape, PointwiseLinear& grads) {
  const PointwiseRecord rec = tape.pop_pointwise(map);
  grads.weight.noalias() += grad_out * rec.input.transpose();
  grads.bias += grad_out.rowwise().sum();
  return map.weight.transpose() * grad_out;
}

}  // namespace sphg
