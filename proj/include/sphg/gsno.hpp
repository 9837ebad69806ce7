#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sphg/parameters.hpp"
#include "sphg/transform.hpp"

namespace sphg {

/// Backward pass called with a tape that does not hold the matching record.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct LayerFlags {
  bool use_correction = true;  // C_f-modulated G2 term
  bool use_mlp = true;         // MLP on the spectral output plus the skip path
};

struct LayerConfig {
  GridPtr in_grid;
  GridPtr out_grid;  // defaults to in_grid
  int lmax = -1;     // defaults to min(in_grid->lmax, out_grid->lmax)
  int c_in = 1;
  int c_out = 1;
  double mlp_ratio = 2.0;
  LayerFlags flags;
};

/// y = W x + b applied independently at every grid point.
struct PointwiseLinear {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd y = weight * x;
    y.colwise() += bias;
    return y;
  }
};

/// Spectral operator layer
///   g = ISHT[ G1(l) (SHT[f](l,m) + C_f G2(l,m)) ]
/// followed, when enabled, by y = MLP(g) + skip(f).
///
/// G1(l) is a complex c_out x c_in matrix per degree, shared by all orders.
/// G2 holds one complex weight per (l, m) and input channel. The skip path is
/// pointwise when the layer keeps its grid, and spectrally resampled otherwise.
struct GsnoLayer {
  int lmax = 0;
  int c_in = 0;
  int c_out = 0;
  int hidden = 0;
  LayerFlags flags;
  GridPtr in_grid;
  GridPtr out_grid;

  std::vector<Eigen::MatrixXcd> g1;  // [lmax+1] of (c_out x c_in)
  Eigen::MatrixXcd g2;               // (num_modes x c_in)
  Eigen::MatrixXd mlp_w1;            // (hidden x c_out)
  Eigen::VectorXd mlp_b1;
  Eigen::MatrixXd mlp_w2;            // (c_out x hidden)
  Eigen::VectorXd mlp_b2;
  Eigen::MatrixXd skip;              // (c_out x c_in)

  std::shared_ptr<const ShtPlan<double>> analysis;   // in_grid, lmax
  std::shared_ptr<const ShtPlan<double>> synthesis;  // out_grid, lmax

  bool same_grid() const { return *in_grid == *out_grid; }

  /// Same shapes and plans, every parameter zero. Used as a gradient buffer.
  GsnoLayer zeros_like() const;

  /// Parameters in canonical order: g1.<l>, g2, mlp.w1, mlp.b1, mlp.w2, mlp.b2, skip.
  std::vector<TensorView> tensors();
};

/// Cached activations of one layer application.
struct LayerRecord {
  const GsnoLayer* owner = nullptr;
  bool correction = false;
  Field<double> input;
  SpectralCoeffs<double> input_coeffs;
  Eigen::VectorXd integral;       // C_f per input channel
  SpectralCoeffs<double> mixed;   // SHT[f] + C_f G2
  Field<double> core;             // spectral core output g
  Eigen::MatrixXd pre_activation;
  Eigen::MatrixXd activation;
};

/// Cached input of a pointwise map (encoders, decoders).
struct PointwiseRecord {
  const PointwiseLinear* owner = nullptr;
  Eigen::MatrixXd input;
};

/// Ordered record of forward applications; backward consumes it in exact
/// reverse order.
class GradientTape {
 public:
  using Entry = std::variant<LayerRecord, PointwiseRecord>;

  void push(Entry e) { entries_.push_back(std::move(e)); }
  LayerRecord pop_layer(const GsnoLayer& owner);
  PointwiseRecord pop_pointwise(const PointwiseLinear& owner);
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

 private:
  std::vector<Entry> entries_;
};

double gelu(double x);
double gelu_derivative(double x);

/// G1 ~ complex Gaussian with E|z|^2 = 1/c_in, G2 = 0, MLP and skip weights
/// Gaussian with variance 1/fan_in, biases zero. Deterministic in `seed`.
GsnoLayer layer_init(const LayerConfig& cfg, std::uint64_t seed);
GsnoLayer layer_init(GridPtr grid, int lmax, int c_in, int c_out, double mlp_ratio,
                     std::uint64_t seed, LayerFlags flags = {});

Field<double> gsno_forward(const GsnoLayer& layer, const Field<double>& f,
                           GradientTape* tape = nullptr);

/// gsno_forward with the correction term disabled (pure equivariant path).
Field<double> sfno_forward(const GsnoLayer& layer, const Field<double>& f,
                           GradientTape* tape = nullptr);

/// Consumes the layer's tape record; accumulates parameter gradients into
/// `grads` and returns the gradient with respect to the layer input.
Field<double> gsno_backward(const GsnoLayer& layer, const Field<double>& grad_out,
                            GradientTape& tape, GsnoLayer& grads);

struct LayerGradients {
  Field<double> input;
  GsnoLayer params;
};

/// Convenience form that allocates a fresh gradient buffer.
LayerGradients gsno_backward(const GsnoLayer& layer, const Field<double>& grad_out,
                             GradientTape& tape);

Eigen::MatrixXd pointwise_forward(const PointwiseLinear& map, const Eigen::MatrixXd& x,
                                  GradientTape* tape);
Eigen::MatrixXd pointwise_backward(const PointwiseLinear& map, const Eigen::MatrixXd& grad_out,
                                   GradientTape& tape, PointwiseLinear& grads);

}  // namespace sphg
