#pragma once

#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphg/gshnet.hpp"
#include "sphg/gsno.hpp"
#include "sphg/parallel.hpp"
#include "sphg/parameters.hpp"
#include "sphg/tasks.hpp"

namespace sphg {

/// Target (or anomaly) with no energy, for which a relative metric is undefined.
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Loss became non-finite. The model has been restored to `last_good`.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, Eigen::VectorXd last_good)
      : std::runtime_error(what), last_good(std::move(last_good)) {}
  Eigen::VectorXd last_good;
};

enum class LossKind { WeightedRelative, LatWeightedMSE };

const char* to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

/// Weighting of the relative loss. Quadrature uses the grid's latitude
/// quadrature weight, which already carries the sin(theta) Jacobian. Legacy
/// multiplies that weight by sin(theta) once more.
enum class LossWeights { Quadrature, Legacy };

/// Per-ring weights v_i used by the relative loss.
Eigen::VectorXd relative_loss_ring_weights(const SphericalGrid& grid, LossWeights scheme);

/// Latitude weights cos(lat_i) normalized to mean one over rings.
Eigen::VectorXd latitude_weights(const SphericalGrid& grid);

/// (1/C) sum_c sqrt( sum v |pred - target|^2 / sum v |target|^2 ).
double weighted_relative_loss(const Field<double>& pred, const Field<double>& target,
                              LossWeights scheme = LossWeights::Quadrature);
Field<double> weighted_relative_loss_grad(const Field<double>& pred, const Field<double>& target,
                                          LossWeights scheme = LossWeights::Quadrature);

/// Mean over channels and points of w_i (pred - target)^2.
double lat_weighted_mse(const Field<double>& pred, const Field<double>& target);
Field<double> lat_weighted_mse_grad(const Field<double>& pred, const Field<double>& target);

/// Latitude-weighted anomaly correlation against a climatology.
double acc_metric(const Field<double>& pred, const Field<double>& target,
                  const Field<double>& climatology);

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int epochs = 1;
  int batch_size = 16;
  int max_steps = 0;  // 0: no cap
  std::uint64_t seed = 0;
  LossKind loss = LossKind::WeightedRelative;
  LossWeights weights = LossWeights::Quadrature;
  int threads = 1;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  long steps = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  long steps = 0;
  double final_train_loss = 0.0;
  double final_val_loss = 0.0;
  double wall_seconds = 0.0;

  /// epoch,steps,train_loss,val_loss; wall time is excluded so the curve is
  /// reproducible byte for byte.
  std::string learning_curve_csv() const;
};

double sample_loss(const Field<double>& pred, const Field<double>& target, const TrainConfig& cfg);
Field<double> sample_loss_grad(const Field<double>& pred, const Field<double>& target,
                               const TrainConfig& cfg);

// Uniform model interface used by the training loop.
inline Field<double> model_forward(const GsnoLayer& m, const Field<double>& x, GradientTape* t) {
  return gsno_forward(m, x, t);
}
inline Field<double> model_backward(const GsnoLayer& m, const Field<double>& g, GradientTape& t,
                                    GsnoLayer& grads) {
  return gsno_backward(m, g, t, grads);
}
inline Field<double> model_forward(const GshNet& m, const Field<double>& x, GradientTape* t) {
  return net_forward(m, x, t);
}
inline Field<double> model_backward(const GshNet& m, const Field<double>& g, GradientTape& t,
                                    GshNet& grads) {
  return net_backward(m, g, t, grads);
}

template <typename M>
concept TrainableModel = requires(const M& cm, M& m, const Field<double>& f, GradientTape& tape) {
  { model_forward(cm, f, &tape) } -> std::same_as<Field<double>>;
  { model_backward(cm, f, tape, m) } -> std::same_as<Field<double>>;
  { cm.zeros_like() } -> std::same_as<M>;
  { m.tensors() } -> std::same_as<std::vector<TensorView>>;
};

/// Mean loss of `model` over a dataset (samples evaluated in parallel,
/// reduced in index order).
template <TrainableModel M>
double evaluate_loss(const M& model, const FieldDataset& data, const TrainConfig& cfg) {
  if (data.size() == 0) return 0.0;
  std::vector<double> losses(data.size());
  parallel_for(data.size(), cfg.threads, [&](std::size_t i) {
    losses[i] = sample_loss(model_forward(model, data.inputs[i], nullptr), data.targets[i], cfg);
  });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(data.size());
}

/// Loss and parameter gradient (flattened) averaged over a batch.
template <TrainableModel M>
double batch_gradient(const M& model, const FieldDataset& data, const std::vector<std::size_t>& idx,
                      const TrainConfig& cfg, Eigen::VectorXd& grad) {
  const std::size_t n = idx.size();
  std::vector<double> losses(n);
  std::vector<Eigen::VectorXd> grads(n);
  parallel_for(n, cfg.threads, [&](std::size_t b) {
    const std::size_t i = idx[b];
    GradientTape tape;
    const Field<double> pred = model_forward(model, data.inputs[i], &tape);
    losses[b] = sample_loss(pred, data.targets[i], cfg);
    M g = model.zeros_like();
    model_backward(model, sample_loss_grad(pred, data.targets[i], cfg), tape, g);
    grads[b] = pack(g);
  });
  grad = Eigen::VectorXd::Zero(grads.front().size());
  double loss = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    grad += grads[b];
    loss += losses[b];
  }
  grad /= static_cast<double>(n);
  return loss / static_cast<double>(n);
}

/// Seeded mini-batch Adam training with per-epoch validation.
template <TrainableModel M>
TrainReport train(M& model, const FieldDataset& train_set, const FieldDataset& val_set,
                  const TrainConfig& cfg) {
  if (train_set.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (!(cfg.lr >= 0.0) || cfg.batch_size < 1) {
    throw std::invalid_argument("train: lr must be >= 0 and batch_size >= 1");
  }
  const auto t0 = std::chrono::steady_clock::now();
  TrainReport report;
  AdamState state;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::VectorXd params = pack(model);
  Eigen::VectorXd grad;

  bool done = false;
  for (int epoch = 1; epoch <= cfg.epochs && !done; ++epoch) {
    const auto te = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::vector<std::size_t> idx(order.begin() + static_cast<long>(start),
                                         order.begin() + static_cast<long>(stop));
      const double loss = batch_gradient(model, train_set, idx, cfg, grad);
      if (!std::isfinite(loss) || !grad.allFinite()) {
        unpack(model, params);
        throw DivergenceError("train: non-finite loss or gradient at step " +
                                  std::to_string(state.step + 1),
                              params);
      }
      adam_step(params, grad, state, cfg);
      unpack(model, params);
      epoch_loss += loss;
      ++batches;
      if (cfg.max_steps > 0 && state.step >= cfg.max_steps) {
        done = true;
        break;
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.steps = state.step;
    rec.train_loss = epoch_loss / static_cast<double>(batches);
    rec.val_loss = val_set.size() > 0 ? evaluate_loss(model, val_set, cfg) : rec.train_loss;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - te).count();
    if (!std::isfinite(rec.val_loss)) {
      throw DivergenceError("train: non-finite validation loss", params);
    }
    report.epochs.push_back(rec);
  }
  report.steps = state.step;
  report.final_train_loss = report.epochs.back().train_loss;
  report.final_val_loss = report.epochs.back().val_loss;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace sphg
