#include "sphg/training.hpp"

#include <iomanip>
#include <sstream>

namespace sphg {

namespace {

void check_pair(const Field<double>& pred, const Field<double>& target, const char* who) {
  if (!(pred.grid() == target.grid()) || pred.channels() != target.channels()) {
    throw ShapeError(std::string(who) + ": prediction and target shapes differ");
  }
}

Eigen::VectorXd expand_rings(const SphericalGrid& g, const Eigen::VectorXd& ring) {
  Eigen::VectorXd w(g.num_points());
  for (int i = 0; i < g.nlat; ++i) {
    w.segment(static_cast<Eigen::Index>(i) * g.nlon, g.nlon).setConstant(ring(i));
  }
  return w;
}

}  // namespace

const char* to_string(LossKind kind) {
  return kind == LossKind::WeightedRelative ? "weighted_relative" : "lat_weighted_mse";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "weighted_relative") return LossKind::WeightedRelative;
  if (name == "lat_weighted_mse") return LossKind::LatWeightedMSE;
  throw std::invalid_argument("unknown loss: " + name);
}

Eigen::VectorXd relative_loss_ring_weights(const SphericalGrid& grid, LossWeights scheme) {
  Eigen::VectorXd v = grid.quad_weights;
  if (scheme == LossWeights::Legacy) v.array() *= grid.colatitudes.array().sin();
  return v;
}

Eigen::VectorXd latitude_weights(const SphericalGrid& grid) {
  // cos(latitude) = sin(colatitude)
  Eigen::VectorXd w = grid.colatitudes.array().sin();
  return w / w.mean();
}

double weighted_relative_loss(const Field<double>& pred, const Field<double>& target,
                              LossWeights scheme) {
  check_pair(pred, target, "weighted_relative_loss");
  const Eigen::VectorXd v = expand_rings(pred.grid(), relative_loss_ring_weights(pred.grid(), scheme));
  const Eigen::MatrixXd diff = pred.values() - target.values();
  double total = 0.0;
  for (int c = 0; c < pred.channels(); ++c) {
    const double num = diff.row(c).array().square().matrix().dot(v);
    const double den = target.values().row(c).array().square().matrix().dot(v);
    if (!(den > 0.0)) {
      throw DegenerateError("weighted_relative_loss: target channel " + std::to_string(c) +
                            " has zero energy");
    }
    total += std::sqrt(num / den);
  }
  return total / pred.channels();
}

Field<double> weighted_relative_loss_grad(const Field<double>& pred, const Field<double>& target,
                                          LossWeights scheme) {
  check_pair(pred, target, "weighted_relative_loss_grad");
  const Eigen::VectorXd v = expand_rings(pred.grid(), relative_loss_ring_weights(pred.grid(), scheme));
  Field<double> grad(pred.grid_ptr(), pred.channels());
  const int nc = pred.channels();
  for (int c = 0; c < nc; ++c) {
    const Eigen::RowVectorXd diff = pred.values().row(c) - target.values().row(c);
    const double num = diff.array().square().matrix().dot(v);
    const double den = target.values().row(c).array().square().matrix().dot(v);
    if (!(den > 0.0)) {
      throw DegenerateError("weighted_relative_loss_grad: target channel has zero energy");
    }
    if (num == 0.0) continue;  // non-differentiable point; use the zero subgradient
    grad.values().row(c) = diff.cwiseProduct(v.transpose()) / (nc * std::sqrt(num * den));
  }
  return grad;
}

double lat_weighted_mse(const Field<double>& pred, const Field<double>& target) {
  check_pair(pred, target, "lat_weighted_mse");
  const Eigen::VectorXd w = expand_rings(pred.grid(), latitude_weights(pred.grid()));
  const Eigen::MatrixXd sq = (pred.values() - target.values()).array().square();
  return (sq * w).sum() / static_cast<double>(sq.size());
}

Field<double> lat_weighted_mse_grad(const Field<double>& pred, const Field<double>& target) {
  check_pair(pred, target, "lat_weighted_mse_grad");
  const Eigen::VectorXd w = expand_rings(pred.grid(), latitude_weights(pred.grid()));
  Field<double> grad(pred.grid_ptr(), pred.channels());
  const double scale = 2.0 / static_cast<double>(pred.values().size());
  grad.values() = scale * ((pred.values() - target.values()) * w.asDiagonal());
  return grad;
}

double acc_metric(const Field<double>& pred, const Field<double>& target,
                  const Field<double>& climatology) {
  check_pair(pred, target, "acc_metric");
  check_pair(pred, climatology, "acc_metric");
  const Eigen::VectorXd w = expand_rings(pred.grid(), latitude_weights(pred.grid()));
  const Eigen::MatrixXd pa = pred.values() - climatology.values();
  const Eigen::MatrixXd ta = target.values() - climatology.values();
  const double num = (pa.cwiseProduct(ta) * w).sum();
  const double pp = (pa.array().square().matrix() * w).sum();
  const double tt = (ta.array().square().matrix() * w).sum();
  if (!(pp > 0.0) || !(tt > 0.0)) throw DegenerateError("acc_metric: zero anomaly energy");
  return num / std::sqrt(pp * tt);
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               const TrainConfig& cfg) {
  if (grads.size() != params.size()) throw ShapeError("adam_step: gradient size mismatch");
  if (!grads.allFinite()) {
    Eigen::Index bad = 0;
    for (; bad < grads.size() && std::isfinite(grads(bad)); ++bad) {
    }
    throw std::runtime_error("adam_step: non-finite gradient at index " + std::to_string(bad) +
                             " (step " + std::to_string(state.step + 1) + ")");
  }
  if (state.m.size() != params.size()) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
  }
  ++state.step;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grads.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  params.array() -= cfg.lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + cfg.eps);
}

double sample_loss(const Field<double>& pred, const Field<double>& target, const TrainConfig& cfg) {
  return cfg.loss == LossKind::WeightedRelative ? weighted_relative_loss(pred, target, cfg.weights)
                                                : lat_weighted_mse(pred, target);
}

Field<double> sample_loss_grad(const Field<double>& pred, const Field<double>& target,
                               const TrainConfig& cfg) {
  return cfg.loss == LossKind::WeightedRelative
             ? weighted_relative_loss_grad(pred, target, cfg.weights)
             : lat_weighted_mse_grad(pred, target);
}

std::string TrainReport::learning_curve_csv() const {
  std::ostringstream os;
  os << "epoch,steps,train_loss,val_loss\n";
  os << std::setprecision(17);
  for (const auto& e : epochs) {
    os << e.epoch << ',' << e.steps << ',' << e.train_loss << ',' << e.val_loss << '\n';
  }
  return os.str();
}

}  // namespace sphg
