#include "sphg/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

#include "sphg/gshnet.hpp"
#include "sphg/io.hpp"
#include "sphg/spherical_conv.hpp"
#include "sphg/tasks.hpp"
#include "sphg/training.hpp"

namespace sphg {

namespace {

const double kPi = std::numbers::pi;

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() ? static_cast<double>(m.cwiseAbs().maxCoeff()) : 0.0;
}

Field<double> noise(const GridPtr& g, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Field<double> f(g, channels);
  for (Eigen::Index k = 0; k < f.values().size(); ++k) f.values().data()[k] = n01(rng);
  return f;
}

template <typename Model>
void randomize(Model& model, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  for (auto& t : model.tensors()) {
    for (double& v : t.values) v = scale * n01(rng);
  }
}

// Worst relative mismatch between an analytic gradient and central
// differences; entries far below the largest derivative are compared against
// 1e-3 of it.
double fd_defect(const std::function<double(const Eigen::VectorXd&)>& loss,
                 const Eigen::VectorXd& x, const Eigen::VectorXd& analytic, double h = 1e-5) {
  Eigen::VectorXd fd(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    const double up = loss(xp);
    xp(i) = x(i) - h;
    const double down = loss(xp);
    xp(i) = x(i);
    fd(i) = (up - down) / (2 * h);
  }
  const double floor = 1e-3 * std::max(fd.cwiseAbs().maxCoeff(), 1e-300);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double denom = std::max({std::abs(fd(i)), std::abs(analytic(i)), floor});
    worst = std::max(worst, std::abs(analytic(i) - fd(i)) / denom);
  }
  return worst;
}

struct Suite {
  std::vector<CheckResult> results;

  void run(const std::string& module, const std::string& name, double tol,
           const std::function<double()>& body) {
    CheckResult r;
    r.module = module;
    r.name = name;
    r.tolerance = tol;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r.value = body();
    } catch (const std::exception&) {
      r.value = std::numeric_limits<double>::infinity();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.pass = r.value <= tol;
    results.push_back(r);
  }
};

void harmonics_checks(Suite& s, const VerifyOptions& o) {
  s.run("harmonics", "gauss_monomials_exact", 1e-13, [&] {
    const int n = o.lmax + 1;
    const auto [x, w] = gauss_legendre_nodes(n);
    double worst = 0.0;
    for (int k = 0; k <= 2 * n - 1; ++k) {
      const double exact = k % 2 == 0 ? 2.0 / (k + 1) : 0.0;
      const double q = w.dot(x.array().pow(k).matrix());
      worst = std::max(worst, std::abs(q - exact) / std::max(1.0, std::abs(exact)));
    }
    return worst;
  });
  s.run("harmonics", "legendre_finite_to_l200", 0.0, [&] {
    double bad = 0.0;
    for (double x : {-1.0, -0.999, 0.0, 0.999, 1.0}) {
      const auto t = assoc_legendre<double>(200, x);
      for (int l = 0; l <= 200; ++l) {
        for (int m = 0; m <= l; ++m) bad += std::isfinite(t(l, m)) ? 0.0 : 1.0;
      }
    }
    return bad;
  });
  s.run("harmonics", "sph_harm_conjugate_symmetry", 0.0, [&] {
    double worst = 0.0;
    for (int l = 0; l <= 8; ++l) {
      for (int m = 1; m <= l; ++m) {
        const auto a = sph_harm<double>(l, -m, 0.7, 1.9);
        const auto b = (m % 2 ? -1.0 : 1.0) * std::conj(sph_harm<double>(l, m, 0.7, 1.9));
        worst = std::max(worst, std::abs(a - b));
      }
    }
    return worst;
  });
  s.run("harmonics", "orthonormality_on_grid", 1e-12, [&] {
    const int L = std::min(o.lmax, 15);
    auto g = make_grid(L + 1, 2 * L + 2);
    const std::size_t nm = num_modes(L);
    Eigen::MatrixXcd Y(static_cast<Eigen::Index>(nm), g->num_points());
    for (int l = 0; l <= L; ++l) {
      for (int m = 0; m <= l; ++m) {
        for (int i = 0; i < g->nlat; ++i) {
          for (int j = 0; j < g->nlon; ++j) {
            Y(mode_index(l, m), i * g->nlon + j) = sph_harm<double>(l, m, g->colatitudes(i), g->longitude(j));
          }
        }
      }
    }
    const Eigen::VectorXd w = point_weights(*g);
    const Eigen::MatrixXcd gram = Y.conjugate() * w.asDiagonal() * Y.transpose();
    return max_abs(Eigen::MatrixXcd(gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols())));
  });
}

void transform_checks(Suite& s, const VerifyOptions& o) {
  const int L = o.lmax;
  auto g = make_grid(L + 1, 2 * (L + 1));
  s.run("transform", "round_trip", 1e-11, [&] {
    const auto c = random_coeffs(L, 2, 0.0, 1);
    const auto back = sht(isht(c, g), L);
    return max_abs(Eigen::MatrixXcd(back.data - c.data));
  });
  s.run("transform", "parseval", 1e-10, [&] {
    const auto f = random_bandlimited(g, L, 2, 0.0, 2);
    const auto e1 = spectral_energy(sht(f, L));
    const auto e2 = field_energy(f);
    return ((e1 - e2).cwiseAbs().array() / e2.array()).maxCoeff();
  });
  s.run("transform", "linearity", 1e-12, [&] {
    const auto f = noise(g, 1, 3);
    const auto h = noise(g, 1, 4);
    const auto lhs = sht(2.5 * f + (-0.75) * h, L);
    const auto a = sht(f, L);
    const auto b = sht(h, L);
    return max_abs(Eigen::MatrixXcd(lhs.data - (2.5 * a.data - 0.75 * b.data)));
  });
  s.run("transform", "integral_rotation_invariant", 1e-13, [&] {
    const auto f = noise(g, 2, 5);
    const Eigen::VectorXd c0 = spherical_integral(f);
    double worst = 0.0;
    for (int k = 1; k < g->nlon; ++k) worst = std::max(worst, (spherical_integral(rotate_z(f, k)) - c0).cwiseAbs().maxCoeff());
    return worst;
  });
  s.run("transform", "matches_direct_sum", 1e-12, [&] {
    const int Ls = std::min(L, 7);
    auto gs = make_grid(Ls + 1, 2 * Ls + 2);
    const auto f = noise(gs, 1, 6);
    const auto c = sht(f, Ls);
    const Eigen::VectorXd w = point_weights(*gs);
    double worst = 0.0;
    for (int l = 0; l <= Ls; ++l) {
      for (int m = 0; m <= l; ++m) {
        std::complex<double> acc = 0.0;
        for (int i = 0; i < gs->nlat; ++i) {
          for (int j = 0; j < gs->nlon; ++j) {
            const int p = i * gs->nlon + j;
            acc += w(p) * f.values()(0, p) * std::conj(sph_harm<double>(l, m, gs->colatitudes(i), gs->longitude(j)));
          }
        }
        worst = std::max(worst, std::abs(acc - c(l, m, 0)));
      }
    }
    return worst;
  });
}

void conv_checks(Suite& s, const VerifyOptions& o) {
  auto g = make_grid(12, 24);
  s.run("spherical_conv", "theorem_vs_so3_oracle", 1e-6, [&] {
    const auto f = random_bandlimited(g, 4, 1, 0.0, 7);
    const auto h = random_bandlimited(g, 4, 1, 0.0, 8);
    OracleOptions opts;
    opts.threads = o.threads;
    const auto direct = sht(so3_conv_oracle(f, h, EulerResolution{}, opts), 4);
    const auto theorem = zonal_conv_spectral(sht(f, 4), ZonalKernel::from_coeffs(sht(h, 4)));
    return max_abs(Eigen::MatrixXcd(direct.data - theorem.data)) / max_abs(theorem.data);
  });
  s.run("spherical_conv", "zonal_conv_commutes_with_rotation", 1e-12, [&] {
    auto gg = make_grid(8, 16);
    const auto f = random_bandlimited(gg, 7, 1, 0.0, 9);
    const auto k = ZonalKernel::from_coeffs(random_coeffs(7, 1, 0.0, 10));
    const auto a = isht(zonal_conv_spectral(sht(rotate_z(f, 3), 7), k), gg);
    const auto b = rotate_z(isht(zonal_conv_spectral(sht(f, 7), k), gg), 3);
    return max_abs(a.values() - b.values());
  });
  s.run("spherical_conv", "greens_apply_linear_and_equivariant", 1e-12, [&] {
    auto gg = make_grid(8, 16);
    const auto sym = SpectralSymbol::inverse_laplacian(7);
    const auto f = random_bandlimited(gg, 7, 1, 0.0, 11);
    const auto h = random_bandlimited(gg, 7, 1, 0.0, 12);
    const auto lin = greens_apply(sym, sht(2.0 * f + h, 7));
    const auto sep_a = greens_apply(sym, sht(f, 7));
    const auto sep_b = greens_apply(sym, sht(h, 7));
    const double d1 = max_abs(Eigen::MatrixXcd(lin.data - (2.0 * sep_a.data + sep_b.data)));
    const auto r1 = isht(greens_apply(sym, sht(rotate_z(f, 5), 7)), gg);
    const auto r2 = rotate_z(isht(sep_a, gg), 5);
    return std::max(d1, max_abs(r1.values() - r2.values()));
  });
}

void gsno_checks(Suite& s) {
  auto g = make_grid(8, 16);
  GsnoLayer layer = layer_init(g, 7, 2, 3, 2.0, 6, {true, false});
  randomize(layer, 21);
  const auto f = noise(g, 2, 22);
  s.run("gsno", "equivariance_decomposition", 1e-10, [&] {
    const Eigen::VectorXd cf = spherical_integral(f);
    double worst = 0.0;
    for (int k : {1, g->nlon / 4, g->nlon / 2}) {
      const auto defect = gsno_forward(layer, rotate_z(f, k)) - rotate_z(gsno_forward(layer, f), k);
      Field<double> expected(g, layer.c_out);
      for (int ci = 0; ci < layer.c_in; ++ci) {
        SpectralCoeffs<double> bc(layer.lmax, layer.c_out);
        for (int l = 0; l <= layer.lmax; ++l) {
          for (int m = 0; m <= l; ++m) {
            for (int co = 0; co < layer.c_out; ++co) bc(l, m, co) = layer.g1[l](co, ci) * layer.g2(mode_index(l, m), ci);
          }
        }
        const auto b = isht(bc, g);
        expected += cf(ci) * (b - rotate_z(b, k));
      }
      worst = std::max(worst, max_abs(defect.values() - expected.values()));
    }
    return worst;
  });
  s.run("gsno", "correction_rotation_invariant", 1e-12, [&] {
    auto corr = [&](const Field<double>& x) { return gsno_forward(layer, x) - sfno_forward(layer, x); };
    return max_abs(corr(rotate_z(f, 3)).values() - corr(f).values());
  });
  s.run("gsno", "sfno_commutes_with_rotation", 1e-11, [&] {
    GsnoLayer full = layer_init(g, 7, 2, 2, 2.0, 7);
    randomize(full, 23);
    const auto x = noise(g, 2, 24);
    double worst = 0.0;
    for (int k : {1, 4, 8}) worst = std::max(worst, max_abs(sfno_forward(full, rotate_z(x, k)).values() - rotate_z(sfno_forward(full, x), k).values()));
    return worst;
  });
  s.run("gsno", "zero_g2_equals_sfno", 1e-14, [&] {
    const GsnoLayer fresh = layer_init(g, 7, 2, 2, 2.0, 8);
    const auto x = noise(g, 2, 25);
    return max_abs(gsno_forward(fresh, x).values() - sfno_forward(fresh, x).values());
  });
  s.run("gsno", "gradients_vs_finite_differences", 1e-6, [&] {
    auto gg = make_grid(8, 17);
    GsnoLayer l2 = layer_init(gg, 7, 2, 2, 2.0, 9);
    randomize(l2, 26);
    const auto x = noise(gg, 2, 27);
    const auto w = noise(gg, 2, 28);
    GradientTape tape;
    gsno_forward(l2, x, &tape);
    const auto grads = gsno_backward(l2, w, tape);
    return fd_defect(
        [&](const Eigen::VectorXd& p) {
          GsnoLayer tmp = l2;
          unpack(tmp, p);
          return w.values().cwiseProduct(gsno_forward(tmp, x).values()).sum();
        },
        pack(l2), pack(grads.params));
  });
}

void gshnet_checks(Suite& s) {
  s.run("gshnet", "identity_blocks_round_trip", 1e-10, [&] {
    GshNetConfig cfg;
    cfg.embed = 1;
    cfg.full = make_grid(16, 33);
    cfg.use_correction = false;
    cfg.use_mlp = false;
    GshNet net = build_gshnet(cfg, 2);
    for (auto& b : net.blocks) {
      for (auto& m : b.g1) m = Eigen::MatrixXcd::Identity(b.c_out, b.c_in);
    }
    const auto x = random_bandlimited(net.full, net.quarter->lmax, 1, 0.0, 17);
    Field<double> h = x;
    for (const auto& b : net.blocks) h = gsno_forward(b, h);
    return max_abs(h.values() - x.values());
  });
  GshNetConfig cfg;
  cfg.c_in = 2;
  cfg.embed = 4;
  cfg.full = make_grid(8, 17);
  s.run("gshnet", "deterministic_forward", 0.0, [&] {
    const auto x = noise(cfg.full, 2, 3);
    return max_abs(net_forward(build_gshnet(cfg, 5), x).values() - net_forward(build_gshnet(cfg, 5), x).values());
  });
  s.run("gshnet", "gradients_vs_finite_differences", 1e-6, [&] {
    GshNet net = build_gshnet(cfg, 3);
    randomize(net, 7);
    const auto x = noise(cfg.full, 2, 8);
    const auto w = noise(cfg.full, 1, 9);
    GradientTape tape;
    net_forward(net, x, &tape);
    GshNet grads = net.zeros_like();
    net_backward(net, w, tape, grads);
    return fd_defect(
        [&](const Eigen::VectorXd& p) {
          GshNet tmp = net;
          unpack(tmp, p);
          return w.values().cwiseProduct(net_forward(tmp, x).values()).sum();
        },
        pack(net), pack(grads));
  });
}

void training_checks(Suite& s) {
  auto g = make_grid(8, 17);
  const auto t = noise(g, 2, 31);
  s.run("training", "relative_loss_reports_scale", 1e-14, [&] {
    double worst = 0.0;
    for (double a : {-2.0, 0.0, 0.5, 1.0, 3.0}) worst = std::max(worst, std::abs(weighted_relative_loss(a * t, t) - std::abs(a - 1.0)));
    return worst;
  });
  s.run("training", "acc_in_unit_interval", 0.0, [&] {
    const auto clim = noise(g, 2, 32);
    double excess = 0.0;
    for (std::uint64_t k = 0; k < 10; ++k) excess = std::max(excess, std::abs(acc_metric(noise(g, 2, 40 + k), noise(g, 2, 60 + k), clim)) - 1.0);
    return std::max(0.0, excess);
  });
  s.run("training", "acc_of_target_is_one", 1e-14, [&] {
    return std::abs(acc_metric(t, t, noise(g, 2, 33)) - 1.0);
  });
  s.run("training", "lat_weights_average_one", 1e-13, [&] {
    return std::abs(latitude_weights(*make_grid(16, 33)).mean() - 1.0);
  });
  s.run("training", "adam_zero_rate_is_identity", 0.0, [&] {
    TrainConfig cfg;
    cfg.lr = 0.0;
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, -1.0, 1.0);
    const Eigen::VectorXd x0 = x;
    AdamState st;
    adam_step(x, Eigen::VectorXd::Constant(5, 2.0), st, cfg);
    return (x - x0).cwiseAbs().maxCoeff();
  });
  s.run("training", "loss_gradient_zero_at_target", 1e-10, [&] {
    return std::max(max_abs(lat_weighted_mse_grad(t, t).values()), max_abs(weighted_relative_loss_grad(t, t).values()));
  });
}

void task_checks(Suite& s, const VerifyOptions& o) {
  TaskSpec spec;
  spec.lmax = std::min(o.lmax, 15);
  spec.n = 4;
  spec.seed = 3;
  s.run("tasks", "regeneration_bit_identical", 0.0, [&] {
    TaskSpec ps = spec;
    ps.kind = TaskKind::Position;
    const auto a = generate(ps, 1);
    const auto b = generate(ps, 2);
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      d = std::max({d, max_abs(a.inputs[i].values() - b.inputs[i].values()), max_abs(a.targets[i].values() - b.targets[i].values())});
    }
    return d;
  });
  s.run("tasks", "poisson_forward_symbol", 1e-10, [&] {
    const auto ds = generate(spec);
    double worst = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const int L = ds.inputs[i].grid().lmax;
      const auto back = isht(greens_apply(SpectralSymbol::laplacian(L), sht(ds.targets[i], L)), ds.inputs[i].grid_ptr());
      worst = std::max(worst, max_abs(back.values() - ds.inputs[i].values()));
    }
    return worst;
  });
  s.run("tasks", "position_decomposition", 1e-12, [&] {
    TaskSpec ps = spec;
    ps.kind = TaskKind::Position;
    const auto ds = generate(ps);
    double worst = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto& x = ds.inputs[i];
      const int L = x.grid().lmax;
      Field<double> rebuilt = isht(greens_apply(ds.symbol, sht(x, L)), x.grid_ptr());
      rebuilt.values().row(0) += spherical_integral(x)(0) / (4 * kPi) * ds.terrain->values().row(0);
      worst = std::max(worst, max_abs(rebuilt.values() - ds.targets[i].values()));
    }
    return worst;
  });
}

void cli_checks(Suite& s) {
  s.run("cli", "field_format_round_trip", 0.0, [&] {
    const auto f = noise(make_grid(8, 17), 3, 41);
    const std::string bytes = encode_field(f);
    const auto back = decode_field(bytes);
    const bool same_bytes = encode_field(back) == bytes;
    return max_abs(back.values() - f.values()) + (same_bytes ? 0.0 : 1.0);
  });
  s.run("cli", "checkpoint_round_trip", 0.0, [&] {
    GsnoLayer layer = layer_init(make_grid(8, 17), 7, 2, 2, 2.0, 1);
    Checkpoint ck;
    ck.config = "model.kind=layer\n";
    ck.tensors = export_tensors(layer);
    const auto back = decode_checkpoint(encode_checkpoint(ck));
    GsnoLayer other = layer_init(make_grid(8, 17), 7, 2, 2, 2.0, 2);
    import_tensors(other, back.tensors);
    return (pack(other) - pack(layer)).cwiseAbs().maxCoeff() + (back.config == ck.config ? 0.0 : 1.0);
  });
  s.run("cli", "corruption_detected", 0.0, [&] {
    std::string bytes = encode_field(noise(make_grid(4, 9), 1, 1));
    bytes[bytes.size() / 2] ^= 0x01;
    try {
      decode_field(bytes);
    } catch (const FormatError&) {
      return 0.0;
    }
    return 1.0;
  });
}

}  // namespace

std::vector<CheckResult> run_verification(const VerifyOptions& opts) {
  if (opts.lmax < 1) throw ConfigError("verify: lmax must be >= 1");
  Suite s;
  harmonics_checks(s, opts);
  transform_checks(s, opts);
  conv_checks(s, opts);
  gsno_checks(s);
  gshnet_checks(s);
  training_checks(s);
  task_checks(s, opts);
  cli_checks(s);
  return s.results;
}

}  // namespace sphg
