#include "sphg/tasks.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "sphg/parallel.hpp"

namespace sphg {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

Field<double> filter(const Field<double>& f, const SpectralSymbol& s) {
  const int lmax = f.grid().lmax;
  return isht(greens_apply(s, sht(f, lmax)), f.grid_ptr());
}

void add_terrain(Field<double>& g, const Eigen::VectorXd& cf, const Field<double>& terrain) {
  if (!(terrain.grid() == g.grid()) ||
      (terrain.channels() != 1 && terrain.channels() != g.channels())) {
    throw ShapeError("position_modulated_pair: terrain does not match the input field");
  }
  for (int c = 0; c < g.channels(); ++c) {
    const int tc = terrain.channels() == 1 ? 0 : c;
    g.values().row(c) += (cf(c) / kFourPi) * terrain.values().row(tc);
  }
}

std::pair<Field<double>, Field<double>> make_pair_for(const FieldDataset& ds,
                                                      const Field<double>& x) {
  switch (ds.meta.kind) {
    case TaskKind::Poisson:
      return poisson_pair(x);
    case TaskKind::Position:
      return position_modulated_pair(x, *ds.terrain, ds.symbol);
    case TaskKind::PositionHard:
      return position_modulated_pair_hard(x, *ds.terrain, ds.symbol);
  }
  throw ConfigError("unknown task kind");
}

}  // namespace

const char* to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Poisson:
      return "poisson";
    case TaskKind::Position:
      return "position";
    case TaskKind::PositionHard:
      return "position_hard";
  }
  return "?";
}

TaskKind task_kind_from_string(const std::string& name) {
  if (name == "poisson") return TaskKind::Poisson;
  if (name == "position") return TaskKind::Position;
  if (name == "position_hard") return TaskKind::PositionHard;
  throw ConfigError("unknown task: " + name + " (expected poisson, position, position_hard)");
}

const char* to_string(TerrainKind kind) {
  return kind == TerrainKind::Random ? "random" : "two_cap";
}

TerrainKind terrain_kind_from_string(const std::string& name) {
  if (name == "random") return TerrainKind::Random;
  if (name == "two_cap") return TerrainKind::TwoCap;
  throw ConfigError("unknown terrain: " + name + " (expected random, two_cap)");
}

GridPtr TaskSpec::sample_grid() const {
  const int la = nlat > 0 ? nlat : lmax + 1;
  const int lo = nlon > 0 ? nlon : 2 * la;
  auto g = sphg::make_grid(la, lo, grid);
  if (g->lmax < lmax) {
    throw ConfigError("task: grid " + std::to_string(la) + "x" + std::to_string(lo) +
                      " cannot resolve lmax=" + std::to_string(lmax));
  }
  return g;
}

void FieldDataset::validate() const {
  if (inputs.size() != targets.size()) throw ShapeError("dataset: inputs and targets differ in count");
  for (std::size_t i = 1; i < inputs.size(); ++i) {
    inputs[i].check_same_shape(inputs[0]);
    targets[i].check_same_shape(targets[0]);
  }
}

std::pair<FieldDataset, FieldDataset> FieldDataset::split(std::size_t count) const {
  if (count > size()) throw ShapeError("dataset: split point beyond dataset size");
  FieldDataset a, b;
  a.meta = b.meta = meta;
  a.terrain = b.terrain = terrain;
  a.symbol = b.symbol = symbol;
  const auto cut = static_cast<std::ptrdiff_t>(count);
  a.inputs.assign(inputs.begin(), inputs.begin() + cut);
  a.targets.assign(targets.begin(), targets.begin() + cut);
  b.inputs.assign(inputs.begin() + cut, inputs.end());
  b.targets.assign(targets.begin() + cut, targets.end());
  return {std::move(a), std::move(b)};
}

SpectralCoeffs<double> random_coeffs(int lmax, int channels, double slope, std::uint64_t seed,
                                     bool mean_free) {
  if (lmax < 1) throw ConfigError("random_coeffs: lmax must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  const double half = std::sqrt(0.5);
  SpectralCoeffs<double> c(lmax, channels);
  for (int ch = 0; ch < channels; ++ch) {
    for (int l = 0; l <= lmax; ++l) {
      const double scale = std::pow(1.0 + l, -slope);
      c(l, 0, ch) = {scale * n01(rng), 0.0};
      for (int m = 1; m <= l; ++m) {
        const double re = n01(rng);
        const double im = n01(rng);
        c(l, m, ch) = {scale * half * re, scale * half * im};
      }
    }
    if (mean_free) c(0, 0, ch) = 0.0;
  }
  return c;
}

Field<double> random_bandlimited(int lmax, int channels, double slope, std::uint64_t seed,
                                 bool mean_free) {
  return random_bandlimited(make_grid(lmax + 1, 2 * (lmax + 1)), lmax, channels, slope, seed,
                            mean_free);
}

Field<double> random_bandlimited(const GridPtr& grid, int lmax, int channels, double slope,
                                 std::uint64_t seed, bool mean_free) {
  return isht(random_coeffs(lmax, channels, slope, seed, mean_free), grid);
}

std::pair<Field<double>, Field<double>> poisson_pair(const Field<double>& f) {
  auto fc = sht(f, f.grid().lmax);
  fc.data.row(0).setZero();
  Field<double> x = isht(fc, f.grid_ptr());
  Field<double> g = isht(greens_apply(SpectralSymbol::inverse_laplacian(fc.lmax), fc), f.grid_ptr());
  return {std::move(x), std::move(g)};
}

std::pair<Field<double>, Field<double>> position_modulated_pair(const Field<double>& f,
                                                                const Field<double>& terrain,
                                                                const SpectralSymbol& s) {
  Field<double> g = filter(f, s);
  add_terrain(g, spherical_integral(f), terrain);
  return {f, std::move(g)};
}

std::pair<Field<double>, Field<double>> position_modulated_pair_hard(const Field<double>& f,
                                                                     const Field<double>& terrain,
                                                                     const SpectralSymbol& s) {
  if (!(terrain.grid() == f.grid())) throw ShapeError("position_modulated_pair_hard: grid mismatch");
  Field<double> modulated = f;
  for (int c = 0; c < f.channels(); ++c) {
    const int tc = terrain.channels() == 1 ? 0 : c;
    modulated.values().row(c).array() *= 1.0 + 0.5 * terrain.values().row(tc).array();
  }
  Field<double> g = filter(modulated, s);
  add_terrain(g, spherical_integral(f), terrain);
  return {f, std::move(g)};
}

Field<double> make_terrain(const GridPtr& grid, TerrainKind kind, std::uint64_t seed, int lmax) {
  const int keep = std::min(lmax, grid->lmax);
  if (kind == TerrainKind::Random) return random_bandlimited(grid, keep, 1, 0.0, seed, true);

  // Raised cap near (60 deg colat, 0 lon), sunken cap near (120 deg colat, 180 deg lon).
  const double radius = 0.6;
  auto cap = [radius](double th, double ph, double th0, double ph0) {
    const double cosd = std::cos(th) * std::cos(th0) + std::sin(th) * std::sin(th0) * std::cos(ph - ph0);
    const double d = std::acos(std::clamp(cosd, -1.0, 1.0));
    return d < radius ? std::cos(0.5 * std::numbers::pi * d / radius) : 0.0;
  };
  const double pi = std::numbers::pi;
  Field<double> raw = Field<double>::from_function(grid, 1, [&](int, double th, double ph) {
    return cap(th, ph, pi / 3.0, 0.0) - 0.5 * cap(th, ph, 2.0 * pi / 3.0, pi);
  });
  auto c = sht(raw, keep);
  c.data.row(0).setZero();
  return isht(c, grid);
}

FieldDataset generate(const TaskSpec& spec, int threads) {
  if (spec.n < 1 || spec.channels < 1) throw ConfigError("generate: n and channels must be >= 1");
  const GridPtr grid = spec.sample_grid();
  FieldDataset ds;
  ds.meta = spec;
  ds.symbol = SpectralSymbol::inverse_laplacian(grid->lmax);
  if (spec.kind != TaskKind::Poisson) {
    ds.terrain = make_terrain(grid, spec.terrain, spec.terrain_seed, spec.terrain_lmax);
  }
  const auto n = static_cast<std::size_t>(spec.n);
  ds.inputs.resize(n);
  ds.targets.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const Field<double> f =
        random_bandlimited(grid, spec.lmax, spec.channels, spec.slope, mix_seed(spec.seed, i));
    auto [x, y] = make_pair_for(ds, f);
    ds.inputs[i] = std::move(x);
    ds.targets[i] = std::move(y);
  });
  return ds;
}

FieldDataset rotation_augment(const FieldDataset& ds, const std::vector<int>& shifts) {
  FieldDataset out = ds;
  const std::size_t n = ds.size();
  if (n == 0) return out;
  const int nlon = ds.inputs.front().nlon();
  for (int k : shifts) {
    if (k < 0 || k >= nlon) {
      throw ConfigError("rotation_augment: shift " + std::to_string(k) + " outside [0, nlon)");
    }
    for (std::size_t i = 0; i < n; ++i) {
      Field<double> x = rotate_z(ds.inputs[i], k);
      if (ds.meta.kind == TaskKind::Poisson) {
        out.targets.push_back(rotate_z(ds.targets[i], k));
        out.inputs.push_back(std::move(x));
      } else {
        auto [xi, yi] = make_pair_for(ds, x);
        out.inputs.push_back(std::move(xi));
        out.targets.push_back(std::move(yi));
      }
    }
  }
  return out;
}

}  // namespace sphg
