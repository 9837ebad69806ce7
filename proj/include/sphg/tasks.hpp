#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sphg/spherical_conv.hpp"
#include "sphg/transform.hpp"

namespace sphg {

enum class TaskKind : std::uint8_t { Poisson = 0, Position = 1, PositionHard = 2 };
enum class TerrainKind : std::uint8_t { Random = 0, TwoCap = 1 };

const char* to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& name);
const char* to_string(TerrainKind kind);
TerrainKind terrain_kind_from_string(const std::string& name);

/// Everything needed to regenerate a dataset bit for bit.
struct TaskSpec {
  TaskKind kind = TaskKind::Poisson;
  int lmax = 15;
  int n = 64;
  int channels = 1;
  double slope = 0.0;
  std::uint64_t seed = 0;
  int nlat = 0;  // 0: lmax + 1
  int nlon = 0;  // 0: 2 * nlat
  GridKind grid = GridKind::GaussLegendre;
  TerrainKind terrain = TerrainKind::Random;
  std::uint64_t terrain_seed = 1234;
  int terrain_lmax = 4;

  GridPtr sample_grid() const;
};

struct FieldDataset {
  std::vector<Field<double>> inputs;
  std::vector<Field<double>> targets;
  TaskSpec meta;
  std::optional<Field<double>> terrain;  // position tasks only
  SpectralSymbol symbol;

  std::size_t size() const { return inputs.size(); }
  /// Throws ShapeError unless inputs and targets pair up with one shape each.
  void validate() const;
  /// First `count` samples and the remainder, sharing meta and terrain.
  std::pair<FieldDataset, FieldDataset> split(std::size_t count) const;
};

/// Gaussian coefficients scaled by (1 + l)^-slope: real N(0, 1) at m = 0,
/// complex with N(0, 1/2) parts at m > 0, so every real degree of freedom has
/// unit variance. Draw order is channel, degree, order.
SpectralCoeffs<double> random_coeffs(int lmax, int channels, double slope, std::uint64_t seed,
                                     bool mean_free = false);

/// Band-limited random field on a Gauss grid with nlat = lmax + 1, nlon = 2 nlat.
Field<double> random_bandlimited(int lmax, int channels, double slope, std::uint64_t seed,
                                 bool mean_free = false);
/// Same coefficients synthesized on an explicit grid.
Field<double> random_bandlimited(const GridPtr& grid, int lmax, int channels, double slope,
                                 std::uint64_t seed, bool mean_free = false);

/// (mean-free f, g) with g the Laplace-Beltrami Green's solution of f.
std::pair<Field<double>, Field<double>> poisson_pair(const Field<double>& f);

/// (f, isht(s sht f) + C_f / (4 pi) terrain). `terrain` has one channel or as
/// many channels as f.
std::pair<Field<double>, Field<double>> position_modulated_pair(const Field<double>& f,
                                                                const Field<double>& terrain,
                                                                const SpectralSymbol& s);

/// Off-class variant: f is multiplied by (1 + terrain / 2) before filtering.
std::pair<Field<double>, Field<double>> position_modulated_pair_hard(const Field<double>& f,
                                                                     const Field<double>& terrain,
                                                                     const SpectralSymbol& s);

/// Fixed single-channel "topography" on `grid`, mean-free and band-limited
/// to `lmax`. Random draws slope-0 coefficients; TwoCap projects a raised
/// and a sunken spherical cap.
Field<double> make_terrain(const GridPtr& grid, TerrainKind kind, std::uint64_t seed, int lmax = 4);

FieldDataset generate(const TaskSpec& spec, int threads = 1);

/// Appends one rotated copy of the dataset per shift. Position targets are
/// rebuilt from the rotated input against the fixed terrain.
FieldDataset rotation_augment(const FieldDataset& ds, const std::vector<int>& shifts);

}  // namespace sphg
