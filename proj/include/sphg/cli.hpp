#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sphg/config.hpp"
#include "sphg/gshnet.hpp"
#include "sphg/gsno.hpp"

namespace sphg {

inline constexpr const char* kToolVersion = "0.1.0";

/// Provenance record written next to every artifact.
struct RunManifest {
  std::string command;
  Config config;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string version = kToolVersion;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, sha256
  std::vector<std::pair<std::string, std::string>> outputs;  // path, sha256
  double wall_seconds = 0.0;

  void add_input(const std::filesystem::path& p);
  void add_output(const std::filesystem::path& p);
  std::string to_text() const;
};

using Model = std::variant<GsnoLayer, GshNet>;

/// Every train setting with its default value.
Config default_train_config();

/// Builds a model from the model.* keys of `cfg`.
Model build_model(const Config& cfg, const GridPtr& grid, int c_in, int c_out);

void save_checkpoint(const std::filesystem::path& path, const Model& model, const Config& cfg);
Model load_checkpoint(const std::filesystem::path& path);

/// Entry point of the `sphg` tool. Returns 0 on success, 1 on runtime or
/// verification failure, 2 on usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sphg
