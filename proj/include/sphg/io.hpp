#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphg/tasks.hpp"
#include "sphg/transform.hpp"

namespace sphg {

/// Malformed, truncated or corrupted file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint16_t kFormatVersion = 1;

enum class FileKind : std::uint8_t { Field = 1, Checkpoint = 2 };

/// Fixed header shared by every binary file:
///   "SPHG" | u16 version | u8 kind | u32 nlat | u32 nlon | u32 channels |
///   u32 lmax | u8 grid kind
/// All integers and samples are little endian; files end in a CRC32 of every
/// preceding byte.
struct FileHeader {
  FileKind kind = FileKind::Field;
  std::uint32_t nlat = 0;
  std::uint32_t nlon = 0;
  std::uint32_t channels = 0;
  std::uint32_t lmax = 0;
  GridKind grid = GridKind::GaussLegendre;
};

/// Field file: header, then channel-major, ring-major float64 samples.
std::string encode_field(const Field<double>& f);
Field<double> decode_field(const std::string& bytes);

void write_field(const std::filesystem::path& path, const Field<double>& f);
Field<double> read_field(const std::filesystem::path& path);

struct NamedTensor {
  std::string name;
  std::vector<double> values;
};

/// Checkpoint: header, u32-length config text, u32 tensor count, then per
/// tensor a u16-length name, u64 element count and float64 values.
struct Checkpoint {
  FileHeader header;
  std::string config;  // key=value lines that rebuild the model
  std::vector<NamedTensor> tensors;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

/// Copies a model's parameters (canonical order) into checkpoint tensors.
template <typename Model>
std::vector<NamedTensor> export_tensors(const Model& model) {
  std::vector<NamedTensor> out;
  for (const auto& t : const_cast<Model&>(model).tensors()) {
    out.push_back({t.name, std::vector<double>(t.values.begin(), t.values.end())});
  }
  return out;
}

/// Loads checkpoint tensors into a model built with the same configuration;
/// names, order and sizes must match exactly.
template <typename Model>
void import_tensors(Model& model, const std::vector<NamedTensor>& tensors) {
  auto views = model.tensors();
  if (views.size() != tensors.size()) {
    throw FormatError("checkpoint holds " + std::to_string(tensors.size()) +
                      " tensors, model expects " + std::to_string(views.size()));
  }
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].name != tensors[i].name || views[i].values.size() != tensors[i].values.size()) {
      throw FormatError("checkpoint tensor " + tensors[i].name + " does not match model tensor " +
                        views[i].name);
    }
    std::copy(tensors[i].values.begin(), tensors[i].values.end(), views[i].values.begin());
  }
}

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);

/// Dataset directory layout:
///   dataset.txt          key=value generator spec
///   x_NNNNN.sphg         inputs
///   y_NNNNN.sphg         targets
///   terrain.sphg         position tasks only
/// Returns the paths written, in order.
std::vector<std::filesystem::path> save_dataset(const std::filesystem::path& dir,
                                                const FieldDataset& ds);
FieldDataset load_dataset(const std::filesystem::path& dir);

std::string task_spec_to_text(const TaskSpec& spec);
TaskSpec task_spec_from_text(const std::string& text);

}  // namespace sphg
