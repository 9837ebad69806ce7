#pragma once

#include <algorithm>
#include <complex>
#include <stdexcept>
#include <type_traits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sphg {

/// Named view of a parameter tensor as contiguous doubles. Complex tensors
/// appear as interleaved (re, im) pairs.
struct TensorView {
  std::string name;
  std::span<double> values;
};

template <typename Derived>
std::span<double> as_span(Eigen::PlainObjectBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if constexpr (std::is_same_v<Scalar, std::complex<double>>) {
    return {reinterpret_cast<double*>(m.data()), static_cast<std::size_t>(2 * m.size())};
  } else {
    return {m.data(), static_cast<std::size_t>(m.size())};
  }
}

/// Concatenates every tensor of `model` (canonical order) into one vector.
template <typename Model>
Eigen::VectorXd pack(const Model& model) {
  auto views = const_cast<Model&>(model).tensors();
  std::size_t total = 0;
  for (const auto& v : views) total += v.values.size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(total));
  std::size_t off = 0;
  for (const auto& v : views) {
    std::copy(v.values.begin(), v.values.end(), out.data() + off);
    off += v.values.size();
  }
  return out;
}

template <typename Model>
void unpack(Model& model, const Eigen::VectorXd& flat) {
  auto views = model.tensors();
  std::size_t off = 0;
  for (auto& v : views) {
    if (off + v.values.size() > static_cast<std::size_t>(flat.size())) {
      throw std::invalid_argument("unpack: parameter vector too short");
    }
    std::copy(flat.data() + off, flat.data() + off + v.values.size(), v.values.begin());
    off += v.values.size();
  }
  if (off != static_cast<std::size_t>(flat.size())) {
    throw std::invalid_argument("unpack: parameter vector too long");
  }
}

template <typename Model>
std::size_t parameter_count(const Model& model) {
  std::size_t total = 0;
  for (const auto& v : const_cast<Model&>(model).tensors()) total += v.values.size();
  return total;
}

}  // namespace sphg
