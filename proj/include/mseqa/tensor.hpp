#ifndef MSEQA_TENSOR_HPP
#define MSEQA_TENSOR_HPP

#include <Eigen/Core>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace mseqa {

template <typename Real>
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Real>
using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

// Named dense tensor, row-major. Rank 1 or 2 is all the model needs.
template <typename Real>
struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<Real> data;

  size_t size() const { return data.size(); }
  int rows() const { return shape[0]; }
  int cols() const { return shape.size() > 1 ? shape[1] : 1; }

  Eigen::Map<Mat<Real>> mat() {
    return Eigen::Map<Mat<Real>>(data.data(), rows(), cols());
  }
  Eigen::Map<const Mat<Real>> mat() const {
    return Eigen::Map<const Mat<Real>>(data.data(), rows(), cols());
  }
  Eigen::Map<Vec<Real>> vec() {
    return Eigen::Map<Vec<Real>>(data.data(), static_cast<Eigen::Index>(size()));
  }
  Eigen::Map<const Vec<Real>> vec() const {
    return Eigen::Map<const Vec<Real>>(data.data(), static_cast<Eigen::Index>(size()));
  }
};

// Ordered collection of named tensors. Order is the serialization and
// reduction order, so it must be identical between runs.
template <typename Real>
struct ParamStore {
  std::vector<Tensor<Real>> tensors;
  std::unordered_map<std::string, size_t> index;

  Tensor<Real>& add(const std::string& name, std::vector<int> shape) {
    if (index.count(name)) throw std::runtime_error("duplicate tensor: " + name);
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    index.emplace(name, tensors.size());
    tensors.push_back(Tensor<Real>{name, std::move(shape), std::vector<Real>(n, Real(0))});
    return tensors.back();
  }

  Tensor<Real>& at(const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw std::runtime_error("missing tensor: " + name);
    return tensors[it->second];
  }
  const Tensor<Real>& at(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) throw std::runtime_error("missing tensor: " + name);
    return tensors[it->second];
  }
  bool has(const std::string& name) const { return index.count(name) != 0; }

  // Same names/shapes, all zeros. Used for gradients and optimizer moments.
  ParamStore<Real> zeros_like() const {
    ParamStore<Real> out;
    for (const auto& t : tensors) out.add(t.name, t.shape);
    return out;
  }

  void set_zero() {
    for (auto& t : tensors) std::fill(t.data.begin(), t.data.end(), Real(0));
  }

  size_t total_size() const {
    size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }

  template <typename Other>
  ParamStore<Other> cast() const {
    ParamStore<Other> out;
    for (const auto& t : tensors) {
      auto& o = out.add(t.name, t.shape);
      for (size_t i = 0; i < t.data.size(); ++i) o.data[i] = static_cast<Other>(t.data[i]);
    }
    return out;
  }
};

}  // namespace mseqa

#endif
