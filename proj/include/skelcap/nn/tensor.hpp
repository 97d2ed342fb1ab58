#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace skelcap::nn {

// Flat parameter, gradient and moment storage, over-aligned for Eigen maps.
using ParamVector = std::vector<double, Eigen::aligned_allocator<double>>;

// Activations are row-major: one row per sequence position.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;
using RowVecMap = Eigen::Map<RowVec>;
using ConstRowVecMap = Eigen::Map<const RowVec>;

// One named tensor inside the flat parameter vector.
struct TensorInfo {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return rows * cols; }
};

// Allocates consecutive named slices of a flat parameter vector.
class ParamLayout {
 public:
  std::size_t add(std::string name, std::size_t rows, std::size_t cols) {
    const std::size_t off = total_;
    tensors_.push_back({std::move(name), rows, cols, off});
    total_ += rows * cols;
    return off;
  }
  std::size_t total() const { return total_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }

  const TensorInfo& find(std::string_view name) const {
    for (const auto& t : tensors_)
      if (t.name == name) return t;
    throw std::out_of_range("no parameter tensor named '" + std::string(name) + "'");
  }

 private:
  std::vector<TensorInfo> tensors_;
  std::size_t total_ = 0;
};

inline MatMap view(double* base, std::size_t off, std::size_t rows, std::size_t cols) {
  return MatMap(base + off, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
inline ConstMatMap view(const double* base, std::size_t off, std::size_t rows, std::size_t cols) {
  return ConstMatMap(base + off, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
inline RowVecMap row_view(double* base, std::size_t off, std::size_t n) {
  return RowVecMap(base + off, static_cast<Eigen::Index>(n));
}
inline ConstRowVecMap row_view(const double* base, std::size_t off, std::size_t n) {
  return ConstRowVecMap(base + off, static_cast<Eigen::Index>(n));
}

}  // namespace skelcap::nn
