#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "seps/errors.hpp"

namespace seps::nn {

/// Batch-major matrix: one sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Vector>;
using ConstVectorMap = Eigen::Map<const Vector>;

inline bool all_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

inline void require_finite(std::span<const double> values, const std::string& what) {
  if (!all_finite(values)) throw NumericError(what + ": non-finite value");
}

/// Row-major dense tensor of doubles.
class DenseTensor {
 public:
  DenseTensor() = default;

  explicit DenseTensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(element_count(shape_), 0.0) {}

  DenseTensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (element_count(shape_) != data_.size())
      throw DimensionError("DenseTensor: shape does not match data length");
  }

  static DenseTensor vector(std::vector<double> data) {
    const std::size_t n = data.size();
    return DenseTensor({n}, std::move(data));
  }

  static DenseTensor from_matrix(const Matrix& m) {
    std::vector<double> d(m.data(), m.data() + m.size());
    return DenseTensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                       std::move(d));
  }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t last_dim() const { return shape_.empty() ? 0 : shape_.back(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  bool finite() const { return all_finite(data_); }

  /// View as (rows x last_dim); a rank-1 tensor is a single row.
  Matrix as_matrix() const {
    if (shape_.empty()) throw DimensionError("DenseTensor: rank-0 tensor has no matrix view");
    const auto cols = static_cast<Eigen::Index>(last_dim());
    const auto rows = cols == 0 ? 0 : static_cast<Eigen::Index>(data_.size()) / cols;
    return ConstMatrixMap(data_.data(), rows, cols);
  }

  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace seps::nn
