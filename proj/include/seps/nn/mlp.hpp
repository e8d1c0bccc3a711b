#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "seps/errors.hpp"
#include "seps/nn/tensor.hpp"
#include "seps/rng.hpp"

namespace seps::nn {

/// Hidden-layer nonlinearity. The output head is always linear.
enum class Activation : std::uint32_t { Tanh = 1 };

/// Per-call activations cached by a recorded forward pass.
struct ForwardRecord {
  std::vector<Matrix> activations;  // activations[0] = input, back() = output

  bool recorded() const noexcept { return !activations.empty(); }
  const Matrix& output() const { return activations.back(); }
  void clear() { activations.clear(); }
};

/// Fully connected tanh network with a linear head.
///
/// tanh via the vectorised exp: Eigen only vectorises tanh for float, and the
/// scalar fallback dominates the cost of small networks. Absolute error
/// against std::tanh stays below 1e-15; saturates correctly at +-inf.
inline void tanh_inplace(Matrix& h) { h = 1.0 - 2.0 / ((2.0 * h.array()).exp() + 1.0); }

/// Parameters live in one flat buffer, layer by layer: the weight matrix of
/// layer l is stored row-major with shape (layer_sizes[l+1], layer_sizes[l]),
/// followed by its bias. Optimizers, gradient clipping and checkpoints all
/// operate on that flat view.
class MlpNetwork {
 public:
  MlpNetwork() = default;

  explicit MlpNetwork(std::vector<std::size_t> layer_sizes, Activation activation = Activation::Tanh)
      : layer_sizes_(std::move(layer_sizes)), activation_(activation) {
    if (layer_sizes_.size() < 2) throw DimensionError("MlpNetwork: need at least input and output sizes");
    for (std::size_t s : layer_sizes_)
      if (s == 0) throw DimensionError("MlpNetwork: zero-width layer");
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
      weight_offsets_.push_back(offset);
      offset += layer_sizes_[l] * layer_sizes_[l + 1];
      bias_offsets_.push_back(offset);
      offset += layer_sizes_[l + 1];
    }
    params_.assign(offset, 0.0);
  }

  static std::size_t parameter_count_for(std::span<const std::size_t> sizes) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) n += sizes[l] * sizes[l + 1] + sizes[l + 1];
    return n;
  }

  const std::vector<std::size_t>& layer_sizes() const noexcept { return layer_sizes_; }
  Activation activation() const noexcept { return activation_; }
  std::size_t num_layers() const noexcept { return weight_offsets_.size(); }
  std::size_t input_size() const { return layer_sizes_.front(); }
  std::size_t output_size() const { return layer_sizes_.back(); }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  MatrixMap weight(std::size_t l) {
    return MatrixMap(params_.data() + weight_offsets_[l], rows(l), cols(l));
  }
  ConstMatrixMap weight(std::size_t l) const {
    return ConstMatrixMap(params_.data() + weight_offsets_[l], rows(l), cols(l));
  }
  VectorMap bias(std::size_t l) { return VectorMap(params_.data() + bias_offsets_[l], rows(l)); }
  ConstVectorMap bias(std::size_t l) const {
    return ConstVectorMap(params_.data() + bias_offsets_[l], rows(l));
  }

  /// Orthogonal weights (gain sqrt(2) hidden, `head_gain` for the last layer), zero biases.
  void initialize(Rng& rng, double head_gain) {
    for (std::size_t l = 0; l < num_layers(); ++l) {
      const double gain = (l + 1 == num_layers()) ? head_gain : std::numbers::sqrt2;
      weight(l) = orthogonal(rows(l), cols(l), rng) * gain;
      bias(l).setZero();
    }
  }

  Matrix forward(const Matrix& input) const {
    check_input(input);
    Matrix a = input;
    for (std::size_t l = 0; l < num_layers(); ++l) {
      Matrix h = a * weight(l).transpose();
      h.rowwise() += bias(l).transpose();
      if (l + 1 < num_layers()) tanh_inplace(h);
      a = std::move(h);
    }
    return a;
  }

  const Matrix& forward(const Matrix& input, ForwardRecord& record) const {
    check_input(input);
    record.activations.clear();
    record.activations.reserve(num_layers() + 1);
    record.activations.push_back(input);
    for (std::size_t l = 0; l < num_layers(); ++l) {
      Matrix h = record.activations.back() * weight(l).transpose();
      h.rowwise() += bias(l).transpose();
      if (l + 1 < num_layers()) tanh_inplace(h);
      record.activations.push_back(std::move(h));
    }
    return record.activations.back();
  }

  /// Accumulates (+=) dL/dparams into `grad` and returns dL/dinput.
  Matrix backward(const ForwardRecord& record, const Matrix& grad_output, std::span<double> grad) const {
    if (!record.recorded() || record.activations.size() != num_layers() + 1)
      throw UsageError("MlpNetwork::backward: no recorded forward pass");
    if (grad.size() != params_.size()) throw DimensionError("MlpNetwork::backward: gradient buffer size");
    const Matrix& out = record.output();
    if (grad_output.rows() != out.rows() || grad_output.cols() != out.cols())
      throw DimensionError("MlpNetwork::backward: output gradient shape");

    Matrix delta = grad_output;
    for (std::size_t l = num_layers(); l-- > 0;) {
      if (l + 1 < num_layers())
        delta.array() *= 1.0 - record.activations[l + 1].array().square();
      const Matrix& a_in = record.activations[l];
      // Evaluate into an aligned temporary: written straight into `grad`, the
      // product's vector/scalar split (and so its rounding) would follow the
      // caller's buffer alignment.
      const Matrix gw = delta.transpose() * a_in;
      MatrixMap(grad.data() + weight_offsets_[l], rows(l), cols(l)) += gw;
      const Vector gb = delta.colwise().sum().transpose();
      VectorMap(grad.data() + bias_offsets_[l], rows(l)) += gb;
      Matrix next = delta * weight(l);
      delta = std::move(next);
    }
    return delta;
  }

  std::vector<double> backward(const ForwardRecord& record, const Matrix& grad_output) const {
    std::vector<double> grad(params_.size(), 0.0);
    backward(record, grad_output, grad);
    return grad;
  }

 private:
  Eigen::Index rows(std::size_t l) const { return static_cast<Eigen::Index>(layer_sizes_[l + 1]); }
  Eigen::Index cols(std::size_t l) const { return static_cast<Eigen::Index>(layer_sizes_[l]); }

  void check_input(const Matrix& input) const {
    if (static_cast<std::size_t>(input.cols()) != input_size())
      throw DimensionError("MlpNetwork: input width " + std::to_string(input.cols()) + " != " +
                           std::to_string(input_size()));
  }

  static Matrix orthogonal(Eigen::Index r, Eigen::Index c, Rng& rng) {
    const Eigen::Index big = std::max(r, c), small = std::min(r, c);
    Eigen::MatrixXd a(big, small);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = standard_normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
    const Eigen::MatrixXd rmat = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < small; ++j)
      if (rmat(j, j) < 0) q.col(j) *= -1.0;
    if (r >= c) return q;
    return q.transpose();
  }

  std::vector<std::size_t> layer_sizes_;
  Activation activation_ = Activation::Tanh;
  std::vector<std::size_t> weight_offsets_, bias_offsets_;
  // Aligned so every layer's Map has the same alignment in every run; Eigen's
  // small products peel by alignment, which otherwise changes summation order.
  std::vector<double, Eigen::aligned_allocator<double>> params_;
};

/// Tensor-level forward: input of shape (in) or (batch, in).
inline DenseTensor forward(const MlpNetwork& net, const DenseTensor& input) {
  if (input.last_dim() != net.input_size())
    throw DimensionError("forward: input last dimension does not match the network");
  Matrix out = net.forward(input.as_matrix());
  if (input.rank() == 1)
    return DenseTensor::vector(std::vector<double>(out.data(), out.data() + out.size()));
  return DenseTensor::from_matrix(out);
}

inline double global_norm(std::span<const double> g) {
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

/// Scales `g` in place so its L2 norm is at most `max_norm`; returns the pre-clip norm.
inline double clip_global_norm(std::span<double> g, double max_norm) {
  const double norm = global_norm(g);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / (norm + 1e-6);
    for (double& v : g) v *= scale;
  }
  return norm;
}

}  // namespace seps::nn
