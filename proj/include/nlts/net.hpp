#pragma once

// Feedforward networks f(x) = A_{L+1} o sigma o A_L o ... o sigma o A_1 (x)
// with scalar output, plus the clamped/cube-supported estimator wrapper.
//
// Parameters are ordered as vec(W_1), b_1, ..., vec(W_{L+1}), b_{L+1}, with
// column-major vectorisation, which matches Eigen's default storage order.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "nlts/errors.hpp"

namespace nlts {

using Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class Activation { relu, sigmoid };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

/// Network shape (L, p): input dimension p_0 = d, hidden widths p_1..p_L, and p_{L+1} = 1.
struct Architecture {
  Index input_dim = 1;
  std::vector<Index> widths;
  Activation activation = Activation::relu;

  static Architecture uniform(Index input_dim, Index depth, Index width,
                              Activation activation = Activation::relu);

  Index depth() const { return static_cast<Index>(widths.size()); }

  /// p_l for l = 0..L+1.
  Index layer_size(Index l) const {
    if (l == 0) return input_dim;
    if (l == depth() + 1) return 1;
    return widths[static_cast<std::size_t>(l - 1)];
  }

  /// sum_l (p_{l-1} p_l + p_l)
  Index num_params() const {
    Index total = 0;
    for (Index l = 1; l <= depth() + 1; ++l) total += layer_size(l - 1) * layer_size(l) + layer_size(l);
    return total;
  }

  void validate() const;

  bool operator==(const Architecture&) const = default;
};

template <typename Scalar>
class Mlp {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  Mlp() = default;

  /// All-zero network of the given shape.
  explicit Mlp(Architecture arch) : arch_(std::move(arch)) {
    arch_.validate();
    const Index maps = arch_.depth() + 1;
    weights_.reserve(static_cast<std::size_t>(maps));
    biases_.reserve(static_cast<std::size_t>(maps));
    for (Index l = 1; l <= maps; ++l) {
      weights_.push_back(Matrix::Zero(arch_.layer_size(l), arch_.layer_size(l - 1)));
      biases_.push_back(Vector::Zero(arch_.layer_size(l)));
    }
  }

  const Architecture& arch() const { return arch_; }

  /// Number of affine maps, L + 1.
  Index num_maps() const { return static_cast<Index>(weights_.size()); }
  Index num_params() const { return arch_.num_params(); }

  // Layer index k = 0..L addresses A_{k+1}.
  const Matrix& weight(Index k) const { return weights_[static_cast<std::size_t>(k)]; }
  Matrix& weight(Index k) { return weights_[static_cast<std::size_t>(k)]; }
  const Vector& bias(Index k) const { return biases_[static_cast<std::size_t>(k)]; }
  Vector& bias(Index k) { return biases_[static_cast<std::size_t>(k)]; }

  bool operator==(const Mlp& other) const {
    if (!(arch_ == other.arch_)) return false;
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      if (weights_[k] != other.weights_[k] || biases_[k] != other.biases_[k]) return false;
    }
    return true;
  }

 private:
  Architecture arch_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

using Mlpd = Mlp<double>;

namespace detail {

template <typename Derived>
auto activate(Activation a, const Eigen::ArrayBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  using Out = Eigen::Array<Scalar, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>;
  if (a == Activation::relu) return Out(z.max(Scalar(0)));
  return Out(Scalar(1) / (Scalar(1) + (-z).exp()));
}

// Derivative evaluated from the preactivation z; relu'(0) := 0.
template <typename Derived>
auto activate_derivative(Activation a, const Eigen::ArrayBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  using Out = Eigen::Array<Scalar, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>;
  if (a == Activation::relu) return Out((z > Scalar(0)).template cast<Scalar>());
  const Out s = Scalar(1) / (Scalar(1) + (-z).exp());
  return Out(s * (Scalar(1) - s));
}

}  // namespace detail

/// Glorot-uniform weights scaled by `scale`, zero biases. Deterministic in `seed`.
template <typename Scalar>
Mlp<Scalar> init_network(const Architecture& arch, Scalar scale, std::uint64_t seed) {
  if (!(scale >= Scalar(0)) || !std::isfinite(static_cast<double>(scale)))
    throw ParameterError("init_network: scale must be finite and nonnegative");
  Mlp<Scalar> net(arch);
  std::mt19937_64 rng(seed);
  for (Index k = 0; k < net.num_maps(); ++k) {
    auto& w = net.weight(k);
    const double limit =
        static_cast<double>(scale) * std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Index j = 0; j < w.size(); ++j) w.data()[j] = static_cast<Scalar>(dist(rng));
    if (limit == 0.0) w.setZero();
  }
  return net;
}

/// Activations cached by a batch forward pass; columns are samples.
template <typename Scalar>
struct ForwardPass {
  std::vector<MatrixX<Scalar>> preactivations;  // Z_1..Z_L
  std::vector<MatrixX<Scalar>> activations;     // A_0 = X', A_1..A_L
  VectorX<Scalar> output;                       // length n
};

/// Batch forward pass over the rows of `inputs` (n x d).
template <typename Scalar>
ForwardPass<Scalar> forward_pass(const Mlp<Scalar>& net,
                                 const Eigen::Ref<const MatrixX<std::type_identity_t<Scalar>>>& inputs) {
  const Architecture& arch = net.arch();
  if (inputs.cols() != arch.input_dim)
    throw DimensionError("forward: expected " + std::to_string(arch.input_dim) +
                         " input columns, got " + std::to_string(inputs.cols()));
  ForwardPass<Scalar> pass;
  pass.preactivations.reserve(static_cast<std::size_t>(arch.depth()));
  pass.activations.reserve(static_cast<std::size_t>(arch.depth() + 1));
  pass.activations.push_back(inputs.transpose());
  for (Index k = 0; k < arch.depth(); ++k) {
    MatrixX<Scalar> z = net.weight(k) * pass.activations.back();
    z.colwise() += net.bias(k);
    pass.activations.push_back(detail::activate(arch.activation, z.array()).matrix());
    pass.preactivations.push_back(std::move(z));
  }
  const Index last = arch.depth();
  MatrixX<Scalar> out = net.weight(last) * pass.activations.back();
  out.colwise() += net.bias(last);
  pass.output = out.row(0).transpose();
  return pass;
}

template <typename Scalar>
VectorX<Scalar> forward_batch(const Mlp<Scalar>& net,
                              const Eigen::Ref<const MatrixX<std::type_identity_t<Scalar>>>& inputs) {
  return forward_pass(net, inputs).output;
}

template <typename Scalar, typename Derived>
Scalar forward(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != net.arch().input_dim)
    throw DimensionError("forward: input has length " + std::to_string(x.size()) +
                         ", network expects " + std::to_string(net.arch().input_dim));
  VectorX<Scalar> a = x.template cast<Scalar>();
  for (Index k = 0; k < net.arch().depth(); ++k) {
    VectorX<Scalar> z = net.weight(k) * a + net.bias(k);
    a = detail::activate(net.arch().activation, z.array()).matrix();
  }
  const Index last = net.arch().depth();
  return (net.weight(last) * a + net.bias(last))(0);
}

template <typename Scalar>
VectorX<Scalar> flatten_params(const Mlp<Scalar>& net) {
  VectorX<Scalar> theta(net.num_params());
  Index pos = 0;
  for (Index k = 0; k < net.num_maps(); ++k) {
    const auto& w = net.weight(k);
    const auto& b = net.bias(k);
    theta.segment(pos, w.size()) = Eigen::Map<const VectorX<Scalar>>(w.data(), w.size());
    pos += w.size();
    theta.segment(pos, b.size()) = b;
    pos += b.size();
  }
  return theta;
}

template <typename Scalar>
Mlp<Scalar> unflatten_params(const Architecture& arch,
                             const Eigen::Ref<const VectorX<Scalar>>& theta) {
  Mlp<Scalar> net(arch);
  if (theta.size() != net.num_params())
    throw DimensionError("unflatten_params: expected " + std::to_string(net.num_params()) +
                         " parameters, got " + std::to_string(theta.size()));
  Index pos = 0;
  for (Index k = 0; k < net.num_maps(); ++k) {
    auto& w = net.weight(k);
    auto& b = net.bias(k);
    Eigen::Map<VectorX<Scalar>>(w.data(), w.size()) = theta.segment(pos, w.size());
    pos += w.size();
    b = theta.segment(pos, b.size());
    pos += b.size();
  }
  return net;
}

/// Gradient of sum_i loss_i with respect to theta, given dloss_i/df(x_i), from a cached pass.
template <typename Scalar>
VectorX<Scalar> gradient(const Mlp<Scalar>& net, const ForwardPass<Scalar>& pass,
                         const Eigen::Ref<const VectorX<std::type_identity_t<Scalar>>>& residual_grads) {
  const Architecture& arch = net.arch();
  const Index n = pass.output.size();
  if (residual_grads.size() != n)
    throw DimensionError("backprop: " + std::to_string(residual_grads.size()) +
                         " residual gradients for " + std::to_string(n) + " samples");

  // Offsets of each layer's block in flatten_params order.
  std::vector<Index> offset(static_cast<std::size_t>(net.num_maps()));
  Index pos = 0;
  for (Index k = 0; k < net.num_maps(); ++k) {
    offset[static_cast<std::size_t>(k)] = pos;
    pos += net.weight(k).size() + net.bias(k).size();
  }

  VectorX<Scalar> grad(net.num_params());
  MatrixX<Scalar> delta = residual_grads.transpose();  // p_{k+1} x n
  for (Index k = net.num_maps() - 1; k >= 0; --k) {
    const auto& w = net.weight(k);
    const auto& a_in = pass.activations[static_cast<std::size_t>(k)];
    const Index off = offset[static_cast<std::size_t>(k)];
    Eigen::Map<MatrixX<Scalar>> grad_w(grad.data() + off, w.rows(), w.cols());
    grad_w.noalias() = delta * a_in.transpose();
    grad.segment(off + w.size(), w.rows()) = delta.rowwise().sum().transpose();
    if (k > 0) {
      MatrixX<Scalar> back = w.transpose() * delta;
      delta = back.cwiseProduct(detail::activate_derivative(
                                    arch.activation,
                                    pass.preactivations[static_cast<std::size_t>(k - 1)].array())
                                    .matrix());
    }
  }
  return grad;
}

template <typename Scalar>
VectorX<Scalar> backprop(const Mlp<Scalar>& net, const Eigen::Ref<const MatrixX<std::type_identity_t<Scalar>>>& inputs,
                         const Eigen::Ref<const VectorX<std::type_identity_t<Scalar>>>& residual_grads) {
  if (inputs.rows() != residual_grads.size())
    throw DimensionError("backprop: inputs have " + std::to_string(inputs.rows()) +
                         " rows but " + std::to_string(residual_grads.size()) +
                         " residual gradients were given");
  return gradient(net, forward_pass(net, inputs), residual_grads);
}

/// |theta|_0 with entries at or below `tol` in magnitude treated as zero.
template <typename Derived>
Index count_nonzero(const Eigen::MatrixBase<Derived>& theta, typename Derived::Scalar tol) {
  if (tol < 0) throw ParameterError("count_nonzero: tol must be nonnegative");
  return (theta.array().abs() > tol).count();
}

/// |theta|_inf, for auditing the weight bound B post hoc.
template <typename Derived>
typename Derived::Scalar max_abs_param(const Eigen::MatrixBase<Derived>& theta) {
  return theta.size() == 0 ? typename Derived::Scalar(0) : theta.cwiseAbs().maxCoeff();
}

/// Global Lipschitz constant bound: product of spectral norms times the activation's slope bound.
template <typename Scalar>
Scalar lipschitz_bound(const Mlp<Scalar>& net) {
  const Scalar slope = net.arch().activation == Activation::relu ? Scalar(1) : Scalar(0.25);
  Scalar bound(1);
  for (Index k = 0; k < net.num_maps(); ++k) {
    Eigen::JacobiSVD<MatrixX<Scalar>> svd(net.weight(k));
    bound *= svd.singularValues()(0);
    if (k + 1 < net.num_maps()) bound *= slope;
  }
  return bound;
}

/// f 1_{[0,1]^d} with |f| <= F.
template <typename Scalar>
struct TruncatedEstimator {
  Mlp<Scalar> net;
  Scalar clamp = Scalar(1);
  bool cube_support = false;
};

using TruncatedEstimatord = TruncatedEstimator<double>;

template <typename Derived>
bool in_unit_cube(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return (x.array() >= Scalar(0)).all() && (x.array() <= Scalar(1)).all();
}

template <typename Scalar, typename Derived>
Scalar truncated_predict(const TruncatedEstimator<Scalar>& est,
                         const Eigen::MatrixBase<Derived>& x) {
  const Scalar raw = forward(est.net, x);
  if (est.cube_support && !in_unit_cube(x)) return Scalar(0);
  return std::clamp(raw, -est.clamp, est.clamp);
}

template <typename Scalar>
VectorX<Scalar> truncated_predict_batch(const TruncatedEstimator<Scalar>& est,
                                        const Eigen::Ref<const MatrixX<std::type_identity_t<Scalar>>>& inputs) {
  VectorX<Scalar> out = forward_batch(est.net, inputs).cwiseMax(-est.clamp).cwiseMin(est.clamp);
  if (est.cube_support) {
    for (Index i = 0; i < inputs.rows(); ++i) {
      if (!in_unit_cube(inputs.row(i))) out(i) = Scalar(0);
    }
  }
  return out;
}

}  // namespace nlts
