#pragma once

// Clipped-L1 sparse penalty J(theta) = lambda * sum_j min(|theta_j| / tau, 1).

#include <Eigen/Dense>

#include <array>
#include <cmath>

#include "nlts/errors.hpp"

namespace nlts {

struct ClippedPenalty {
  double lambda = 0.0;
  double tau = 1e-9;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("penalty: lambda must be finite and >= 0");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ParameterError("penalty: tau must be finite and > 0");
  }
};

template <typename Derived>
typename Derived::Scalar clipped_norm(const Eigen::MatrixBase<Derived>& theta,
                                      typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  if (!(tau > Scalar(0))) throw ParameterError("clipped_norm: tau must be > 0");
  return (theta.array().abs() / tau).min(Scalar(1)).sum();
}

template <typename Derived>
typename Derived::Scalar penalty_value(const ClippedPenalty& pen,
                                       const Eigen::MatrixBase<Derived>& theta) {
  using Scalar = typename Derived::Scalar;
  if (pen.lambda == 0.0) return Scalar(0);
  return Scalar(pen.lambda) * clipped_norm(theta, Scalar(pen.tau));
}

/// lambda sign(theta_j) / tau inside (0, tau); zero in the clipped region and at both kinks.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> penalty_subgradient(
    const ClippedPenalty& pen, const Eigen::MatrixBase<Derived>& theta) {
  using Scalar = typename Derived::Scalar;
  const Scalar slope = Scalar(pen.lambda / pen.tau);
  const Scalar tau = Scalar(pen.tau);
  return theta.unaryExpr([=](Scalar t) {
    const Scalar a = std::abs(t);
    if (a == Scalar(0) || a >= tau) return Scalar(0);
    return t > Scalar(0) ? slope : -slope;
  });
}

/// Candidate penalty levels c S_y (log10 T)^3 / T for c in {1/8, 1/4, 1/2, 1, 2}, ascending.
std::array<double, 5> lambda_grid(double sample_variance, long long T);

/// The slowly increasing factor iota_lambda in the theoretical schedule.
struct IotaFunction {
  enum class Kind { log_squared, log_power } kind = Kind::log_squared;
  double power = 2.0;  // used by log_power; must exceed 1

  double operator()(double x) const;
};

/// F^2 iota(T) (ln T)^{2 + nu0} / T.
double theoretical_lambda(double F, double T, double nu0, const IotaFunction& iota = {});

}  // namespace nlts
