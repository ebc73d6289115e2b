#pragma once

// Rate and complexity calculators for sparse deep-network classes. Only the explicit rate
// terms are evaluated; unknown multiplicative constants are left to the caller.

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

#include "nlts/net.hpp"

namespace nlts {

/// Sparse network class F(L, N, B, F, S), optionally with clipping threshold tau.
struct NetworkClassParams {
  double S = 1.0;  // sparsity (or clipped-norm budget)
  double L = 1.0;  // depth
  double N = 1.0;  // width
  double B = 1.0;  // max-entry bound
  double F = 1.0;  // sup-norm bound
  std::optional<double> tau;
};

/// 2 S (L+1) log((L+1)(N+1) B / delta), delta in (0, 1), B >= 1.
double covering_bound_sparse(const NetworkClassParams& p, double delta);

/// Smallest admissible delta for the clipped class: tau (L+1) ((N+1) B)^{L+1}.
double clipped_delta_floor(const NetworkClassParams& p);

/// 2 S (L+1) log((L+1)(N+1) B / (delta - tau (L+1)((N+1)B)^{L+1})) for delta above the floor and below 1.
double covering_bound_clipped(const NetworkClassParams& p, double delta);

/// Composition class g_q o ... o g_0 with smoothness beta_i and effective input dimension t_i.
struct CompositionClass {
  int q = 0;
  std::vector<int> d;  // d_0..d_{q+1}, d_{q+1} = 1; may be left empty
  std::vector<int> t;  // t_0..t_q
  std::vector<double> beta;  // beta_0..beta_q
  double A = 1.0;

  void validate() const;
};

struct RateReport {
  Eigen::VectorXd beta_star;
  double phi = 0.0;
  double kappa = 0.0;
};

/// beta*_i = beta_i prod_{l>i} min(beta_l, 1); phi_T = max_i T^{-2 beta*_i / (2 beta*_i + t_i)};
/// kappa = max_i t_i / (2 beta*_i).
RateReport phi_rate(const CompositionClass& cls, double T);

/// C_S T^{kappa/(kappa+1)} (ln T)^r.
double sparsity_budget(double kappa, double T, double r, double C_S);

/// F^2 S (L+1) log((L+1)(N+1) B T) log(T) / T, without the leading constant.
double risk_bound_rate_term(const NetworkClassParams& p, double T);

/// Two-hidden-layer relu network x -> relu(relu(x+1) - relu(x) - relu(-x)/eps), eps in (0, 1/2].
Mlpd indicator_net(double epsilon);

/// Squared L2 distance by composite midpoint rule with `nodes` cells on [a, b].
double l2_distance(const std::function<double(double)>& f, const std::function<double(double)>& g, double a,
                   double b, Index nodes);

/// Squared L2 distance on the box [lo, hi] in R^2 with nodes x nodes midpoint cells.
double l2_distance(const std::function<double(double, double)>& f, const std::function<double(double, double)>& g,
                   const Eigen::Vector2d& lo, const Eigen::Vector2d& hi, Index nodes);

}  // namespace nlts
