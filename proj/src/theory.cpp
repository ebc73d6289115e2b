#include "nlts/theory.hpp"

#include <cmath>
#include <string>

namespace nlts {

namespace {

void check_class(const NetworkClassParams& p) {
  if (!(p.S > 0.0 && p.L > 0.0 && p.N > 0.0)) throw ParameterError("network class: S, L, N must be > 0");
  if (!(p.B >= 1.0)) throw ParameterError("network class: B must be >= 1");
  if (!(p.F > 0.0)) throw ParameterError("network class: F must be > 0");
}

}  // namespace

double covering_bound_sparse(const NetworkClassParams& p, double delta) {
  check_class(p);
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("covering bound: delta must lie in (0, 1)");
  return 2.0 * p.S * (p.L + 1.0) * std::log((p.L + 1.0) * (p.N + 1.0) * p.B / delta);
}

double clipped_delta_floor(const NetworkClassParams& p) {
  const double tau = p.tau.value_or(0.0);
  if (!(tau >= 0.0)) throw ParameterError("covering bound: tau must be >= 0");
  return tau * (p.L + 1.0) * std::pow((p.N + 1.0) * p.B, p.L + 1.0);
}

double covering_bound_clipped(const NetworkClassParams& p, double delta) {
  check_class(p);
  const double floor = clipped_delta_floor(p);
  if (!(delta > floor && delta < 1.0))
    throw ParameterError("clipped covering bound: delta must lie in (tau (L+1)((N+1)B)^{L+1}, 1) = (" +
                         std::to_string(floor) + ", 1)");
  return 2.0 * p.S * (p.L + 1.0) * std::log((p.L + 1.0) * (p.N + 1.0) * p.B / (delta - floor));
}

void CompositionClass::validate() const {
  if (q < 0) throw ParameterError("composition class: q must be >= 0");
  const auto layers = static_cast<std::size_t>(q + 1);
  if (beta.size() != layers || t.size() != layers)
    throw ParameterError("composition class: need q+1 = " + std::to_string(layers) + " values of beta and t");
  for (std::size_t i = 0; i < layers; ++i) {
    if (!(beta[i] > 0.0)) throw ParameterError("composition class: beta must be > 0");
    if (t[i] < 1) throw ParameterError("composition class: t must be >= 1");
  }
  if (!d.empty()) {
    if (d.size() != layers + 1) throw ParameterError("composition class: need q+2 dimensions d_0..d_{q+1}");
    if (d.back() != 1) throw ParameterError("composition class: d_{q+1} must be 1");
    for (std::size_t i = 0; i < layers; ++i) {
      if (t[i] > d[i]) throw ParameterError("composition class: t_i must not exceed d_i");
    }
  }
  if (!(A > 0.0)) throw ParameterError("composition class: A must be > 0");
}

RateReport phi_rate(const CompositionClass& cls, double T) {
  cls.validate();
  if (!(T >= 2.0)) throw ParameterError("phi_rate: T must be >= 2");
  const auto layers = static_cast<Index>(cls.q + 1);
  RateReport r;
  r.beta_star.resize(layers);
  double downstream = 1.0;
  for (Index i = layers - 1; i >= 0; --i) {
    r.beta_star(i) = cls.beta[static_cast<std::size_t>(i)] * downstream;
    downstream *= std::min(cls.beta[static_cast<std::size_t>(i)], 1.0);
  }
  r.phi = 0.0;
  r.kappa = 0.0;
  for (Index i = 0; i < layers; ++i) {
    const double bs = r.beta_star(i);
    const double ti = cls.t[static_cast<std::size_t>(i)];
    r.phi = std::max(r.phi, std::pow(T, -2.0 * bs / (2.0 * bs + ti)));
    r.kappa = std::max(r.kappa, ti / (2.0 * bs));
  }
  return r;
}

double sparsity_budget(double kappa, double T, double r, double C_S) {
  if (!(kappa >= 0.0)) throw ParameterError("sparsity_budget: kappa must be >= 0");
  if (!(T >= 3.0)) throw ParameterError("sparsity_budget: T must be >= 3");
  return C_S * std::pow(T, kappa / (kappa + 1.0)) * std::pow(std::log(T), r);
}

double risk_bound_rate_term(const NetworkClassParams& p, double T) {
  check_class(p);
  if (!(T >= 3.0)) throw ParameterError("rate term: T must be >= 3");
  return p.F * p.F * p.S * (p.L + 1.0) * std::log((p.L + 1.0) * (p.N + 1.0) * p.B * T) * std::log(T) / T;
}

Mlpd indicator_net(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 0.5)) throw ParameterError("indicator_net: epsilon must lie in (0, 1/2]");
  Mlpd net(Architecture{1, {3, 1}, Activation::relu});
  net.weight(0) << 1.0, 1.0, -1.0;
  net.bias(0) << 1.0, 0.0, 0.0;
  net.weight(1) << 1.0, -1.0, -1.0 / epsilon;
  net.weight(2) << 1.0;
  return net;
}

double l2_distance(const std::function<double(double)>& f, const std::function<double(double)>& g, double a,
                   double b, Index nodes) {
  if (nodes < 2) throw ParameterError("l2_distance: nodes must be >= 2");
  if (!(b > a)) throw ParameterError("l2_distance: empty interval");
  const double h = (b - a) / static_cast<double>(nodes);
  double sum = 0.0;
  for (Index i = 0; i < nodes; ++i) {
    const double x = a + (static_cast<double>(i) + 0.5) * h;
    const double diff = f(x) - g(x);
    sum += diff * diff;
  }
  return sum * h;
}

double l2_distance(const std::function<double(double, double)>& f, const std::function<double(double, double)>& g,
                   const Eigen::Vector2d& lo, const Eigen::Vector2d& hi, Index nodes) {
  if (nodes < 2) throw ParameterError("l2_distance: nodes must be >= 2");
  if (!(hi.array() > lo.array()).all()) throw ParameterError("l2_distance: empty box");
  const Eigen::Vector2d h = (hi - lo) / static_cast<double>(nodes);
  double sum = 0.0;
  for (Index i = 0; i < nodes; ++i) {
    const double x = lo(0) + (static_cast<double>(i) + 0.5) * h(0);
    for (Index j = 0; j < nodes; ++j) {
      const double y = lo(1) + (static_cast<double>(j) + 0.5) * h(1);
      const double diff = f(x, y) - g(x, y);
      sum += diff * diff;
    }
  }
  return sum * h(0) * h(1);
}

}  // namespace nlts
