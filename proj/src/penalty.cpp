#include "nlts/penalty.hpp"

namespace nlts {

std::array<double, 5> lambda_grid(double sample_variance, long long T) {
  if (T < 2) throw ParameterError("lambda_grid: T must be >= 2");
  if (!(sample_variance > 0.0)) throw ParameterError("lambda_grid: sample variance must be > 0");
  const double lg = std::log10(static_cast<double>(T));
  const double base = sample_variance * lg * lg * lg / static_cast<double>(T);
  return {base / 8.0, base / 4.0, base / 2.0, base, 2.0 * base};
}

double IotaFunction::operator()(double x) const {
  const double l = std::log(x);
  if (kind == Kind::log_squared) return l * l;
  if (!(power > 1.0)) throw ParameterError("iota: log power must exceed 1");
  return std::pow(l, power);
}

double theoretical_lambda(double F, double T, double nu0, const IotaFunction& iota) {
  if (T < 3.0) throw ParameterError("theoretical_lambda: T must be >= 3");
  if (!(F >= 1.0)) throw ParameterError("theoretical_lambda: F must be >= 1");
  if (!(nu0 > 0.0)) throw ParameterError("theoretical_lambda: nu0 must be > 0");
  return F * F * iota(T) * std::pow(std::log(T), 2.0 + nu0) / T;
}

}  // namespace nlts
