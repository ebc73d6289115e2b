#pragma once

// Nonlinear autoregressions Y_t = m(X_t) + noise_sd * eta(X_t) * eps_t with
// X_t = (Y_{t-1}, ..., Y_{t-d})' and eps_t i.i.d. N(0, 1).

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nlts/errors.hpp"

namespace nlts {

using Eigen::Index;

enum class DgpKind { expar, tar, far, aar, sim, sim_v, linear_ar, custom };

std::string_view to_string(DgpKind kind);
DgpKind dgp_kind_from_string(std::string_view name);

using MeanFunction = std::function<double(std::span<const double>)>;

struct DgpSpec {
  DgpKind kind = DgpKind::tar;
  int lag = 2;
  std::map<std::string, double> params;  // sim_v: "v"; linear_ar: "a1".."ad", optional "c"
  double noise_sd = 1.0;
  // Only used by DgpKind::custom. volatility defaults to 1 when empty.
  MeanFunction custom_mean;
  MeanFunction custom_volatility;

  /// Display name used in reports, e.g. "tar" or "sim_v1".
  std::string label() const;
  void validate() const;
};

// Processes of the simulation study, with their published innovation scales.
DgpSpec expar_spec();
DgpSpec tar_spec();
DgpSpec far_spec();
DgpSpec aar_spec();
DgpSpec sim_spec();
DgpSpec sim_v_spec(double v);
DgpSpec linear_ar_spec(std::vector<double> coefficients, double noise_sd, double intercept = 0.0);
DgpSpec custom_spec(int lag, MeanFunction mean, double noise_sd, MeanFunction volatility = {});

/// The eight study processes: expar, tar, far, aar, sim, sim_v with v in {0.5, 1, 5}.
std::vector<DgpSpec> study_specs();

/// Spec by kind name with default parameters (sim_v takes params["v"], default 1).
DgpSpec make_spec(DgpKind kind, const std::map<std::string, double>& params = {});

double mean_function(const DgpSpec& spec, std::span<const double> x);
double mean_function(const DgpSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd mean_function_batch(const DgpSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Innovation scale of the spec (eta is identically 1 for every study process).
double noise_sd_of(const DgpSpec& spec);

/// Burn-in then T observations, starting from zero lags. Pure in (spec, T, burn_in, seed).
Eigen::VectorXd simulate(const DgpSpec& spec, Index T, Index burn_in, std::uint64_t seed);

struct SeriesDataset {
  Eigen::MatrixXd X;  // n x d, row t = (Y_{t-1}, ..., Y_{t-d})
  Eigen::VectorXd Y;  // n
  std::optional<DgpSpec> origin;

  Index size() const { return Y.size(); }
  Index dim() const { return X.cols(); }
};

SeriesDataset embed(const Eigen::Ref<const Eigen::VectorXd>& series, Index d);

/// Rows [begin, begin + count) of a dataset.
SeriesDataset slice(const SeriesDataset& data, Index begin, Index count);

/// simulate + embed, keeping the spec as origin. Yields exactly T rows.
SeriesDataset simulate_dataset(const DgpSpec& spec, Index T, Index burn_in, std::uint64_t seed);

/// Per-coordinate affine map onto [0, 1]^d, fitted on one sample and applied to others.
struct AffineRescale {
  Eigen::VectorXd offset;
  Eigen::VectorXd scale;

  static AffineRescale fit(const Eigen::Ref<const Eigen::MatrixXd>& X);
  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& X) const;
};

/// Single-column CSV with header "y".
void write_series_csv(const Eigen::Ref<const Eigen::VectorXd>& series, const std::filesystem::path& path);
Eigen::VectorXd read_series_csv(const std::filesystem::path& path);

/// {"name", "d", "params", "noise_sd"}. Custom specs are not serialisable.
nlohmann::json spec_to_json(const DgpSpec& spec);
DgpSpec spec_from_json(const nlohmann::json& j);

/// Probabilists' Gauss-Hermite rule: E g(eps) ~ sum_i w_i g(x_i) for eps ~ N(0,1).
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};
QuadratureRule gauss_hermite(Index n);

struct DriftReport {
  double gamma_hat = 0.0;
  double margin = 0.0;  // 1 - gamma_hat
  bool pass = false;
  Index states_checked = 0;
};

/// Monte Carlo check of E[V(X_{t+1}) | X_t = x] <= gamma V(x) + c_0 + 1 with V(x) = sum_i b_i |x_i|.
/// c = (c_0, ..., c_d) must have sum_{i>=1} c_i < 1 and b = (b_1, ..., b_d) must satisfy
/// b_i > 0, c_1 + b_2 < b_1, and sum_{j>=i} c_j < b_i < b_{i-1} - c_{i-1} for i >= 2.
DriftReport drift_check(const DgpSpec& spec, std::span<const double> c, std::span<const double> b,
                        Index n_mc, std::uint64_t seed);

/// Envelope |m(x)| <= c_0 + sum_i c_i |x_i| checked on Halton points of [-radius, radius]^d.
bool membership_audit(const DgpSpec& spec, std::span<const double> c, Index n_points,
                      double box_radius, std::uint64_t seed);

}  // namespace nlts
