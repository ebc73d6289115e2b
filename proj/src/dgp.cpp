#include "nlts/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "nlts/format.hpp"

namespace nlts {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double logistic(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

int published_lag(DgpKind kind) {
  switch (kind) {
    case DgpKind::expar:
    case DgpKind::tar:
    case DgpKind::far:
    case DgpKind::aar:
    case DgpKind::sim:
      return 2;
    case DgpKind::sim_v:
      return 4;
    case DgpKind::linear_ar:
    case DgpKind::custom:
      return 0;
  }
  return 0;
}

double published_noise_sd(DgpKind kind) {
  switch (kind) {
    case DgpKind::expar:
      return 0.2;
    case DgpKind::far:
      return 0.5;
    case DgpKind::sim:
      return 0.1;
    default:
      return 1.0;
  }
}

double param(const DgpSpec& spec, const std::string& key, double fallback) {
  const auto it = spec.params.find(key);
  return it == spec.params.end() ? fallback : it->second;
}

}  // namespace

std::string_view to_string(DgpKind kind) {
  switch (kind) {
    case DgpKind::expar:
      return "expar";
    case DgpKind::tar:
      return "tar";
    case DgpKind::far:
      return "far";
    case DgpKind::aar:
      return "aar";
    case DgpKind::sim:
      return "sim";
    case DgpKind::sim_v:
      return "sim_v";
    case DgpKind::linear_ar:
      return "linear_ar";
    case DgpKind::custom:
      return "custom";
  }
  return "custom";
}

DgpKind dgp_kind_from_string(std::string_view name) {
  for (DgpKind k : {DgpKind::expar, DgpKind::tar, DgpKind::far, DgpKind::aar, DgpKind::sim,
                    DgpKind::sim_v, DgpKind::linear_ar, DgpKind::custom}) {
    if (to_string(k) == name) return k;
  }
  throw ParameterError("unknown model '" + std::string(name) + "'");
}

std::string DgpSpec::label() const {
  if (kind == DgpKind::sim_v) return "sim_v" + format_double(param(*this, "v", 1.0));
  return std::string(to_string(kind));
}

void DgpSpec::validate() const {
  if (lag < 1) throw ParameterError("model: lag order must be >= 1");
  const int expected = published_lag(kind);
  if (expected != 0 && lag != expected)
    throw ParameterError("model " + std::string(to_string(kind)) + " has lag order " +
                         std::to_string(expected) + ", got " + std::to_string(lag));
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ParameterError("model: noise_sd must be finite and >= 0");
  if (kind == DgpKind::custom && !custom_mean) throw ParameterError("custom model needs a mean function");
  if (kind == DgpKind::sim_v && !std::isfinite(param(*this, "v", 1.0)))
    throw ParameterError("sim_v: v must be finite");
  if (kind == DgpKind::linear_ar) {
    for (const auto& [key, value] : params) {
      if (key == "c") continue;
      if (key.size() < 2 || key[0] != 'a') throw ParameterError("linear_ar: unexpected parameter '" + key + "'");
      const int i = std::stoi(key.substr(1));
      if (i < 1 || i > lag) throw ParameterError("linear_ar: coefficient '" + key + "' exceeds lag order");
    }
  }
}

DgpSpec expar_spec() { return make_spec(DgpKind::expar); }
DgpSpec tar_spec() { return make_spec(DgpKind::tar); }
DgpSpec far_spec() { return make_spec(DgpKind::far); }
DgpSpec aar_spec() { return make_spec(DgpKind::aar); }
DgpSpec sim_spec() { return make_spec(DgpKind::sim); }
DgpSpec sim_v_spec(double v) { return make_spec(DgpKind::sim_v, {{"v", v}}); }

DgpSpec linear_ar_spec(std::vector<double> coefficients, double noise_sd, double intercept) {
  DgpSpec spec;
  spec.kind = DgpKind::linear_ar;
  spec.lag = static_cast<int>(coefficients.size());
  for (std::size_t i = 0; i < coefficients.size(); ++i) spec.params["a" + std::to_string(i + 1)] = coefficients[i];
  if (intercept != 0.0) spec.params["c"] = intercept;
  spec.noise_sd = noise_sd;
  spec.validate();
  return spec;
}

DgpSpec custom_spec(int lag, MeanFunction mean, double noise_sd, MeanFunction volatility) {
  DgpSpec spec;
  spec.kind = DgpKind::custom;
  spec.lag = lag;
  spec.noise_sd = noise_sd;
  spec.custom_mean = std::move(mean);
  spec.custom_volatility = std::move(volatility);
  spec.validate();
  return spec;
}

std::vector<DgpSpec> study_specs() {
  return {expar_spec(), tar_spec(), far_spec(), aar_spec(), sim_spec(),
          sim_v_spec(0.5), sim_v_spec(1.0), sim_v_spec(5.0)};
}

DgpSpec make_spec(DgpKind kind, const std::map<std::string, double>& params) {
  if (kind == DgpKind::custom) throw ParameterError("custom models are built with custom_spec()");
  DgpSpec spec;
  spec.kind = kind;
  spec.params = params;
  spec.noise_sd = published_noise_sd(kind);
  if (kind == DgpKind::linear_ar) {
    int lag = 0;
    for (const auto& [key, value] : params) {
      if (key != "c" && key.size() >= 2 && key[0] == 'a') lag = std::max(lag, std::stoi(key.substr(1)));
    }
    spec.lag = std::max(lag, 1);
  } else {
    spec.lag = published_lag(kind);
  }
  if (kind == DgpKind::sim_v && !spec.params.count("v")) spec.params["v"] = 1.0;
  for (const auto& [key, value] : spec.params) {
    if (kind == DgpKind::sim_v && key != "v") throw ParameterError("sim_v: unexpected parameter '" + key + "'");
    if (kind != DgpKind::sim_v && kind != DgpKind::linear_ar)
      throw ParameterError(std::string(to_string(kind)) + ": takes no parameters");
  }
  spec.validate();
  return spec;
}

double mean_function(const DgpSpec& spec, std::span<const double> x) {
  if (static_cast<int>(x.size()) != spec.lag)
    throw DimensionError("mean_function: " + spec.label() + " expects " + std::to_string(spec.lag) +
                         " lags, got " + std::to_string(x.size()));
  switch (spec.kind) {
    case DgpKind::expar: {
      const double y1 = x[0], y2 = x[1];
      const double e = std::exp(-3.89 * y1 * y1);
      const double a1 = 0.138 + (0.316 + 0.982 * y1) * e;
      const double a2 = -0.437 - (0.659 + 1.260 * y1) * e;
      return a1 * y1 + a2 * y2;
    }
    case DgpKind::tar: {
      const double y1 = x[0], y2 = x[1];
      // Integer coefficients over 10 round once, so decimal inputs give exact decimal outputs.
      return (y1 <= 1.0 ? 4.0 * y1 - 6.0 * y2 : -8.0 * y1 + 2.0 * y2) / 10.0;
    }
    case DgpKind::far: {
      const double y1 = x[0], y2 = x[1];
      return -y2 * std::exp(-y2 * y2 / 2.0) + std::cos(1.5 * y2) * y1 / (1.0 + y2 * y2);
    }
    case DgpKind::aar: {
      const double y1 = x[0], y2 = x[1];
      return 4.0 * y1 / (1.0 + 0.8 * y1 * y1) + logistic(3.0 * (y2 - 2.0));
    }
    case DgpKind::sim: {
      const double y1 = x[0], y2 = x[1];
      const double z = (8.0 * y1 + 6.0 * y2 - 6.0) / 10.0;
      return std::exp(-8.0 * z * z) + 0.5 * std::sin(2.0 * std::numbers::pi * z) * y1;
    }
    case DgpKind::sim_v: {
      const double v = param(spec, "v", 1.0);
      const double z = x[0] + x[1] - x[2] - x[3];
      return (normal_cdf(-v * z) - 0.5) * x[0] + (normal_cdf(2.0 * v * z) - 0.6) * x[1];
    }
    case DgpKind::linear_ar: {
      double m = param(spec, "c", 0.0);
      for (int i = 0; i < spec.lag; ++i) m += param(spec, "a" + std::to_string(i + 1), 0.0) * x[static_cast<std::size_t>(i)];
      return m;
    }
    case DgpKind::custom:
      return spec.custom_mean(x);
  }
  return 0.0;
}

double mean_function(const DgpSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return mean_function(spec, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

Eigen::VectorXd mean_function_batch(const DgpSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X) {
  Eigen::VectorXd out(X.rows());
  std::vector<double> row(static_cast<std::size_t>(X.cols()));
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) row[static_cast<std::size_t>(j)] = X(i, j);
    out(i) = mean_function(spec, row);
  }
  return out;
}

double noise_sd_of(const DgpSpec& spec) { return spec.noise_sd; }

namespace {

double volatility(const DgpSpec& spec, std::span<const double> x) {
  if (spec.kind == DgpKind::custom && spec.custom_volatility) return spec.custom_volatility(x);
  return 1.0;
}

}  // namespace

Eigen::VectorXd simulate(const DgpSpec& spec, Index T, Index burn_in, std::uint64_t seed) {
  spec.validate();
  if (T < 1) throw ParameterError("simulate: T must be >= 1");
  if (burn_in < 0) throw ParameterError("simulate: burn_in must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> eps(0.0, 1.0);

  const auto d = static_cast<std::size_t>(spec.lag);
  std::vector<double> lags(d, 0.0);  // (Y_{t-1}, ..., Y_{t-d})
  Eigen::VectorXd out(T);
  const Index total = burn_in + T;
  for (Index t = 0; t < total; ++t) {
    const double m = mean_function(spec, lags);
    const double y = m + spec.noise_sd * volatility(spec, lags) * eps(rng);
    if (!std::isfinite(y))
      throw SimulationError("simulate: " + spec.label() + " produced a non-finite value at t=" + std::to_string(t));
    std::rotate(lags.rbegin(), lags.rbegin() + 1, lags.rend());
    lags[0] = y;
    if (t >= burn_in) out(t - burn_in) = y;
  }
  return out;
}

SeriesDataset embed(const Eigen::Ref<const Eigen::VectorXd>& series, Index d) {
  if (d < 1) throw ParameterError("embed: d must be >= 1");
  if (series.size() < d + 1)
    throw DimensionError("embed: series of length " + std::to_string(series.size()) +
                         " is too short for lag order " + std::to_string(d));
  const Index n = series.size() - d;
  SeriesDataset data;
  data.X.resize(n, d);
  data.Y = series.tail(n);
  for (Index t = 0; t < n; ++t) {
    for (Index j = 0; j < d; ++j) data.X(t, j) = series(d + t - 1 - j);
  }
  return data;
}

SeriesDataset slice(const SeriesDataset& data, Index begin, Index count) {
  if (begin < 0 || count < 0 || begin + count > data.size()) throw DimensionError("slice: range out of bounds");
  SeriesDataset out;
  out.X = data.X.middleRows(begin, count);
  out.Y = data.Y.segment(begin, count);
  out.origin = data.origin;
  return out;
}

SeriesDataset simulate_dataset(const DgpSpec& spec, Index T, Index burn_in, std::uint64_t seed) {
  SeriesDataset data = embed(simulate(spec, T + spec.lag, burn_in, seed), spec.lag);
  data.origin = spec;
  return data;
}

AffineRescale AffineRescale::fit(const Eigen::Ref<const Eigen::MatrixXd>& X) {
  if (X.rows() == 0) throw DimensionError("rescale: empty sample");
  AffineRescale r;
  r.offset = X.colwise().minCoeff().transpose();
  const Eigen::VectorXd range = X.colwise().maxCoeff().transpose() - r.offset;
  r.scale = range.unaryExpr([](double w) { return w > 0.0 ? 1.0 / w : 1.0; });
  return r;
}

Eigen::MatrixXd AffineRescale::apply(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  if (X.cols() != offset.size()) throw DimensionError("rescale: dimension mismatch");
  return ((X.rowwise() - offset.transpose()).array().rowwise() * scale.transpose().array()).matrix();
}

void write_series_csv(const Eigen::Ref<const Eigen::VectorXd>& series, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "y\n";
  for (Index i = 0; i < series.size(); ++i) out << format_double(series(i)) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

Eigen::VectorXd read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "y") throw FormatError(path.string() + ": expected header 'y'");
  std::vector<double> values;
  Index lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    try {
      values.push_back(parse_double(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
}

nlohmann::json spec_to_json(const DgpSpec& spec) {
  if (spec.kind == DgpKind::custom) throw FormatError("custom models cannot be serialised");
  return nlohmann::json{{"name", std::string(to_string(spec.kind))},
                        {"d", spec.lag},
                        {"params", spec.params},
                        {"noise_sd", spec.noise_sd}};
}

DgpSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("model: expected a JSON object");
  static const std::set<std::string> allowed{"name", "d", "params", "noise_sd"};
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw FormatError("model: unknown key '" + key + "'");
  }
  try {
    const DgpKind kind = dgp_kind_from_string(j.at("name").get<std::string>());
    std::map<std::string, double> params;
    if (j.contains("params")) params = j.at("params").get<std::map<std::string, double>>();
    DgpSpec spec = make_spec(kind, params);
    if (j.contains("noise_sd")) spec.noise_sd = j.at("noise_sd").get<double>();
    if (j.contains("d")) {
      const int d = j.at("d").get<int>();
      if (kind == DgpKind::linear_ar && d >= spec.lag) spec.lag = d;
      if (d != spec.lag) throw FormatError("model: d=" + std::to_string(d) + " does not match " + spec.label());
    }
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model JSON: ") + e.what());
  }
}

QuadratureRule gauss_hermite(Index n) {
  if (n < 1) throw ParameterError("gauss_hermite: n must be >= 1");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite recurrence.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (Index k = 1; k < n; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  QuadratureRule rule;
  rule.nodes = eig.eigenvalues();
  rule.weights = eig.eigenvectors().row(0).transpose().array().square();
  return rule;
}

namespace {

void validate_envelope(const DgpSpec& spec, std::span<const double> c) {
  if (static_cast<int>(c.size()) != spec.lag + 1)
    throw ParameterError("envelope: expected " + std::to_string(spec.lag + 1) + " coefficients c_0..c_d");
  for (double ci : c) {
    if (!(ci >= 0.0)) throw ParameterError("envelope: coefficients must be >= 0");
  }
}

}  // namespace

DriftReport drift_check(const DgpSpec& spec, std::span<const double> c, std::span<const double> b,
                        Index n_mc, std::uint64_t seed) {
  spec.validate();
  validate_envelope(spec, c);
  const auto d = static_cast<std::size_t>(spec.lag);
  if (b.size() != d) throw ParameterError("drift_check: expected " + std::to_string(d) + " weights b_1..b_d");
  if (n_mc < 2) throw ParameterError("drift_check: n_mc must be >= 2");
  double slope_sum = 0.0;
  for (std::size_t i = 1; i <= d; ++i) slope_sum += c[i];
  if (!(slope_sum < 1.0)) throw ParameterError("drift_check: requires sum_{i>=1} c_i < 1");
  for (std::size_t i = 0; i < d; ++i) {
    if (!(b[i] > 0.0)) throw ParameterError("drift_check: weights b must be > 0");
    const double next = i + 1 < d ? b[i + 1] : 0.0;
    if (!(c[i + 1] + next < b[i]))
      throw ParameterError("drift_check: weights violate c_i + b_{i+1} < b_i at i=" + std::to_string(i + 1));
    if (i >= 1) {
      double tail = 0.0;
      for (std::size_t j = i; j < d; ++j) tail += c[j + 1];
      if (!(tail < b[i]))
        throw ParameterError("drift_check: weights violate sum_{j>=i} c_j < b_i at i=" + std::to_string(i + 1));
    }
  }

  const QuadratureRule gh = gauss_hermite(21);
  auto V = [&](std::span<const double> x) {
    double v = 0.0;
    for (std::size_t i = 0; i < d; ++i) v += b[i] * std::abs(x[i]);
    return v;
  };
  auto expected_next_V = [&](std::span<const double> x) {
    const double m = mean_function(spec, x);
    const double s = spec.noise_sd * volatility(spec, x);
    double abs_y = 0.0;
    for (Index k = 0; k < gh.nodes.size(); ++k) abs_y += gh.weights(k) * std::abs(m + s * gh.nodes(k));
    double v = b[0] * abs_y;
    for (std::size_t i = 1; i < d; ++i) v += b[i] * std::abs(x[i - 1]);
    return v;
  };

  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> states;
  const Index n_path = n_mc / 2;
  {
    const Eigen::VectorXd path = simulate(spec, n_path + spec.lag, 100, seed);
    const SeriesDataset traj = embed(path, spec.lag);
    for (Index t = 0; t < traj.size(); ++t) {
      std::vector<double> x(d);
      for (std::size_t j = 0; j < d; ++j) x[j] = traj.X(t, static_cast<Index>(j));
      states.push_back(std::move(x));
    }
  }
  std::uniform_real_distribution<double> log_radius(-2.0, 3.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Index k = n_path; k < n_mc; ++k) {
    std::vector<double> x(d);
    double norm = 0.0;
    for (double& xi : x) {
      xi = gauss(rng);
      norm += xi * xi;
    }
    norm = std::sqrt(norm);
    const double r = std::pow(10.0, log_radius(rng));
    for (double& xi : x) xi = norm > 0.0 ? r * xi / norm : r;
    states.push_back(std::move(x));
  }

  DriftReport report;
  report.gamma_hat = -std::numeric_limits<double>::infinity();
  for (const auto& x : states) {
    const double v = V(x);
    if (v <= 0.0) continue;
    const double ratio = (expected_next_V(x) - c[0] - 1.0) / v;
    report.gamma_hat = std::max(report.gamma_hat, ratio);
    ++report.states_checked;
  }
  report.margin = 1.0 - report.gamma_hat;
  report.pass = report.gamma_hat < 1.0;
  return report;
}

namespace {

double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base), f = inv, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

}  // namespace

bool membership_audit(const DgpSpec& spec, std::span<const double> c, Index n_points,
                      double box_radius, std::uint64_t seed) {
  spec.validate();
  validate_envelope(spec, c);
  if (!(box_radius > 0.0)) throw ParameterError("membership_audit: box_radius must be > 0");
  static constexpr std::uint64_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  const auto d = static_cast<std::size_t>(spec.lag);
  if (d > std::size(primes)) throw ParameterError("membership_audit: lag order too large for the Halton sequence");

  // Cranley-Patterson rotation of the Halton sequence, seeded.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> shift(d);
  for (double& s : shift) s = unit(rng);

  std::vector<double> x(d);
  for (Index k = 0; k < n_points; ++k) {
    double envelope = c[0];
    for (std::size_t j = 0; j < d; ++j) {
      double u = radical_inverse(static_cast<std::uint64_t>(k) + 1, primes[j]) + shift[j];
      u -= std::floor(u);
      x[j] = -box_radius + 2.0 * box_radius * u;
      envelope += c[j + 1] * std::abs(x[j]);
    }
    if (std::abs(mean_function(spec, x)) > envelope + 1e-12 * (1.0 + envelope)) return false;
  }
  return true;
}

}  // namespace nlts
