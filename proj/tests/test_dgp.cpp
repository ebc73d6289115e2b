#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "nlts/dgp.hpp"

using namespace nlts;

namespace {

double mean_at(const DgpSpec& spec, std::initializer_list<double> x) {
  const std::vector<double> v(x);
  return mean_function(spec, std::span<const double>(v));
}

DgpSpec zero_mean(int lag, double sd) {
  return custom_spec(lag, [](std::span<const double>) { return 0.0; }, sd);
}

}  // namespace

TEST_CASE("mean function spot checks") {
  CHECK(mean_at(expar_spec(), {0.0, 0.0}) == 0.0);
  CHECK(mean_at(expar_spec(), {1.0, 0.0}) == doctest::Approx(0.1645380591572431).epsilon(1e-13));
  CHECK(mean_at(tar_spec(), {2.0, 1.0}) == -1.4);
  CHECK(mean_at(sim_spec(), {0.75, 0.0}) == 1.0);
  CHECK(mean_at(far_spec(), {0.0, 1.0}) == doctest::Approx(-std::exp(-0.5)));
  CHECK(mean_at(far_spec(), {2.0, 0.0}) == 2.0);
  CHECK(mean_at(aar_spec(), {1.0, 0.0}) == doctest::Approx(4.0 / 1.8 + mean_at(aar_spec(), {0.0, 0.0})));
  // sim_v at Z = 0: (Phi(0) - 0.5) y1 + (Phi(0) - 0.6) y2
  CHECK(mean_at(sim_v_spec(1.0), {1.0, 1.0, 1.0, 1.0}) == doctest::Approx(-0.1));
  const double phi_m2 = 0.5 * std::erfc(2.0 / std::numbers::sqrt2);  // Phi(-2)
  CHECK(mean_at(sim_v_spec(2.0), {1.0, 0.0, 0.0, 0.0}) == doctest::Approx(phi_m2 - 0.5));
  CHECK(mean_at(sim_spec(), {0.0, 1.0}) == 1.0);
  CHECK_THROWS_AS(mean_at(tar_spec(), {1.0}), DimensionError);

  const Eigen::Vector2d x(1.0, 0.0);
  CHECK(mean_function(expar_spec(), x) == mean_at(expar_spec(), {1.0, 0.0}));
}

TEST_CASE("published lags and noise scales") {
  CHECK(noise_sd_of(expar_spec()) == 0.2);
  CHECK(noise_sd_of(sim_spec()) == 0.1);
  CHECK(noise_sd_of(tar_spec()) == 1.0);
  CHECK(noise_sd_of(far_spec()) == 0.5);
  CHECK(noise_sd_of(aar_spec()) == 1.0);
  CHECK(noise_sd_of(sim_v_spec(5.0)) == 1.0);
  CHECK(sim_v_spec(0.5).lag == 4);
  CHECK(tar_spec().lag == 2);
  const auto specs = study_specs();
  CHECK(specs.size() == 8);
  CHECK(specs.back().label() == "sim_v5");
  CHECK_THROWS_AS(dgp_kind_from_string("garch"), ParameterError);
}

TEST_CASE("simulate") {
  DgpSpec quiet = tar_spec();
  quiet.noise_sd = 0.0;
  CHECK(simulate(quiet, 50, 10, 1).isZero(0.0));
  for (auto spec : {expar_spec(), far_spec(), sim_v_spec(1.0)}) {
    spec.noise_sd = 0.0;
    CHECK(simulate(spec, 20, 5, 3).isZero(0.0));
  }

  CHECK(simulate(tar_spec(), 100, 100, 9) == simulate(tar_spec(), 100, 100, 9));
  CHECK_FALSE(simulate(tar_spec(), 100, 100, 9) == simulate(tar_spec(), 100, 100, 10));
  CHECK(simulate(expar_spec(), 400, 100, 1).cwiseAbs().maxCoeff() <= 10.0);
  CHECK(simulate(tar_spec(), 400, 0, 1).size() == 400);

  const DgpSpec explode = linear_ar_spec({3.0}, 1.0);
  CHECK_THROWS_AS(simulate(explode, 2000, 0, 1), SimulationError);
  CHECK_THROWS_AS(simulate(tar_spec(), 0, 0, 1), ParameterError);

  const DgpSpec ar = linear_ar_spec({0.5}, 0.0, 1.0);
  const Eigen::VectorXd path = simulate(ar, 3, 0, 1);
  CHECK(path(0) == 1.0);
  CHECK(path(1) == 1.5);
  CHECK(path(2) == 1.75);
}

TEST_CASE("embedding") {
  const Eigen::Vector3d s(1.0, 2.0, 3.0);
  const SeriesDataset one = embed(s, 1);
  CHECK(one.X == Eigen::Vector2d(1.0, 2.0));
  CHECK(one.Y == Eigen::Vector2d(2.0, 3.0));
  const SeriesDataset two = embed(s, 2);
  CHECK(two.X.rows() == 1);
  CHECK(two.X(0, 0) == 2.0);
  CHECK(two.X(0, 1) == 1.0);
  CHECK(two.Y(0) == 3.0);
  CHECK(embed(Eigen::VectorXd::LinSpaced(5, 0, 4), 2).size() == 3);
  CHECK_THROWS_AS(embed(s, 3), DimensionError);

  const Eigen::VectorXd series = simulate(sim_v_spec(1.0), 60, 20, 4);
  const Index d = 4;
  const SeriesDataset data = embed(series, d);
  for (Index t = 0; t < data.size(); ++t) {
    CHECK(data.Y(t) == series(d + t));
    for (Index j = 0; j < d; ++j) CHECK(data.X(t, j) == series(d + t - 1 - j));
  }

  const SeriesDataset sim = simulate_dataset(tar_spec(), 400, 100, 5);
  CHECK(sim.size() == 400);
  CHECK(sim.origin.has_value());
  const SeriesDataset part = slice(sim, 10, 5);
  CHECK(part.Y == sim.Y.segment(10, 5));
  CHECK_THROWS_AS(slice(sim, 398, 5), DimensionError);
}

TEST_CASE("TAR envelope") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  const DgpSpec tar = tar_spec();
  for (int i = 0; i < 100000; ++i) {
    const double x[] = {u(rng), u(rng)};
    CHECK_LE(std::abs(mean_function(tar, std::span<const double>(x))),
             0.8 * std::abs(x[0]) + 0.6 * std::abs(x[1]) + 1e-12);
  }
}

TEST_CASE("Gauss-Hermite rule") {
  const QuadratureRule q = gauss_hermite(21);
  CHECK(q.weights.sum() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(q.nodes.dot(q.weights) == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(q.nodes.array().square().matrix().dot(q.weights) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q.nodes.array().pow(4).matrix().dot(q.weights) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(q.nodes.array().pow(10).matrix().dot(q.weights) == doctest::Approx(945.0).epsilon(1e-10));

  // E|mu + sigma eps| in closed form
  for (double mu : {0.0, 0.3, 1.0, 2.5}) {
    const double sigma = 1.0;
    const double exact = sigma * std::sqrt(2.0 / std::numbers::pi) * std::exp(-mu * mu / 2.0) +
                         mu * std::erf(mu / std::numbers::sqrt2);
    double approx = 0.0;
    for (Index i = 0; i < q.nodes.size(); ++i) approx += q.weights(i) * std::abs(mu + sigma * q.nodes(i));
    // |.| has a kink, so the rule is only accurate once the kink leaves the bulk
    CHECK(approx == doctest::Approx(exact).epsilon(mu < 2.0 ? 5e-2 : 1e-3));
  }
}

TEST_CASE("drift check") {
  const double c[] = {1.0, 0.5};
  const double b[] = {1.0};
  const DriftReport r = drift_check(zero_mean(1, 1.0), c, b, 400, 3);
  CHECK(r.pass);
  CHECK(r.gamma_hat < 1.0);
  CHECK(r.margin == doctest::Approx(1.0 - r.gamma_hat));
  CHECK(r.states_checked == 400);

  const double bad_c[] = {1.0, 0.8, 0.6};
  const double tar_b[] = {1.0, 0.7};
  CHECK_THROWS_AS(drift_check(tar_spec(), bad_c, tar_b, 100, 1), ParameterError);

  const double lin_c[] = {0.0, 0.5};
  const double lin_b[] = {1.0};
  CHECK(drift_check(linear_ar_spec({0.5}, 1.0), lin_c, lin_b, 400, 1).pass);
  CHECK_FALSE(drift_check(linear_ar_spec({1.2}, 0.1), lin_c, lin_b, 400, 1).pass);
}

TEST_CASE("membership audit") {
  const double c0[] = {0.5, 0.0};
  CHECK(membership_audit(zero_mean(1, 1.0), c0, 1000, 10.0, 1));
  const double tar_c[] = {0.1, 0.8, 0.6};
  CHECK(membership_audit(tar_spec(), tar_c, 20000, 20.0, 1));
  const double aar_c[] = {0.0, 0.1, 0.1};
  CHECK_FALSE(membership_audit(aar_spec(), aar_c, 20000, 5.0, 1));
}

TEST_CASE("series CSV and spec JSON") {
  const auto path = std::filesystem::temp_directory_path() / "nlts_series_test.csv";
  const Eigen::VectorXd s = simulate(far_spec(), 50, 10, 2);
  write_series_csv(s, path);
  CHECK(read_series_csv(path) == s);
  std::filesystem::remove(path);

  for (const auto& spec : study_specs()) {
    const DgpSpec back = spec_from_json(spec_to_json(spec));
    CHECK(back.label() == spec.label());
    CHECK(back.lag == spec.lag);
    CHECK(back.noise_sd == spec.noise_sd);
  }
  nlohmann::json j = spec_to_json(tar_spec());
  j["extra"] = 1;
  CHECK_THROWS_AS(spec_from_json(j), FormatError);
  CHECK_THROWS_AS(spec_to_json(zero_mean(1, 1.0)), FormatError);
}

TEST_CASE("affine rescale") {
  Eigen::MatrixXd X(3, 2);
  X << 0, 10, 2, 20, 4, 30;
  const AffineRescale r = AffineRescale::fit(X);
  const Eigen::MatrixXd Z = r.apply(X);
  CHECK(Z.minCoeff() == 0.0);
  CHECK(Z.maxCoeff() == 1.0);
  CHECK(Z(1, 0) == 0.5);
}
