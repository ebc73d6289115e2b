#include <doctest.h>

#include <cmath>
#include <random>

#include "nlts/train.hpp"

using namespace nlts;

namespace {

struct Toy {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
};

Toy linear_toy(Index n, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Toy t{Eigen::MatrixXd(n, 2), Eigen::VectorXd(n)};
  for (Index i = 0; i < n; ++i) {
    t.X(i, 0) = normal(rng);
    t.X(i, 1) = normal(rng);
    t.Y(i) = 0.5 * t.X(i, 0) + noise * normal(rng);
  }
  return t;
}

}  // namespace

TEST_CASE("adam step") {
  TrainConfig cfg;
  AdamState s = AdamState::zeros(3);
  Eigen::VectorXd theta = Eigen::Vector3d(1.0, -2.0, 0.5);
  const Eigen::VectorXd start = theta;
  adam_step(s, Eigen::VectorXd::Zero(3), cfg, theta);
  CHECK(theta == start);

  AdamState s2 = AdamState::zeros(3);
  adam_step(s2, Eigen::Vector3d(4.0, -0.01, 1e3), cfg, theta);
  CHECK(theta(0) - start(0) == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(theta(1) - start(1) == doctest::Approx(1e-3).epsilon(1e-5));
  CHECK(theta(2) - start(2) == doctest::Approx(-1e-3).epsilon(1e-6));

  Eigen::VectorXd bad = Eigen::VectorXd::Zero(3);
  bad(1) = std::nan("");
  CHECK_THROWS_AS(adam_step(s2, bad, cfg, theta), TrainingError);
  CHECK_THROWS_AS(adam_step(s2, Eigen::VectorXd::Zero(2), cfg, theta), DimensionError);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.adam_beta1 = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = TrainConfig{};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

TEST_CASE("empirical and penalized risk") {
  const Architecture arch{1, {2}, Activation::relu};
  const Mlpd zero(arch);
  Eigen::MatrixXd X(2, 1);
  X << 0.3, -0.4;
  const Eigen::Vector2d Y(1.0, -1.0);
  CHECK(empirical_risk(zero, X, Y) == 1.0);
  CHECK_THROWS(empirical_risk(zero, Eigen::MatrixXd(0, 1), Eigen::VectorXd(0)));

  Mlpd c(arch);
  c.bias(1) << 0.7;
  CHECK(empirical_risk(c, X, Eigen::Vector2d::Constant(0.7)) == 0.0);

  CHECK(penalized_risk(zero, X, Y, ClippedPenalty{5.0, 0.1}) == 1.0);
  const Mlpd net = init_network(arch, 1.0, 3);
  const ClippedPenalty pen{1.0, 0.1};
  CHECK(penalized_risk(net, X, Y, ClippedPenalty{0.0, 0.1}) == empirical_risk(net, X, Y));
  CHECK(penalized_risk(net, X, Y, pen) ==
        doctest::Approx(empirical_risk(net, X, Y) + penalty_value(pen, flatten_params(net))));
  CHECK(penalized_risk(net, X, Y, pen) > empirical_risk(net, X, Y));

  const TruncatedEstimatord est{c, 0.5, false};
  CHECK(empirical_risk(est, X, Eigen::Vector2d::Constant(0.5)) == 0.0);
}

TEST_CASE("small full-batch gradient steps decrease the risk") {
  const Toy t = linear_toy(40, 0.1, 4);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Architecture arch{2, {5, 4}, Activation::relu};
    const Mlpd net = init_network(arch, 1.0, seed);
    const Eigen::VectorXd r = 2.0 * (forward_batch(net, t.X) - t.Y) / static_cast<double>(t.Y.size());
    const Eigen::VectorXd g = backprop(net, t.X, r);
    const Eigen::VectorXd theta = flatten_params(net) - 1e-4 * g;
    CHECK(empirical_risk(unflatten_params<double>(arch, theta), t.X, t.Y) < empirical_risk(net, t.X, t.Y));
  }
}

TEST_CASE("early stopping rule") {
  EarlyStopping es(5);
  const double trace[] = {1.0, 0.8, 0.5, 0.6, 0.55, 0.5, 0.7, 0.9, 0.1};
  Index stopped = 0;
  for (double v : trace) {
    ++stopped;
    if (es.update(v)) break;
  }
  CHECK(stopped == 8);
  CHECK(es.best_epoch() == 3);
  CHECK(es.best_mse() == 0.5);
  CHECK_THROWS_AS(EarlyStopping(0), ParameterError);
}

TEST_CASE("early_stop_train protocol") {
  const Toy t = linear_toy(200, 0.1, 8);
  TrainConfig cfg;
  cfg.max_epochs = 40;
  cfg.seed = 3;
  const Architecture arch = Architecture::uniform(2, 2, 16);
  const FitResult a = early_stop_train(t.X, t.Y, arch, cfg);
  const FitResult b = early_stop_train(t.X, t.Y, arch, cfg);
  CHECK(a.estimator.net == b.estimator.net);
  CHECK(a.validation_mse_trace == b.validation_mse_trace);
  CHECK(a.epochs_used >= 1);
  CHECK(a.epochs_used <= cfg.max_epochs);
  CHECK(static_cast<Index>(a.validation_mse_trace.size()) == a.phase1_epochs);
  CHECK(a.best_validation_mse <= a.validation_mse_trace.front());
  CHECK(a.best_validation_mse == a.validation_mse_trace[static_cast<std::size_t>(a.epochs_used - 1)]);
  CHECK(a.estimator.clamp == doctest::Approx(t.Y.cwiseAbs().maxCoeff() + 1.0));
  CHECK_FALSE(a.estimator.cube_support);

  // Phase 2 is a plain full-sample run for epochs* from the same initialisation.
  const Mlpd direct = train_epochs(t.X, t.Y, arch, cfg, a.epochs_used);
  CHECK(direct == a.estimator.net);
}

TEST_CASE("zero target") {
  const Toy t = linear_toy(128, 0.0, 1);
  TrainConfig cfg;
  cfg.max_epochs = 300;
  const FitResult fit = fit_npdnn(t.X, Eigen::VectorXd::Zero(128), Architecture::uniform(2, 1, 8), cfg);
  CHECK(fit.epochs_used <= cfg.max_epochs);
  CHECK(fit.best_validation_mse < 5e-3);
  CHECK(fit.best_validation_mse < 0.1 * fit.validation_mse_trace.front());
}

TEST_CASE("constant target is learned") {
  const Toy t = linear_toy(256, 0.0, 2);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.max_epochs = 200;
  cfg.seed = 5;
  const Eigen::VectorXd Y = Eigen::VectorXd::Constant(256, 1.5);
  const FitResult fit = fit_npdnn(t.X, Y, Architecture::uniform(2, 2, 8), cfg);
  const Eigen::VectorXd pred = truncated_predict_batch(fit.estimator, t.X);
  CHECK((pred.array() - 1.5).abs().maxCoeff() <= 1.5e-2);
}

TEST_CASE("fit_spdnn selection") {
  const Toy t = linear_toy(160, 0.3, 6);
  TrainConfig cfg;
  cfg.max_epochs = 15;
  cfg.seed = 2;
  const Architecture arch = Architecture::uniform(2, 2, 8);

  const FitResult zero = fit_spdnn(t.X, t.Y, arch, cfg, std::vector<double>{0.0});
  const FitResult plain = fit_npdnn(t.X, t.Y, arch, cfg);
  CHECK(zero.estimator.net == plain.estimator.net);
  CHECK(*zero.selected_lambda == 0.0);

  const auto grid = lambda_grid(sample_variance(t.Y), t.Y.size());
  const FitResult sp = fit_spdnn(t.X, t.Y, arch, cfg);
  REQUIRE(sp.selected_lambda);
  CHECK(std::find(grid.begin(), grid.end(), *sp.selected_lambda) != grid.end());

  // Equal validation scores go to the larger lambda: a lambda too small to move any weight
  // from the same initialisation reproduces the lambda = 0 run exactly.
  const FitResult tie = fit_spdnn(t.X, t.Y, arch, cfg, std::vector<double>{0.0, 1e-300});
  CHECK(*tie.selected_lambda == 1e-300);
  CHECK_THROWS_AS(fit_spdnn(t.X, t.Y, arch, cfg, std::vector<double>{}), ParameterError);
}

TEST_CASE("sample variance") {
  CHECK(sample_variance(Eigen::Vector3d(1.0, 2.0, 3.0)) == 1.0);
  CHECK_THROWS(sample_variance(Eigen::VectorXd::Constant(1, 2.0)));
}
