#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "nlts/baselines.hpp"

using namespace nlts;

namespace {

struct Sample {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
};

Sample smooth_sample(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Sample s{Eigen::MatrixXd(n, 2), Eigen::VectorXd(n)};
  for (Index i = 0; i < n; ++i) {
    s.X(i, 0) = normal(rng);
    s.X(i, 1) = normal(rng);
    s.Y(i) = std::sin(s.X(i, 0)) + 0.3 * s.X(i, 1) + 0.1 * normal(rng);
  }
  return s;
}

Sample permuted(const Sample& s, std::uint64_t seed) {
  std::vector<Index> idx(static_cast<std::size_t>(s.Y.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::shuffle(idx.begin(), idx.end(), std::mt19937_64(seed));
  Sample p{Eigen::MatrixXd(s.X.rows(), s.X.cols()), Eigen::VectorXd(s.Y.size())};
  for (std::size_t i = 0; i < idx.size(); ++i) {
    p.X.row(static_cast<Index>(i)) = s.X.row(idx[i]);
    p.Y(static_cast<Index>(i)) = s.Y(idx[i]);
  }
  return p;
}

}  // namespace

TEST_CASE("rbf kernel and folds") {
  Eigen::MatrixXd A(2, 1);
  A << 0.0, 1.0;
  const Eigen::MatrixXd K = rbf_kernel(A, A, 0.5);
  CHECK(K(0, 0) == 1.0);
  CHECK(K(0, 1) == doctest::Approx(std::exp(-0.5)));
  CHECK(fold_bounds(10, 5, 0) == std::pair<Index, Index>{0, 2});
  CHECK(fold_bounds(11, 5, 4).second == 11);
}

TEST_CASE("kernel ridge") {
  const Sample s = smooth_sample(60, 1);
  const KernelRidge flat(s.X, Eigen::VectorXd::Constant(60, 2.5), 0.5, 1e-6);
  CHECK(std::abs(flat.predict_one(s.X.row(3)) - 2.5) < 1e-2);
  CHECK(flat.predict_one(s.X.row(3)) == doctest::Approx(flat.predict(s.X)(3)).epsilon(1e-14));
  const KernelRidge shrunk(s.X, s.Y, 0.5, 1e6);
  CHECK(shrunk.predict(s.X).cwiseAbs().maxCoeff() < 1e-3);

  // training residuals vanish as the ridge goes to zero
  double prev = 1e300;
  for (double alpha : {1e-2, 1e-4, 1e-6, 1e-8, 1e-10}) {
    const double resid = (KernelRidge(s.X, s.Y, 4.0, alpha).predict(s.X) - s.Y).cwiseAbs().maxCoeff();
    CHECK(resid < prev);
    prev = resid;
  }
  CHECK(prev < 1e-4);

  const KernelRidge cv = fit_krr(s.X, s.Y);
  const KrrGrid g = KrrGrid::standard();
  CHECK(std::find(g.gammas.begin(), g.gammas.end(), cv.gamma()) != g.gammas.end());
  CHECK(std::find(g.alphas.begin(), g.alphas.end(), cv.alpha()) != g.alphas.end());
  CHECK(g.gammas.size() == 11);
  CHECK(g.alphas.size() == 9);
  CHECK_THROWS_AS(fit_krr(s.X.topRows(4), s.Y.head(4)), ParameterError);

  // constant response with the smallest ridge
  const KernelRidge c = fit_krr(s.X, Eigen::VectorXd::Constant(60, -1.25));
  CHECK((c.predict(s.X).array() + 1.25).abs().maxCoeff() < 1e-2);
}

TEST_CASE("nearest neighbours") {
  const Sample s = smooth_sample(50, 2);
  const NearestNeighbors all(s.X, s.Y, 50);
  CHECK(all.predict_one(Eigen::RowVector2d(0.3, 9.0)) == doctest::Approx(s.Y.mean()));
  const NearestNeighbors beyond(s.X, s.Y, 80);
  CHECK(beyond.predict_one(Eigen::RowVector2d(0.0, 0.0)) == doctest::Approx(s.Y.mean()));

  Eigen::MatrixXd one(1, 2);
  one << 1.0, 1.0;
  const NearestNeighbors single(one, Eigen::VectorXd::Constant(1, 7.0), 1);
  CHECK(single.predict_one(Eigen::RowVector2d(-4.0, 3.0)) == 7.0);

  Eigen::MatrixXd two(2, 1);
  two << -1.0, 1.0;
  const NearestNeighbors tie(two, Eigen::Vector2d(0.0, 1.0), 1);
  CHECK(tie.predict_one(Eigen::RowVectorXd::Zero(1)) == 0.0);

  const NearestNeighbors cv = fit_knn(s.X, s.Y);
  CHECK(cv.k() >= 5);
  CHECK(cv.k() <= 43);
  CHECK(cv.k() % 2 == 1);
  CHECK(default_k_grid().size() == 20);
}

TEST_CASE("random forest") {
  const Sample s = smooth_sample(120, 3);
  ForestOptions opts;
  opts.n_trees = 60;
  opts.seed = 9;
  const RandomForest a = fit_rf(s.X, s.Y, opts);
  const RandomForest b = fit_rf(s.X, s.Y, opts);
  CHECK(a.predict(s.X) == b.predict(s.X));
  CHECK(a.num_trees() == 60);
  CHECK(a.mtry() >= 1);
  CHECK(a.mtry() <= 2);

  const RandomForest flat = fit_rf(s.X, Eigen::VectorXd::Constant(120, 0.75), opts);
  CHECK((flat.predict(s.X).array() == 0.75).all());

  // a clean step in X1 is recovered by axis-aligned splits
  Eigen::MatrixXd X(200, 2);
  Eigen::VectorXd Y(200);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Index i = 0; i < 200; ++i) {
    X(i, 0) = u(rng);
    X(i, 1) = u(rng);
    Y(i) = X(i, 0) > 0.2 ? 1.0 : -1.0;
  }
  opts.n_trees = 200;
  const RandomForest step = fit_rf(X, Y, opts);
  const double var = (Y.array() - Y.mean()).square().mean();
  CHECK(step.oob_mse() <= 0.05 * var);
  CHECK_THROWS_AS(fit_rf(X.topRows(4), Y.head(4), opts), ParameterError);
}

TEST_CASE("baseline predictions stay in the response range") {
  const Sample s = smooth_sample(100, 7);
  const Sample q = smooth_sample(300, 8);
  ForestOptions opts;
  opts.n_trees = 50;
  const double lo = s.Y.minCoeff(), hi = s.Y.maxCoeff();
  const Eigen::MatrixXd far = 10.0 * q.X;
  for (const Predictor& p : {Predictor(fit_knn(s.X, s.Y)), Predictor(fit_rf(s.X, s.Y, opts))}) {
    const Eigen::VectorXd pred = p.predict(far);
    CHECK(pred.minCoeff() >= lo);
    CHECK(pred.maxCoeff() <= hi);
  }
}

TEST_CASE("baselines ignore training row order") {
  const Sample s = smooth_sample(80, 11);
  const Sample p = permuted(s, 99);
  const Sample q = smooth_sample(40, 12);

  const NearestNeighbors k1(s.X, s.Y, 7), k2(p.X, p.Y, 7);
  CHECK(k1.predict(q.X).isApprox(k2.predict(q.X), 1e-14));

  const KernelRidge r1(s.X, s.Y, 0.5, 1e-2), r2(p.X, p.Y, 0.5, 1e-2);
  CHECK(r1.predict(q.X).isApprox(r2.predict(q.X), 1e-9));

  ForestOptions opts;
  opts.n_trees = 40;
  opts.seed = 3;
  CHECK(fit_rf(s.X, s.Y, opts).predict(q.X) == fit_rf(p.X, p.Y, opts).predict(q.X));
}
