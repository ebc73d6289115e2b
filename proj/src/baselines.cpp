#include "nlts/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>

namespace nlts {

namespace {

void check_training_data(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                         const char* who) {
  if (X.rows() != Y.size())
    throw DimensionError(std::string(who) + ": " + std::to_string(X.rows()) + " inputs but " +
                         std::to_string(Y.size()) + " targets");
  if (Y.size() == 0) throw DimensionError(std::string(who) + ": empty training set");
}

// Rows outside [begin, end).
Eigen::MatrixXd drop_rows(const Eigen::Ref<const Eigen::MatrixXd>& M, Index begin, Index end) {
  Eigen::MatrixXd out(M.rows() - (end - begin), M.cols());
  out.topRows(begin) = M.topRows(begin);
  out.bottomRows(M.rows() - end) = M.bottomRows(M.rows() - end);
  return out;
}

Eigen::VectorXd drop_rows(const Eigen::Ref<const Eigen::VectorXd>& v, Index begin, Index end) {
  Eigen::VectorXd out(v.size() - (end - begin));
  out.head(begin) = v.head(begin);
  out.tail(v.size() - end) = v.tail(v.size() - end);
  return out;
}

// Row indices ordered by (squared distance to x, index).
std::vector<std::pair<double, Index>> neighbours_by_distance(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                                             const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  std::vector<std::pair<double, Index>> d(static_cast<std::size_t>(X.rows()));
  for (Index i = 0; i < X.rows(); ++i) d[static_cast<std::size_t>(i)] = {(X.row(i) - x).squaredNorm(), i};
  return d;
}

}  // namespace

Eigen::MatrixXd rbf_kernel(const Eigen::Ref<const Eigen::MatrixXd>& A, const Eigen::Ref<const Eigen::MatrixXd>& B,
                           double gamma) {
  if (A.cols() != B.cols()) throw DimensionError("rbf_kernel: dimension mismatch");
  const Eigen::VectorXd a2 = A.rowwise().squaredNorm();
  const Eigen::RowVectorXd b2 = B.rowwise().squaredNorm().transpose();
  Eigen::MatrixXd sq = -2.0 * A * B.transpose();
  sq.colwise() += a2;
  sq.rowwise() += b2;
  return (-gamma * sq.cwiseMax(0.0)).array().exp().matrix();
}

std::pair<Index, Index> fold_bounds(Index n, Index folds, Index f) {
  return {f * n / folds, (f + 1) * n / folds};
}

// ---------------------------------------------------------------------------
// Kernel ridge regression

KernelRidge::KernelRidge(Eigen::MatrixXd X, const Eigen::Ref<const Eigen::VectorXd>& Y, double gamma, double alpha)
    : X_(std::move(X)), gamma_(gamma), alpha_(alpha) {
  check_training_data(X_, Y, "kernel ridge");
  if (!(gamma > 0.0)) throw ParameterError("kernel ridge: gamma must be > 0");
  if (!(alpha >= 0.0)) throw ParameterError("kernel ridge: alpha must be >= 0");
  const Index n = X_.rows();
  Eigen::MatrixXd system = rbf_kernel(X_, X_, gamma);
  system.diagonal().array() += static_cast<double>(n) * alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) {
    system.diagonal().array() += 1e-10;
    llt.compute(system);
    if (llt.info() != Eigen::Success) throw NumericError("kernel ridge: system is singular beyond jitter 1e-10");
  }
  weights_ = llt.solve(Y);
  if (!weights_.allFinite()) throw NumericError("kernel ridge: non-finite dual weights");
}

double KernelRidge::predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return (rbf_kernel(x, X_, gamma_) * weights_)(0);
}

Eigen::VectorXd KernelRidge::predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  return rbf_kernel(X, X_, gamma_) * weights_;
}

KrrGrid KrrGrid::standard() {
  KrrGrid g;
  for (int e = -6; e <= 4; ++e) g.gammas.push_back(std::ldexp(1.0, e));
  for (int e = -6; e <= 2; ++e) g.alphas.push_back(std::pow(10.0, e));
  return g;
}

KernelRidge fit_krr(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                    Index folds, const KrrGrid& grid) {
  check_training_data(X, Y, "fit_krr");
  if (folds < 2) throw ParameterError("fit_krr: need at least 2 folds");
  if (Y.size() < folds) throw ParameterError("fit_krr: fewer observations than folds");
  if (grid.gammas.empty() || grid.alphas.empty()) throw ParameterError("fit_krr: empty tuning grid");

  const Index n = Y.size();
  const auto ng = grid.gammas.size(), na = grid.alphas.size();
  std::vector<double> sse(ng * na, 0.0);
  for (Index f = 0; f < folds; ++f) {
    const auto [begin, end] = fold_bounds(n, folds, f);
    const Eigen::MatrixXd x_tr = drop_rows(X, begin, end);
    const Eigen::VectorXd y_tr = drop_rows(Y, begin, end);
    const auto x_va = X.middleRows(begin, end - begin);
    const auto y_va = Y.segment(begin, end - begin);
    const double n_tr = static_cast<double>(x_tr.rows());
    for (std::size_t g = 0; g < ng; ++g) {
      // One eigendecomposition per (fold, gamma) serves every ridge level.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rbf_kernel(x_tr, x_tr, grid.gammas[g]));
      const Eigen::VectorXd lambdas = eig.eigenvalues().cwiseMax(0.0);
      const Eigen::VectorXd vty = eig.eigenvectors().transpose() * y_tr;
      const Eigen::MatrixXd kv = rbf_kernel(x_va, x_tr, grid.gammas[g]) * eig.eigenvectors();
      for (std::size_t a = 0; a < na; ++a) {
        const Eigen::VectorXd coef = vty.array() / (lambdas.array() + n_tr * grid.alphas[a] + 1e-300);
        sse[g * na + a] += (kv * coef - y_va).squaredNorm();
      }
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(sse.begin(), sse.end()) - sse.begin());
  return KernelRidge(X, Y, grid.gammas[best / na], grid.alphas[best % na]);
}

// ---------------------------------------------------------------------------
// k-nearest neighbours

NearestNeighbors::NearestNeighbors(Eigen::MatrixXd X, Eigen::VectorXd Y, Index k)
    : X_(std::move(X)), Y_(std::move(Y)), k_(k) {
  check_training_data(X_, Y_, "knn");
  if (k < 1) throw ParameterError("knn: k must be >= 1");
}

double NearestNeighbors::predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != X_.cols()) throw DimensionError("knn: query dimension mismatch");
  auto d = neighbours_by_distance(X_, x);
  const auto k = static_cast<std::size_t>(std::min(k_, X_.rows()));
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += Y_(d[i].second);
  return sum / static_cast<double>(k);
}

Eigen::VectorXd NearestNeighbors::predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  Eigen::VectorXd out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out(i) = predict_one(X.row(i));
  return out;
}

std::vector<Index> default_k_grid() {
  std::vector<Index> g;
  for (Index k = 5; k <= 43; k += 2) g.push_back(k);
  return g;
}

NearestNeighbors fit_knn(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                         const std::vector<Index>& k_grid, Index folds) {
  check_training_data(X, Y, "fit_knn");
  if (k_grid.empty()) throw ParameterError("fit_knn: empty k grid");
  if (folds < 2) throw ParameterError("fit_knn: need at least 2 folds");
  if (Y.size() < folds) throw ParameterError("fit_knn: fewer observations than folds");
  for (Index k : k_grid) {
    if (k < 1) throw ParameterError("fit_knn: k must be >= 1");
  }

  const Index n = Y.size();
  std::vector<double> sse(k_grid.size(), 0.0);
  for (Index f = 0; f < folds; ++f) {
    const auto [begin, end] = fold_bounds(n, folds, f);
    const Eigen::MatrixXd x_tr = drop_rows(X, begin, end);
    const Eigen::VectorXd y_tr = drop_rows(Y, begin, end);
    for (Index i = begin; i < end; ++i) {
      auto d = neighbours_by_distance(x_tr, X.row(i));
      std::sort(d.begin(), d.end());
      std::vector<double> prefix(d.size() + 1, 0.0);
      for (std::size_t j = 0; j < d.size(); ++j) prefix[j + 1] = prefix[j] + y_tr(d[j].second);
      for (std::size_t c = 0; c < k_grid.size(); ++c) {
        const auto k = std::min(static_cast<std::size_t>(k_grid[c]), d.size());
        const double pred = prefix[k] / static_cast<double>(k);
        sse[c] += (pred - Y(i)) * (pred - Y(i));
      }
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(sse.begin(), sse.end()) - sse.begin());
  return NearestNeighbors(X, Y, k_grid[best]);
}

// ---------------------------------------------------------------------------
// Random forest

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, Index mtry, Index min_leaf, std::mt19937_64& rng)
      : X_(X), Y_(Y), mtry_(mtry), min_leaf_(min_leaf), rng_(rng) {
    features_.resize(static_cast<std::size_t>(X.cols()));
    std::iota(features_.begin(), features_.end(), Index{0});
  }

  RandomForest::Tree build(std::vector<Index> rows) {
    RandomForest::Tree tree;
    struct Pending {
      Index node;
      std::vector<Index> rows;
    };
    std::vector<Pending> stack;
    tree.emplace_back();
    stack.push_back({0, std::move(rows)});
    while (!stack.empty()) {
      Pending job = std::move(stack.back());
      stack.pop_back();
      double sum = 0.0;
      for (Index r : job.rows) sum += Y_(r);
      const auto count = static_cast<Index>(job.rows.size());
      tree[static_cast<std::size_t>(job.node)].value = sum / static_cast<double>(count);
      if (count < 2 * min_leaf_) continue;

      const Split split = best_split(job.rows, sum);
      if (split.feature < 0) continue;

      std::vector<Index> left, right;
      for (Index r : job.rows) (X_(r, split.feature) <= split.threshold ? left : right).push_back(r);
      const auto left_id = static_cast<Index>(tree.size());
      tree.emplace_back();
      tree.emplace_back();
      auto& node = tree[static_cast<std::size_t>(job.node)];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = left_id;
      node.right = left_id + 1;
      stack.push_back({left_id + 1, std::move(right)});
      stack.push_back({left_id, std::move(left)});
    }
    return tree;
  }

 private:
  struct Split {
    Index feature = -1;
    double threshold = 0.0;
  };

  Split best_split(const std::vector<Index>& rows, double total) {
    // Partial Fisher-Yates draw of mtry candidate features.
    const auto d = features_.size();
    for (std::size_t i = 0; i < static_cast<std::size_t>(mtry_); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, d - 1);
      std::swap(features_[i], features_[pick(rng_)]);
    }
    const auto n = rows.size();
    const double parent = total * total / static_cast<double>(n);
    double best_score = parent;
    Split best;
    std::vector<std::pair<double, double>> xy(n);
    for (std::size_t fi = 0; fi < static_cast<std::size_t>(mtry_); ++fi) {
      const Index f = features_[fi];
      for (std::size_t i = 0; i < n; ++i) xy[i] = {X_(rows[i], f), Y_(rows[i])};
      std::sort(xy.begin(), xy.end());
      double left_sum = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        left_sum += xy[i - 1].second;
        if (static_cast<Index>(i) < min_leaf_ || static_cast<Index>(n - i) < min_leaf_) continue;
        if (!(xy[i - 1].first < xy[i].first)) continue;
        const double right_sum = total - left_sum;
        const double score = left_sum * left_sum / static_cast<double>(i) +
                             right_sum * right_sum / static_cast<double>(n - i);
        if (score > best_score * (1.0 + 1e-12) + 1e-300) {
          best_score = score;
          best.feature = f;
          double mid = 0.5 * (xy[i - 1].first + xy[i].first);
          if (!(mid < xy[i].first)) mid = xy[i - 1].first;
          best.threshold = mid;
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& Y_;
  Index mtry_;
  Index min_leaf_;
  std::mt19937_64& rng_;
  std::vector<Index> features_;
};

double predict_tree(const RandomForest::Tree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  Index id = 0;
  while (tree[static_cast<std::size_t>(id)].feature >= 0) {
    const auto& node = tree[static_cast<std::size_t>(id)];
    id = x(node.feature) <= node.threshold ? node.left : node.right;
  }
  return tree[static_cast<std::size_t>(id)].value;
}

}  // namespace

RandomForest::RandomForest(std::vector<Tree> trees, Index dim, Index mtry, double oob_mse)
    : trees_(std::move(trees)), dim_(dim), mtry_(mtry), oob_mse_(oob_mse) {}

double RandomForest::predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != dim_) throw DimensionError("random forest: query dimension mismatch");
  double sum = 0.0;
  for (const auto& tree : trees_) sum += predict_tree(tree, x);
  return sum / static_cast<double>(trees_.size());
}

Eigen::VectorXd RandomForest::predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  Eigen::VectorXd out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out(i) = predict_one(X.row(i));
  return out;
}

RandomForest fit_rf(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                    const ForestOptions& options) {
  check_training_data(X, Y, "fit_rf");
  const Index n = Y.size(), d = X.cols();
  if (n < 5) throw ParameterError("fit_rf: need at least 5 observations");
  if (options.n_trees < 1) throw ParameterError("fit_rf: n_trees must be >= 1");
  if (options.min_leaf < 1) throw ParameterError("fit_rf: min_leaf must be >= 1");
  std::vector<Index> candidates = options.mtry_candidates;
  if (candidates.empty()) {
    for (Index m = 1; m <= d; ++m) candidates.push_back(m);
  }
  for (Index m : candidates) {
    if (m < 1 || m > d) throw ParameterError("fit_rf: mtry candidates must lie in [1, d]");
  }

  // Canonical row order makes the fit independent of how the caller stored the rows.
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::sort(perm.begin(), perm.end(), [&](Index a, Index b) {
    for (Index j = 0; j < d; ++j) {
      if (X(a, j) != X(b, j)) return X(a, j) < X(b, j);
    }
    if (Y(a) != Y(b)) return Y(a) < Y(b);
    return a < b;
  });
  Eigen::MatrixXd Xs(n, d);
  Eigen::VectorXd Ys(n);
  for (Index i = 0; i < n; ++i) {
    Xs.row(i) = X.row(perm[static_cast<std::size_t>(i)]);
    Ys(i) = Y(perm[static_cast<std::size_t>(i)]);
  }

  std::optional<RandomForest> best;
  for (Index mtry : candidates) {
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<Index> draw(0, n - 1);
    TreeBuilder builder(Xs, Ys, mtry, options.min_leaf, rng);
    std::vector<RandomForest::Tree> trees;
    trees.reserve(static_cast<std::size_t>(options.n_trees));
    Eigen::VectorXd oob_sum = Eigen::VectorXd::Zero(n);
    Eigen::VectorXi oob_count = Eigen::VectorXi::Zero(n);
    std::vector<char> in_bag(static_cast<std::size_t>(n));
    for (Index t = 0; t < options.n_trees; ++t) {
      std::fill(in_bag.begin(), in_bag.end(), 0);
      std::vector<Index> rows(static_cast<std::size_t>(n));
      for (auto& r : rows) {
        r = draw(rng);
        in_bag[static_cast<std::size_t>(r)] = 1;
      }
      trees.push_back(builder.build(std::move(rows)));
      for (Index i = 0; i < n; ++i) {
        if (in_bag[static_cast<std::size_t>(i)]) continue;
        oob_sum(i) += predict_tree(trees.back(), Xs.row(i));
        ++oob_count(i);
      }
    }
    double sse = 0.0;
    Index used = 0;
    for (Index i = 0; i < n; ++i) {
      if (oob_count(i) == 0) continue;
      const double r = oob_sum(i) / oob_count(i) - Ys(i);
      sse += r * r;
      ++used;
    }
    const double oob = used > 0 ? sse / static_cast<double>(used) : std::numeric_limits<double>::infinity();
    if (!best || oob < best->oob_mse()) best.emplace(std::move(trees), d, mtry, oob);
  }
  return std::move(*best);
}

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::krr:
      return "krr";
    case BaselineKind::knn:
      return "knn";
    case BaselineKind::rf:
      return "rf";
  }
  return "krr";
}

}  // namespace nlts
