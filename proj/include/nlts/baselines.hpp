#pragma once

// Comparator regressors: Gaussian-kernel ridge regression, k-nearest neighbours and a
// regression forest, each tuned the way the simulation study tunes them.

#include <Eigen/Dense>

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include "nlts/errors.hpp"

namespace nlts {

using Eigen::Index;

/// exp(-gamma |x - x'|^2) between the rows of A and the rows of B.
Eigen::MatrixXd rbf_kernel(const Eigen::Ref<const Eigen::MatrixXd>& A, const Eigen::Ref<const Eigen::MatrixXd>& B,
                           double gamma);

/// [begin, end) of fold f when n rows are cut into contiguous blocks.
std::pair<Index, Index> fold_bounds(Index n, Index folds, Index f);

class KernelRidge {
 public:
  /// Solves (K + n alpha I) w = Y; adds 1e-10 jitter once if the Cholesky factorisation fails.
  KernelRidge(Eigen::MatrixXd X, const Eigen::Ref<const Eigen::VectorXd>& Y, double gamma, double alpha);

  double predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

  double gamma() const { return gamma_; }
  double alpha() const { return alpha_; }
  const Eigen::VectorXd& dual_weights() const { return weights_; }

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd weights_;
  double gamma_;
  double alpha_;
};

struct KrrGrid {
  std::vector<double> gammas;  // default 2^-6 .. 2^4
  std::vector<double> alphas;  // default 1e-6 .. 1e2

  static KrrGrid standard();
};

KernelRidge fit_krr(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                    Index folds = 5, const KrrGrid& grid = KrrGrid::standard());

class NearestNeighbors {
 public:
  NearestNeighbors(Eigen::MatrixXd X, Eigen::VectorXd Y, Index k);

  /// Mean response of the k nearest rows; ties in distance go to the lower row index.
  /// Uses every stored row when k exceeds the sample size.
  double predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

  Index k() const { return k_; }

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd Y_;
  Index k_;
};

/// {5, 7, ..., 43}
std::vector<Index> default_k_grid();

NearestNeighbors fit_knn(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                         const std::vector<Index>& k_grid = default_k_grid(), Index folds = 5);

struct ForestOptions {
  Index n_trees = 500;
  Index min_leaf = 5;
  std::vector<Index> mtry_candidates;  // empty means 1..d
  std::uint64_t seed = 0;
};

class RandomForest {
 public:
  struct Node {
    Index feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    Index left = -1;
    Index right = -1;
    double value = 0.0;
  };
  using Tree = std::vector<Node>;

  RandomForest(std::vector<Tree> trees, Index dim, Index mtry, double oob_mse);

  double predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

  Index mtry() const { return mtry_; }
  double oob_mse() const { return oob_mse_; }
  Index num_trees() const { return static_cast<Index>(trees_.size()); }

 private:
  std::vector<Tree> trees_;
  Index dim_;
  Index mtry_;
  double oob_mse_;
};

/// Bagged CART trees; mtry picked by out-of-bag MSE among the candidates (ties to the smaller).
RandomForest fit_rf(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                    const ForestOptions& options = {});

enum class BaselineKind { krr, knn, rf };
std::string_view to_string(BaselineKind kind);

/// Any fitted baseline behind one prediction interface.
class Predictor {
 public:
  Predictor(KernelRidge m) : model_(std::move(m)) {}
  Predictor(NearestNeighbors m) : model_(std::move(m)) {}
  Predictor(RandomForest m) : model_(std::move(m)) {}

  BaselineKind kind() const { return static_cast<BaselineKind>(model_.index()); }
  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    return std::visit([&](const auto& m) { return m.predict(X); }, model_);
  }

  template <typename T>
  const T& as() const { return std::get<T>(model_); }

 private:
  std::variant<KernelRidge, NearestNeighbors, RandomForest> model_;
};

}  // namespace nlts
