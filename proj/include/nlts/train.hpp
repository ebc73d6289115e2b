#pragma once

// Adam training of (penalised) least squares for feedforward networks, with the
// half-split early-stopping protocol used to pick the number of epochs.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nlts/net.hpp"
#include "nlts/penalty.hpp"

namespace nlts {

struct TrainConfig {
  double learning_rate = 1e-3;
  Index batch_size = 64;
  Index patience = 5;
  Index max_epochs = 500;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::optional<ClippedPenalty> penalty;
  /// Output clamp F of the fitted estimator; max|Y| + 1 when unset.
  std::optional<double> clamp;
  bool cube_support = false;
  double init_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long long step = 0;

  static AdamState zeros(Index n) { return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0}; }
};

/// One bias-corrected Adam update of theta in place. Throws TrainingError on a non-finite gradient.
void adam_step(AdamState& state, const Eigen::Ref<const Eigen::VectorXd>& grad, const TrainConfig& cfg,
               Eigen::Ref<Eigen::VectorXd> theta);

double empirical_risk(const Mlpd& net, const Eigen::Ref<const Eigen::MatrixXd>& X,
                      const Eigen::Ref<const Eigen::VectorXd>& Y);
double empirical_risk(const TruncatedEstimatord& est, const Eigen::Ref<const Eigen::MatrixXd>& X,
                      const Eigen::Ref<const Eigen::VectorXd>& Y);

double penalized_risk(const Mlpd& net, const Eigen::Ref<const Eigen::MatrixXd>& X,
                      const Eigen::Ref<const Eigen::VectorXd>& Y, const ClippedPenalty& pen);

/// Patience rule: stop once `patience` consecutive epochs fail to improve strictly on the best MSE.
class EarlyStopping {
 public:
  explicit EarlyStopping(Index patience);

  /// Records the MSE of the next epoch; returns true when training should stop.
  bool update(double mse);

  Index best_epoch() const { return best_epoch_; }  // 1-based; 0 before any update
  double best_mse() const { return best_; }
  Index epochs_seen() const { return epoch_; }

 private:
  Index patience_;
  Index epoch_ = 0;
  Index best_epoch_ = 0;
  double best_ = 0.0;
};

struct FitResult {
  TruncatedEstimatord estimator;
  Index epochs_used = 0;   // epochs* chosen in phase 1 and used for the full-sample refit
  Index phase1_epochs = 0; // epochs run before the patience rule fired
  std::optional<double> selected_lambda;
  std::vector<double> validation_mse_trace;
  double best_validation_mse = 0.0;
  double final_penalized_risk = 0.0;
};

/// Trains `epochs` epochs of minibatch Adam from a fresh seeded initialisation.
Mlpd train_epochs(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                  const Architecture& arch, const TrainConfig& cfg, Index epochs);

/// Phase 1 trains on the first half and scores each epoch by plain MSE on the second half;
/// phase 2 retrains from the same initialisation on all rows for the best epoch count.
FitResult early_stop_train(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                           const Architecture& arch, const TrainConfig& cfg);

/// Non-penalised estimator; any penalty in cfg is ignored.
FitResult fit_npdnn(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                    const Architecture& arch, const TrainConfig& cfg);

/// Sparse-penalised estimator. lambda is chosen from `grid` (default lambda_grid(S_y, n)) by
/// phase-1 validation MSE, ties to the larger lambda; tau comes from cfg.penalty (default 1e-9).
FitResult fit_spdnn(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                    const Architecture& arch, const TrainConfig& cfg,
                    std::optional<std::vector<double>> grid = std::nullopt);

/// Unbiased sample variance.
double sample_variance(const Eigen::Ref<const Eigen::VectorXd>& y);

}  // namespace nlts
