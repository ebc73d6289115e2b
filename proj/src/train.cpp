#include "nlts/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace nlts {

namespace {

// Minibatch shuffling uses its own stream so the initialisation is shared across phases.
constexpr std::uint64_t kShuffleStream = 0x5851F42D4C957F2DULL;

void check_data(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y) {
  if (X.rows() != Y.size())
    throw DimensionError("training data: " + std::to_string(X.rows()) + " inputs but " +
                         std::to_string(Y.size()) + " targets");
  if (Y.size() == 0) throw DimensionError("training data is empty");
}

double mse(const Eigen::VectorXd& pred, const Eigen::Ref<const Eigen::VectorXd>& Y) {
  return (pred - Y).squaredNorm() / static_cast<double>(Y.size());
}

class Trainer {
 public:
  Trainer(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
          const Architecture& arch, const TrainConfig& cfg)
      : X_(X),
        Y_(Y),
        cfg_(cfg),
        net_(init_network<double>(arch, cfg.init_scale, cfg.seed)),
        theta_(flatten_params(net_)),
        adam_(AdamState::zeros(theta_.size())),
        rng_(cfg.seed ^ kShuffleStream),
        order_(static_cast<std::size_t>(Y.size())) {
    std::iota(order_.begin(), order_.end(), Index{0});
  }

  void run_epoch(Index epoch) {
    std::shuffle(order_.begin(), order_.end(), rng_);
    const Index n = Y_.size();
    const bool penalised = cfg_.penalty && cfg_.penalty->lambda > 0.0;
    for (Index start = 0; start < n; start += cfg_.batch_size) {
      const Index len = std::min(cfg_.batch_size, n - start);
      Eigen::MatrixXd xb(len, X_.cols());
      Eigen::VectorXd yb(len);
      for (Index i = 0; i < len; ++i) {
        const Index row = order_[static_cast<std::size_t>(start + i)];
        xb.row(i) = X_.row(row);
        yb(i) = Y_(row);
      }
      const ForwardPass<double> pass = forward_pass(net_, xb);
      const Eigen::VectorXd residual_grads = (2.0 / static_cast<double>(len)) * (pass.output - yb);
      Eigen::VectorXd grad = gradient(net_, pass, residual_grads);
      if (penalised) grad += penalty_subgradient(*cfg_.penalty, theta_);
      if (!grad.allFinite())
        throw TrainingError("non-finite gradient in epoch " + std::to_string(epoch));
      adam_step(adam_, grad, cfg_, theta_);
      net_ = unflatten_params<double>(net_.arch(), theta_);
    }
  }

  const Mlpd& net() const { return net_; }

 private:
  Eigen::Ref<const Eigen::MatrixXd> X_;
  Eigen::Ref<const Eigen::VectorXd> Y_;
  const TrainConfig& cfg_;
  Mlpd net_;
  Eigen::VectorXd theta_;
  AdamState adam_;
  std::mt19937_64 rng_;
  std::vector<Index> order_;
};

struct PhaseOne {
  Index best_epoch = 0;
  Index epochs_run = 0;
  double best_mse = 0.0;
  std::vector<double> trace;
};

PhaseOne select_epochs(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                       const Architecture& arch, const TrainConfig& cfg) {
  const Index n = Y.size();
  if (n < 2) throw DimensionError("early stopping needs at least 2 observations");
  const Index half = n / 2;
  const auto x_fit = X.topRows(half);
  const auto y_fit = Y.head(half);
  const auto x_val = X.bottomRows(n - half);
  const auto y_val = Y.tail(n - half);

  Trainer trainer(x_fit, y_fit, arch, cfg);
  EarlyStopping stopper(cfg.patience);
  PhaseOne out;
  for (Index epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    trainer.run_epoch(epoch);
    const double val = mse(forward_batch(trainer.net(), x_val), y_val);
    if (!std::isfinite(val)) throw TrainingError("non-finite validation loss in epoch " + std::to_string(epoch));
    out.trace.push_back(val);
    if (stopper.update(val)) break;
  }
  out.best_epoch = stopper.best_epoch();
  out.best_mse = stopper.best_mse();
  out.epochs_run = stopper.epochs_seen();
  return out;
}

double default_clamp(const Eigen::Ref<const Eigen::VectorXd>& Y) { return Y.cwiseAbs().maxCoeff() + 1.0; }

FitResult refit(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                const Architecture& arch, const TrainConfig& cfg, PhaseOne phase1) {
  FitResult result;
  result.estimator.net = train_epochs(X, Y, arch, cfg, phase1.best_epoch);
  result.estimator.clamp = cfg.clamp.value_or(default_clamp(Y));
  result.estimator.cube_support = cfg.cube_support;
  result.epochs_used = phase1.best_epoch;
  result.phase1_epochs = phase1.epochs_run;
  result.best_validation_mse = phase1.best_mse;
  result.validation_mse_trace = std::move(phase1.trace);
  result.final_penalized_risk = cfg.penalty ? penalized_risk(result.estimator.net, X, Y, *cfg.penalty)
                                            : empirical_risk(result.estimator.net, X, Y);
  return result;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ParameterError("train: learning_rate must be > 0");
  if (batch_size < 1) throw ParameterError("train: batch_size must be >= 1");
  if (patience < 1) throw ParameterError("train: patience must be >= 1");
  if (max_epochs < 1) throw ParameterError("train: max_epochs must be >= 1");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw ParameterError("train: adam_beta1 must lie in (0, 1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw ParameterError("train: adam_beta2 must lie in (0, 1)");
  if (!(adam_eps > 0.0)) throw ParameterError("train: adam_eps must be > 0");
  if (clamp && !(*clamp > 0.0)) throw ParameterError("train: clamp must be > 0");
  if (!(init_scale >= 0.0)) throw ParameterError("train: init_scale must be >= 0");
  if (penalty) penalty->validate();
}

void adam_step(AdamState& state, const Eigen::Ref<const Eigen::VectorXd>& grad, const TrainConfig& cfg,
               Eigen::Ref<Eigen::VectorXd> theta) {
  if (grad.size() != theta.size() || state.m.size() != theta.size() || state.v.size() != theta.size())
    throw DimensionError("adam_step: gradient, moments and parameters must have equal length");
  if (!grad.allFinite()) throw TrainingError("adam_step: non-finite gradient");
  ++state.step;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  state.m = b1 * state.m + (1.0 - b1) * grad;
  state.v = b2 * state.v + (1.0 - b2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  theta.array() -= cfg.learning_rate * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.adam_eps);
}

double empirical_risk(const Mlpd& net, const Eigen::Ref<const Eigen::MatrixXd>& X,
                      const Eigen::Ref<const Eigen::VectorXd>& Y) {
  check_data(X, Y);
  return mse(forward_batch(net, X), Y);
}

double empirical_risk(const TruncatedEstimatord& est, const Eigen::Ref<const Eigen::MatrixXd>& X,
                      const Eigen::Ref<const Eigen::VectorXd>& Y) {
  check_data(X, Y);
  return mse(truncated_predict_batch(est, X), Y);
}

double penalized_risk(const Mlpd& net, const Eigen::Ref<const Eigen::MatrixXd>& X,
                      const Eigen::Ref<const Eigen::VectorXd>& Y, const ClippedPenalty& pen) {
  return empirical_risk(net, X, Y) + penalty_value(pen, flatten_params(net));
}

EarlyStopping::EarlyStopping(Index patience) : patience_(patience) {
  if (patience < 1) throw ParameterError("early stopping: patience must be >= 1");
}

bool EarlyStopping::update(double mse_value) {
  ++epoch_;
  if (best_epoch_ == 0 || mse_value < best_) {
    best_ = mse_value;
    best_epoch_ = epoch_;
  }
  return epoch_ - best_epoch_ >= patience_;
}

Mlpd train_epochs(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                  const Architecture& arch, const TrainConfig& cfg, Index epochs) {
  cfg.validate();
  check_data(X, Y);
  Trainer trainer(X, Y, arch, cfg);
  for (Index epoch = 1; epoch <= epochs; ++epoch) trainer.run_epoch(epoch);
  return trainer.net();
}

FitResult early_stop_train(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                           const Architecture& arch, const TrainConfig& cfg) {
  cfg.validate();
  check_data(X, Y);
  return refit(X, Y, arch, cfg, select_epochs(X, Y, arch, cfg));
}

FitResult fit_npdnn(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                    const Architecture& arch, const TrainConfig& cfg) {
  TrainConfig plain = cfg;
  plain.penalty.reset();
  return early_stop_train(X, Y, arch, plain);
}

FitResult fit_spdnn(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                    const Architecture& arch, const TrainConfig& cfg, std::optional<std::vector<double>> grid) {
  cfg.validate();
  check_data(X, Y);
  std::vector<double> lambdas;
  if (grid) {
    lambdas = *grid;
  } else {
    const auto g = lambda_grid(sample_variance(Y), static_cast<long long>(Y.size()));
    lambdas.assign(g.begin(), g.end());
  }
  if (lambdas.empty()) throw ParameterError("fit_spdnn: empty lambda grid");
  const double tau = cfg.penalty ? cfg.penalty->tau : 1e-9;

  std::optional<PhaseOne> best;
  double best_lambda = 0.0;
  for (double lambda : lambdas) {
    TrainConfig trial = cfg;
    trial.penalty = ClippedPenalty{lambda, tau};
    trial.penalty->validate();
    PhaseOne p = select_epochs(X, Y, arch, trial);
    if (!best || p.best_mse < best->best_mse || (p.best_mse == best->best_mse && lambda > best_lambda)) {
      best = std::move(p);
      best_lambda = lambda;
    }
  }

  TrainConfig chosen = cfg;
  chosen.penalty = ClippedPenalty{best_lambda, tau};
  FitResult result = refit(X, Y, arch, chosen, std::move(*best));
  result.selected_lambda = best_lambda;
  return result;
}

double sample_variance(const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (y.size() < 2) throw DimensionError("sample_variance: need at least 2 values");
  const double mean = y.mean();
  return (y.array() - mean).square().sum() / static_cast<double>(y.size() - 1);
}

}  // namespace nlts
