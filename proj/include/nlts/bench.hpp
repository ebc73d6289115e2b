#pragma once

// Monte Carlo comparison of the estimators: simulate a training path, fit every requested
// estimator on it, and score each against the true mean along a fresh evaluation path.
//
// Seeds: replication r trains on base_seed ^ r and evaluates on base_seed ^ r ^ 0x9E37.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nlts/baselines.hpp"
#include "nlts/dgp.hpp"
#include "nlts/net.hpp"
#include "nlts/train.hpp"

namespace nlts {

inline constexpr std::uint64_t kEvalSeedSalt = 0x9E37;
inline constexpr int kReportSchemaVersion = 1;

enum class EstimatorKind { krr, knn, rf, npdnn, spdnn };
std::string_view to_string(EstimatorKind kind);
EstimatorKind estimator_from_string(std::string_view name);

struct BenchConfig {
  DgpSpec dgp = tar_spec();
  Index T = 400;
  Index burn_in = 100;
  Index n_eval = 100000;
  Index replications = 500;
  std::vector<EstimatorKind> estimators{EstimatorKind::krr, EstimatorKind::knn, EstimatorKind::rf,
                                        EstimatorKind::npdnn, EstimatorKind::spdnn};
  std::uint64_t base_seed = 1;
  TrainConfig train;
  Architecture arch = Architecture::uniform(2, 3, 128);  // input_dim follows dgp.lag
  Index rf_trees = 500;
  /// Wall-clock fit times make reports non-reproducible, so they are opt-in.
  bool record_timings = false;

  void validate() const;
};

nlohmann::json bench_config_to_json(const BenchConfig& cfg);
BenchConfig bench_config_from_json(const nlohmann::json& j);

/// 64-bit FNV-1a of the bytes, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string config_digest(const BenchConfig& cfg);

std::uint64_t training_seed(std::uint64_t base_seed, Index rep);
std::uint64_t evaluation_seed(std::uint64_t base_seed, Index rep);

/// Covariates of an independent path together with the noiseless target m(X).
struct EvalSet {
  Eigen::MatrixXd X;
  Eigen::VectorXd target;
};

EvalSet make_eval_set(const DgpSpec& spec, Index n_eval, Index burn_in, std::uint64_t seed);

using BatchPredictor = std::function<Eigen::VectorXd(const Eigen::Ref<const Eigen::MatrixXd>&)>;

/// Mean of (pred(X_t) - m(X_t))^2 over the evaluation set, predicting in row blocks.
double empirical_l2(const BatchPredictor& pred, const EvalSet& eval);
double empirical_l2(const BatchPredictor& pred, const DgpSpec& spec, Index n_eval, std::uint64_t seed,
                    Index burn_in = 100);

struct BenchRow {
  std::string model;
  Index replication = 0;
  EstimatorKind estimator = EstimatorKind::knn;
  std::optional<double> empirical_l2;
  std::optional<double> fit_seconds;
  std::optional<double> selected_lambda;
  std::optional<Index> selected_k;
  std::optional<double> selected_gamma;
  std::optional<double> selected_alpha;
  std::optional<Index> selected_mtry;
  std::optional<Index> epochs;
  std::string error;  // non-empty marks a failed cell

  bool failed() const { return !error.empty(); }
  bool operator==(const BenchRow&) const = default;
};

struct BenchReport {
  int schema_version = kReportSchemaVersion;
  nlohmann::json config;
  std::string config_digest;
  std::vector<BenchRow> rows;

  bool operator==(const BenchReport&) const = default;
};

/// Rows for one replication in the configured estimator order. Fit failures are recorded per row.
std::vector<BenchRow> run_replication(const BenchConfig& cfg, Index rep);

/// All replications on `threads` workers; rows are ordered by (replication, estimator) regardless.
BenchReport run_benchmark(const BenchConfig& cfg, unsigned threads = 1,
                          const std::function<void(Index)>& on_replication_done = {});

enum class ReportFormat { csv, json };
ReportFormat report_format_from_string(std::string_view name);

inline constexpr std::string_view kCsvHeader =
    "model,replication,estimator,empirical_l2,fit_seconds,selected_lambda,selected_k,selected_gamma,"
    "selected_alpha,selected_mtry,epochs,error";

std::string report_to_csv(const BenchReport& report);
nlohmann::json report_to_json(const BenchReport& report);
BenchReport report_from_json(const nlohmann::json& j);

/// Writes to a sibling temporary file and renames it into place.
void emit_report(const BenchReport& report, const std::filesystem::path& path, ReportFormat format);
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace nlts
