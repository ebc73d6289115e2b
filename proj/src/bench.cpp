#include "nlts/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "nlts/config.hpp"
#include "nlts/format.hpp"

namespace nlts {

using nlohmann::json;

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::krr:
      return "krr";
    case EstimatorKind::knn:
      return "knn";
    case EstimatorKind::rf:
      return "rf";
    case EstimatorKind::npdnn:
      return "npdnn";
    case EstimatorKind::spdnn:
      return "spdnn";
  }
  return "knn";
}

EstimatorKind estimator_from_string(std::string_view name) {
  for (EstimatorKind k :
       {EstimatorKind::krr, EstimatorKind::knn, EstimatorKind::rf, EstimatorKind::npdnn, EstimatorKind::spdnn}) {
    if (to_string(k) == name) return k;
  }
  throw ParameterError("unknown estimator '" + std::string(name) + "'");
}

void BenchConfig::validate() const {
  dgp.validate();
  if (T < 2) throw ParameterError("bench: T must be >= 2");
  if (burn_in < 0) throw ParameterError("bench: burn_in must be >= 0");
  if (n_eval < 1) throw ParameterError("bench: n_eval must be >= 1");
  if (replications < 1) throw ParameterError("bench: replications must be >= 1");
  if (rf_trees < 1) throw ParameterError("bench: rf_trees must be >= 1");
  train.validate();
  arch.validate();
}

json bench_config_to_json(const BenchConfig& cfg) {
  std::vector<std::string> names;
  for (EstimatorKind e : cfg.estimators) names.emplace_back(to_string(e));
  return json{{"schema_version", 1},
              {"model", spec_to_json(cfg.dgp)},
              {"T", cfg.T},
              {"burn_in", cfg.burn_in},
              {"n_eval", cfg.n_eval},
              {"replications", cfg.replications},
              {"estimators", names},
              {"base_seed", cfg.base_seed},
              {"train", train_config_to_json(cfg.train)},
              {"arch", hidden_layers_to_json(cfg.arch)},
              {"rf_trees", cfg.rf_trees},
              {"record_timings", cfg.record_timings}};
}

BenchConfig bench_config_from_json(const json& j) {
  require_known_keys(j,
                     {"schema_version", "model", "T", "burn_in", "n_eval", "replications", "estimators", "base_seed",
                      "train", "arch", "rf_trees", "record_timings"},
                     "bench config");
  if (!j.contains("schema_version") || j.at("schema_version") != 1)
    throw FormatError("bench config: schema_version must be 1");
  if (!j.contains("model")) throw FormatError("bench config: missing 'model'");
  BenchConfig cfg;
  try {
    cfg.dgp = spec_from_json(j.at("model"));
    if (j.contains("T")) cfg.T = j.at("T").get<Index>();
    if (j.contains("burn_in")) cfg.burn_in = j.at("burn_in").get<Index>();
    if (j.contains("n_eval")) cfg.n_eval = j.at("n_eval").get<Index>();
    if (j.contains("replications")) cfg.replications = j.at("replications").get<Index>();
    if (j.contains("base_seed")) cfg.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("rf_trees")) cfg.rf_trees = j.at("rf_trees").get<Index>();
    if (j.contains("record_timings")) cfg.record_timings = j.at("record_timings").get<bool>();
    if (j.contains("estimators")) {
      cfg.estimators.clear();
      for (const auto& name : j.at("estimators")) cfg.estimators.push_back(estimator_from_string(name.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bench config: ") + e.what());
  }
  if (j.contains("train")) cfg.train = train_config_from_json(j.at("train"));
  cfg.arch = hidden_layers_from_json(j.contains("arch") ? j.at("arch") : json::object(), cfg.dgp.lag);
  cfg.validate();
  return cfg;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xF];
  return out;
}

std::string config_digest(const BenchConfig& cfg) { return fnv1a_hex(bench_config_to_json(cfg).dump()); }

std::uint64_t training_seed(std::uint64_t base_seed, Index rep) { return base_seed ^ static_cast<std::uint64_t>(rep); }

std::uint64_t evaluation_seed(std::uint64_t base_seed, Index rep) {
  return base_seed ^ static_cast<std::uint64_t>(rep) ^ kEvalSeedSalt;
}

EvalSet make_eval_set(const DgpSpec& spec, Index n_eval, Index burn_in, std::uint64_t seed) {
  if (n_eval < 1) throw ParameterError("empirical_l2: n_eval must be >= 1");
  SeriesDataset data = simulate_dataset(spec, n_eval, burn_in, seed);
  EvalSet eval;
  eval.target = mean_function_batch(spec, data.X);
  eval.X = std::move(data.X);
  return eval;
}

double empirical_l2(const BatchPredictor& pred, const EvalSet& eval) {
  constexpr Index kBlock = 4096;
  const Index n = eval.X.rows();
  if (n == 0) throw DimensionError("empirical_l2: empty evaluation set");
  double sse = 0.0;
  for (Index start = 0; start < n; start += kBlock) {
    const Index len = std::min(kBlock, n - start);
    const Eigen::VectorXd p = pred(eval.X.middleRows(start, len));
    if (p.size() != len) throw DimensionError("empirical_l2: predictor returned the wrong number of values");
    sse += (p - eval.target.segment(start, len)).squaredNorm();
  }
  return sse / static_cast<double>(n);
}

double empirical_l2(const BatchPredictor& pred, const DgpSpec& spec, Index n_eval, std::uint64_t seed,
                    Index burn_in) {
  return empirical_l2(pred, make_eval_set(spec, n_eval, burn_in, seed));
}

namespace {

BatchPredictor network_predictor(const TruncatedEstimatord& est) {
  return [&est](const Eigen::Ref<const Eigen::MatrixXd>& X) -> Eigen::VectorXd {
    return truncated_predict_batch(est, X);
  };
}

BatchPredictor baseline_predictor(const Predictor& p) {
  return [&p](const Eigen::Ref<const Eigen::MatrixXd>& X) -> Eigen::VectorXd { return p.predict(X); };
}

void fill_row(BenchRow& row, EstimatorKind kind, const BenchConfig& cfg, const SeriesDataset& data,
              const EvalSet& eval, std::uint64_t seed) {
  TrainConfig train = cfg.train;
  train.seed = seed;
  Architecture arch = cfg.arch;
  arch.input_dim = data.dim();
  switch (kind) {
    case EstimatorKind::krr: {
      const Predictor p(fit_krr(data.X, data.Y));
      row.selected_gamma = p.as<KernelRidge>().gamma();
      row.selected_alpha = p.as<KernelRidge>().alpha();
      row.empirical_l2 = empirical_l2(baseline_predictor(p), eval);
      break;
    }
    case EstimatorKind::knn: {
      const Predictor p(fit_knn(data.X, data.Y));
      row.selected_k = p.as<NearestNeighbors>().k();
      row.empirical_l2 = empirical_l2(baseline_predictor(p), eval);
      break;
    }
    case EstimatorKind::rf: {
      ForestOptions opts;
      opts.n_trees = cfg.rf_trees;
      opts.seed = seed;
      const Predictor p(fit_rf(data.X, data.Y, opts));
      row.selected_mtry = p.as<RandomForest>().mtry();
      row.empirical_l2 = empirical_l2(baseline_predictor(p), eval);
      break;
    }
    case EstimatorKind::npdnn: {
      const FitResult fit = fit_npdnn(data.X, data.Y, arch, train);
      row.epochs = fit.epochs_used;
      row.empirical_l2 = empirical_l2(network_predictor(fit.estimator), eval);
      break;
    }
    case EstimatorKind::spdnn: {
      const FitResult fit = fit_spdnn(data.X, data.Y, arch, train);
      row.epochs = fit.epochs_used;
      row.selected_lambda = fit.selected_lambda;
      row.empirical_l2 = empirical_l2(network_predictor(fit.estimator), eval);
      break;
    }
  }
}

}  // namespace

std::vector<BenchRow> run_replication(const BenchConfig& cfg, Index rep) {
  if (rep < 0 || rep >= cfg.replications) throw ParameterError("run_replication: replication index out of range");
  const std::uint64_t seed = training_seed(cfg.base_seed, rep);
  std::vector<BenchRow> rows;
  rows.reserve(cfg.estimators.size());

  SeriesDataset data;
  EvalSet eval;
  try {
    data = simulate_dataset(cfg.dgp, cfg.T, cfg.burn_in, seed);
    eval = make_eval_set(cfg.dgp, cfg.n_eval, cfg.burn_in, evaluation_seed(cfg.base_seed, rep));
  } catch (const Error& e) {
    for (EstimatorKind kind : cfg.estimators) {
      BenchRow row;
      row.model = cfg.dgp.label();
      row.replication = rep;
      row.estimator = kind;
      row.error = e.what();
      rows.push_back(std::move(row));
    }
    return rows;
  }

  for (EstimatorKind kind : cfg.estimators) {
    BenchRow row;
    row.model = cfg.dgp.label();
    row.replication = rep;
    row.estimator = kind;
    const auto start = std::chrono::steady_clock::now();
    try {
      fill_row(row, kind, cfg, data, eval, seed);
      if (row.empirical_l2 && !std::isfinite(*row.empirical_l2)) {
        row.error = "non-finite empirical L2";
        row.empirical_l2.reset();
      }
    } catch (const std::exception& e) {
      const std::string model = row.model;
      row = BenchRow{};
      row.model = model;
      row.replication = rep;
      row.estimator = kind;
      row.error = e.what();
      if (row.error.empty()) row.error = "unknown failure";
    }
    if (cfg.record_timings)
      row.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

BenchReport run_benchmark(const BenchConfig& cfg, unsigned threads, const std::function<void(Index)>& on_done) {
  cfg.validate();
  const auto reps = static_cast<std::size_t>(cfg.replications);
  std::vector<std::vector<BenchRow>> per_rep(reps);
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  auto worker = [&] {
    for (std::size_t r = next++; r < reps; r = next++) {
      per_rep[r] = run_replication(cfg, static_cast<Index>(r));
      if (on_done) {
        std::lock_guard lock(callback_mutex);
        on_done(static_cast<Index>(r));
      }
    }
  };
  const unsigned n_workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }

  BenchReport report;
  report.config = bench_config_to_json(cfg);
  report.config_digest = fnv1a_hex(report.config.dump());
  for (auto& rows : per_rep) {
    for (auto& row : rows) report.rows.push_back(std::move(row));
  }
  return report;
}

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw ParameterError("unknown report format '" + std::string(name) + "'");
}

namespace {

template <typename T>
std::string cell(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_floating_point_v<T>) {
    return format_double(*v);
  } else {
    return std::to_string(*v);
  }
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return out + '"';
}

template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

std::string report_to_csv(const BenchReport& report) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const BenchRow& r : report.rows) {
    out += csv_escape(r.model);
    out += ',' + std::to_string(r.replication);
    out += ',' + std::string(to_string(r.estimator));
    out += ',' + cell(r.empirical_l2);
    out += ',' + cell(r.fit_seconds);
    out += ',' + cell(r.selected_lambda);
    out += ',' + cell(r.selected_k);
    out += ',' + cell(r.selected_gamma);
    out += ',' + cell(r.selected_alpha);
    out += ',' + cell(r.selected_mtry);
    out += ',' + cell(r.epochs);
    out += ',' + csv_escape(r.error);
    out += '\n';
  }
  return out;
}

json report_to_json(const BenchReport& report) {
  json rows = json::array();
  for (const BenchRow& r : report.rows) {
    rows.push_back(json{{"model", r.model},
                        {"replication", r.replication},
                        {"estimator", std::string(to_string(r.estimator))},
                        {"empirical_l2", opt_json(r.empirical_l2)},
                        {"fit_seconds", opt_json(r.fit_seconds)},
                        {"selected_lambda", opt_json(r.selected_lambda)},
                        {"selected_k", opt_json(r.selected_k)},
                        {"selected_gamma", opt_json(r.selected_gamma)},
                        {"selected_alpha", opt_json(r.selected_alpha)},
                        {"selected_mtry", opt_json(r.selected_mtry)},
                        {"epochs", opt_json(r.epochs)},
                        {"error", r.error}});
  }
  return json{{"schema_version", report.schema_version},
              {"config_digest", report.config_digest},
              {"config", report.config},
              {"rows", rows}};
}

BenchReport report_from_json(const json& j) {
  try {
    BenchReport report;
    report.schema_version = j.at("schema_version").get<int>();
    if (report.schema_version != kReportSchemaVersion) throw FormatError("report: unsupported schema_version");
    report.config_digest = j.at("config_digest").get<std::string>();
    report.config = j.at("config");
    for (const auto& jr : j.at("rows")) {
      BenchRow r;
      r.model = jr.at("model").get<std::string>();
      r.replication = jr.at("replication").get<Index>();
      r.estimator = estimator_from_string(jr.at("estimator").get<std::string>());
      r.empirical_l2 = opt_from<double>(jr, "empirical_l2");
      r.fit_seconds = opt_from<double>(jr, "fit_seconds");
      r.selected_lambda = opt_from<double>(jr, "selected_lambda");
      r.selected_k = opt_from<Index>(jr, "selected_k");
      r.selected_gamma = opt_from<double>(jr, "selected_gamma");
      r.selected_alpha = opt_from<double>(jr, "selected_alpha");
      r.selected_mtry = opt_from<Index>(jr, "selected_mtry");
      r.epochs = opt_from<Index>(jr, "epochs");
      r.error = jr.value("error", std::string{});
      report.rows.push_back(std::move(r));
    }
    return report;
  } catch (const json::exception& e) {
    throw FormatError(std::string("report JSON: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot move report into place at " + path.string());
  }
}

void emit_report(const BenchReport& report, const std::filesystem::path& path, ReportFormat format) {
  if (format == ReportFormat::csv) {
    write_file_atomic(path, report_to_csv(report));
  } else {
    write_file_atomic(path, report_to_json(report).dump(2) + "\n");
  }
}

}  // namespace nlts
