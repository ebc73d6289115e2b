#include "nlts/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nlts/baselines.hpp"
#include "nlts/config.hpp"
#include "nlts/format.hpp"
#include "nlts/net_io.hpp"

namespace nlts::cli {

using nlohmann::json;

namespace {

constexpr const char* kFormatHelp = "Report format: csv or json";

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_text(const CliConfig& cfg, std::ostream& out, const std::string& text) {
  if (cfg.out_path.empty()) {
    out << text;
  } else {
    write_file_atomic(cfg.out_path, text);
  }
}

std::string join(const Eigen::VectorXd& v) {
  std::string s;
  for (Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v(i));
  return s;
}

template <typename T>
std::vector<T> broadcast(const std::vector<T>& values, std::size_t layers, const char* name) {
  if (values.size() == layers) return values;
  if (values.size() == 1) return std::vector<T>(layers, values.front());
  throw ParameterError(std::string("rates: --") + name + " needs 1 or q+1 = " + std::to_string(layers) + " values");
}

int run_rates(const CliConfig& cfg, std::ostream& out) {
  const auto layers = static_cast<std::size_t>(cfg.rates.q + 1);
  CompositionClass cls;
  cls.q = cfg.rates.q;
  cls.beta = broadcast(cfg.rates.beta, layers, "beta");
  cls.t = broadcast(cfg.rates.t, layers, "t");
  const RateReport r = phi_rate(cls, cfg.rates.T);
  std::ostringstream s;
  s << "T = " << format_double(cfg.rates.T) << '\n'
    << "beta_star = " << join(r.beta_star) << '\n'
    << "phi_T = " << format_double(r.phi) << '\n'
    << "kappa = " << format_double(r.kappa) << '\n'
    << "S_T = " << format_double(sparsity_budget(r.kappa, cfg.rates.T, cfg.rates.r, cfg.rates.C_S))
    << " (C_S = " << format_double(cfg.rates.C_S) << ", r = " << format_double(cfg.rates.r) << ")\n";
  write_text(cfg, out, s.str());
  return 0;
}

int run_bounds(const CliConfig& cfg, std::ostream& out) {
  const BoundsArgs& b = cfg.bounds;
  std::ostringstream s;
  NetworkClassParams sparse = b.cls;
  sparse.tau.reset();
  s << "covering_bound_sparse = " << format_double(covering_bound_sparse(sparse, b.delta)) << '\n';
  if (b.cls.tau) {
    s << "covering_bound_clipped = " << format_double(covering_bound_clipped(b.cls, b.delta)) << '\n';
  }
  if (b.T) {
    s << "risk_bound_rate_term = " << format_double(risk_bound_rate_term(b.cls, *b.T)) << " x C_rho\n";
  }
  write_text(cfg, out, s.str());
  return 0;
}

int run_simulate(const CliConfig& cfg) {
  DgpSpec spec;
  if (!cfg.config_path.empty()) {
    spec = spec_from_json(read_json_file(cfg.config_path));
  } else {
    std::map<std::string, double> params;
    if (cfg.simulate.v) params["v"] = *cfg.simulate.v;
    spec = make_spec(dgp_kind_from_string(cfg.simulate.model), params);
  }
  const Eigen::VectorXd y = simulate(spec, cfg.simulate.T, cfg.simulate.burn_in, cfg.seed.value_or(0));
  std::string text = "y\n";
  for (Index i = 0; i < y.size(); ++i) text += format_double(y(i)) + '\n';
  write_file_atomic(cfg.out_path, text);
  return 0;
}

int run_fit(const CliConfig& cfg) {
  const json j = read_json_file(cfg.config_path);
  require_known_keys(j, {"schema_version", "data", "d", "estimator", "arch", "train", "seed", "lambda_grid"},
                     "fit config");
  if (!j.contains("schema_version") || j.at("schema_version") != 1)
    throw FormatError("fit config: schema_version must be 1");
  if (!j.contains("data") || !j.contains("d") || !j.contains("estimator"))
    throw FormatError("fit config: 'data', 'd' and 'estimator' are required");

  std::filesystem::path data_path = j.at("data").get<std::string>();
  if (data_path.is_relative()) data_path = std::filesystem::path(cfg.config_path).parent_path() / data_path;
  const SeriesDataset data = embed(read_series_csv(data_path), j.at("d").get<Index>());
  const EstimatorKind kind = estimator_from_string(j.at("estimator").get<std::string>());
  TrainConfig train = j.contains("train") ? train_config_from_json(j.at("train")) : TrainConfig{};
  train.seed = cfg.seed.value_or(j.value("seed", std::uint64_t{0}));

  json result{{"estimator", std::string(to_string(kind))}, {"n", data.size()}, {"d", data.dim()}};
  switch (kind) {
    case EstimatorKind::npdnn:
    case EstimatorKind::spdnn: {
      const Architecture arch =
          hidden_layers_from_json(j.contains("arch") ? j.at("arch") : json::object(), data.dim());
      std::optional<std::vector<double>> grid;
      if (j.contains("lambda_grid")) grid = j.at("lambda_grid").get<std::vector<double>>();
      const FitResult fit = kind == EstimatorKind::npdnn ? fit_npdnn(data.X, data.Y, arch, train)
                                                         : fit_spdnn(data.X, data.Y, arch, train, grid);
      result["epochs"] = fit.epochs_used;
      result["phase1_epochs"] = fit.phase1_epochs;
      result["selected_lambda"] = fit.selected_lambda ? json(*fit.selected_lambda) : json(nullptr);
      result["validation_mse_trace"] = fit.validation_mse_trace;
      result["training_mse"] = empirical_risk(fit.estimator, data.X, data.Y);
      result["clamp"] = fit.estimator.clamp;
      result["cube_support"] = fit.estimator.cube_support;
      result["network"] = mlp_to_json(fit.estimator.net);
      break;
    }
    case EstimatorKind::krr: {
      const KernelRidge m = fit_krr(data.X, data.Y);
      result["selected_gamma"] = m.gamma();
      result["selected_alpha"] = m.alpha();
      result["training_mse"] = (m.predict(data.X) - data.Y).squaredNorm() / static_cast<double>(data.size());
      break;
    }
    case EstimatorKind::knn: {
      const NearestNeighbors m = fit_knn(data.X, data.Y);
      result["selected_k"] = m.k();
      result["training_mse"] = (m.predict(data.X) - data.Y).squaredNorm() / static_cast<double>(data.size());
      break;
    }
    case EstimatorKind::rf: {
      ForestOptions opts;
      opts.seed = train.seed;
      const RandomForest m = fit_rf(data.X, data.Y, opts);
      result["selected_mtry"] = m.mtry();
      result["oob_mse"] = m.oob_mse();
      result["training_mse"] = (m.predict(data.X) - data.Y).squaredNorm() / static_cast<double>(data.size());
      break;
    }
  }
  write_file_atomic(cfg.out_path, result.dump(2) + "\n");
  return 0;
}

int run_bench(const CliConfig& cfg, std::ostream& err) {
  BenchConfig bench = bench_config_from_json(read_json_file(cfg.config_path));
  if (cfg.seed) bench.base_seed = *cfg.seed;
  if (cfg.reps) bench.replications = *cfg.reps;
  bench.validate();
  std::function<void(Index)> progress;
  if (cfg.verbosity > 0) {
    progress = [&err, &bench](Index rep) {
      err << "replication " << rep + 1 << "/" << bench.replications << " done\n";
    };
  }
  const BenchReport report = run_benchmark(bench, resolve_threads(cfg), progress);
  emit_report(report, cfg.out_path, cfg.format);
  return 0;
}

}  // namespace

unsigned resolve_threads(const CliConfig& cfg) {
  if (cfg.threads) return std::max(1u, *cfg.threads);
  if (const char* env = std::getenv("NLTS_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

CliConfig parse_args(const std::vector<std::string>& args) {
  CliConfig cfg;
  CLI::App app{"Deep-network and baseline estimators for nonlinear autoregressions", "nlts"};
  app.require_subcommand(1);

  std::string format = "csv";
  int verbose = 0;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  Index reps = 0;
  double tau = 0.0;
  double bound_T = 0.0;

  auto* simulate = app.add_subcommand("simulate", "Simulate a model and write the series as CSV");
  simulate->add_option("--config", cfg.config_path, "Model JSON {name, d, params, noise_sd}");
  auto* model_opt = simulate->add_option("--model", cfg.simulate.model, "Model name (expar, tar, far, aar, sim, sim_v)");
  simulate->add_option("--v", cfg.simulate.v, "sim_v parameter v");
  simulate->add_option("--T", cfg.simulate.T, "Observations kept after burn-in");
  simulate->add_option("--burn-in", cfg.simulate.burn_in, "Discarded initial observations");
  simulate->add_option("--seed", seed, "Random seed");
  simulate->add_option("--out", cfg.out_path, "Output CSV path")->required();
  simulate->add_flag("--verbose", verbose, "Verbose diagnostics");
  model_opt->excludes(simulate->get_option("--config"));

  auto* fit = app.add_subcommand("fit", "Fit one estimator to a series CSV");
  fit->add_option("--config", cfg.config_path, "Fit config JSON")->required();
  fit->add_option("--out", cfg.out_path, "Output JSON path")->required();
  fit->add_option("--seed", seed, "Seed override");
  fit->add_flag("-v,--verbose", verbose, "Verbose diagnostics");

  auto* bench = app.add_subcommand("bench", "Run the Monte Carlo benchmark");
  bench->add_option("--config", cfg.config_path, "Benchmark config JSON")->required();
  bench->add_option("--out", cfg.out_path, "Report path")->required();
  bench->add_option("--seed", seed, "Base seed override");
  bench->add_option("--reps", reps, "Replication count override")->check(CLI::PositiveNumber);
  bench->add_option("--format", format, kFormatHelp)->check(CLI::IsMember({"csv", "json"}));
  bench->add_option("--threads", threads, "Worker threads (default: NLTS_THREADS or 1)")->check(CLI::PositiveNumber);
  bench->add_flag("-v,--verbose", verbose, "Log one line per finished replication");

  auto* bounds = app.add_subcommand("bounds", "Covering-number bounds and the rate term of the risk bound");
  bounds->add_option("--S", cfg.bounds.cls.S, "Sparsity S")->required();
  bounds->add_option("--L", cfg.bounds.cls.L, "Depth L")->required();
  bounds->add_option("--N", cfg.bounds.cls.N, "Width N")->required();
  bounds->add_option("--B", cfg.bounds.cls.B, "Weight bound B >= 1")->required();
  bounds->add_option("--F", cfg.bounds.cls.F, "Sup-norm bound F");
  bounds->add_option("--tau", tau, "Clipping threshold (enables the clipped-class bound)");
  bounds->add_option("--delta", cfg.bounds.delta, "Covering radius delta in (0, 1)");
  bounds->add_option("--T", bound_T, "Sample size for the rate term");
  bounds->add_option("--out", cfg.out_path, "Write to a file instead of stdout");

  auto* rates = app.add_subcommand("rates", "Effective smoothness, phi_T, kappa and S_T for a composition class");
  rates->add_option("--q", cfg.rates.q, "Number of compositions q")->required();
  rates->add_option("--beta", cfg.rates.beta, "Smoothness beta_0..beta_q (comma separated)")
      ->required()
      ->delimiter(',');
  rates->add_option("--t", cfg.rates.t, "Effective dimensions t_0..t_q (comma separated)")->required()->delimiter(',');
  rates->add_option("--T", cfg.rates.T, "Sample size")->required();
  rates->add_option("--r", cfg.rates.r, "Log power in S_T");
  rates->add_option("--cs", cfg.rates.C_S, "Constant C_S in S_T");
  rates->add_option("--out", cfg.out_path, "Write to a file instead of stdout");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    for (auto* sub : app.get_subcommands()) throw HelpRequested(sub->help());
    throw HelpRequested(app.help());
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested(app.help("", CLI::AppFormatMode::All));
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (simulate->parsed()) {
    cfg.subcommand = Subcommand::simulate;
    if (cfg.config_path.empty() && cfg.simulate.model.empty())
      throw UsageError("simulate: one of --config or --model is required");
    if (simulate->count("--seed")) cfg.seed = seed;
  } else if (fit->parsed()) {
    cfg.subcommand = Subcommand::fit;
    if (fit->count("--seed")) cfg.seed = seed;
  } else if (bench->parsed()) {
    cfg.subcommand = Subcommand::bench;
    if (bench->count("--seed")) cfg.seed = seed;
    if (bench->count("--reps")) cfg.reps = reps;
    if (bench->count("--threads")) cfg.threads = threads;
    cfg.format = report_format_from_string(format);
  } else if (bounds->parsed()) {
    cfg.subcommand = Subcommand::bounds;
    if (bounds->count("--tau")) cfg.bounds.cls.tau = tau;
    if (bounds->count("--T")) cfg.bounds.T = bound_T;
  } else {
    cfg.subcommand = Subcommand::rates;
  }
  cfg.verbosity = verbose;
  return cfg;
}

int run(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    switch (cfg.subcommand) {
      case Subcommand::simulate:
        return run_simulate(cfg);
      case Subcommand::fit:
        return run_fit(cfg);
      case Subcommand::bench:
        return run_bench(cfg, err);
      case Subcommand::bounds:
        return run_bounds(cfg, out);
      case Subcommand::rates:
        return run_rates(cfg, out);
    }
  } catch (const std::exception& e) {
    err << "nlts: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliConfig cfg;
  try {
    cfg = parse_args(args);
  } catch (const HelpRequested& h) {
    out << h.what();
    return 0;
  } catch (const UsageError& e) {
    err << "nlts: " << e.what() << "\nRun 'nlts --help' for usage.\n";
    return 2;
  }
  return run(cfg, out, err);
}

}  // namespace nlts::cli
