#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlts/cli.hpp"
#include "nlts/net_io.hpp"

using namespace nlts;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::main(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  std::filesystem::path path;
  TempDir() : path(std::filesystem::temp_directory_path() / "nlts_cli_test") {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return file(name);
  }
};

constexpr const char* kBenchConfig = R"({
  "schema_version": 1,
  "model": {"name": "tar"},
  "T": 100, "burn_in": 50, "n_eval": 300, "replications": 1,
  "estimators": ["knn"], "base_seed": 3
})";

}  // namespace

TEST_CASE("argument parsing") {
  const cli::CliConfig c = cli::parse_args({"bench", "--config", "c.json", "--out", "r.csv"});
  CHECK(c.subcommand == cli::Subcommand::bench);
  CHECK(c.config_path == "c.json");
  CHECK_FALSE(c.seed.has_value());

  CHECK_THROWS_AS(cli::parse_args({"bench"}), cli::UsageError);
  CHECK_THROWS_AS(cli::parse_args({"bench", "--config", "c.json", "--out", "r.csv", "--bogus"}), cli::UsageError);
  CHECK_THROWS_AS(cli::parse_args({"bench", "--config", "c.json", "--out", "r", "--format", "xml"}),
                  cli::UsageError);
  CHECK_THROWS_AS(cli::parse_args({}), cli::UsageError);
  CHECK_THROWS_AS(cli::parse_args({"--help"}), cli::HelpRequested);

  const cli::CliConfig r = cli::parse_args({"rates", "--q", "1", "--beta", "2,0.5", "--t", "1", "--T", "1e4"});
  CHECK(r.rates.beta == std::vector<double>{2.0, 0.5});
  CHECK(r.rates.t == std::vector<int>{1});
}

TEST_CASE("exit codes") {
  const Outcome help = invoke({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("bench") != std::string::npos);
  CHECK(invoke({"bench", "--help"}).code == 0);
  CHECK(invoke({"nonsense"}).code == 2);
  CHECK(invoke({"bench"}).code == 2);

  const Outcome bad = invoke({"bounds", "--S", "1", "--L", "1", "--N", "1", "--B", "1", "--delta", "1.5"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("delta must lie in (0, 1)") != std::string::npos);
  CHECK(std::count(bad.err.begin(), bad.err.end(), '\n') == 1);
}

TEST_CASE("rates and bounds output") {
  const Outcome r = invoke({"rates", "--q", "0", "--beta", "2", "--t", "1", "--T", "100000"});
  CHECK(r.code == 0);
  CHECK(r.err.empty());
  CHECK(r.out.find("phi_T = 9.99999999999999") != std::string::npos);
  CHECK(r.out.find("kappa = 0.25") != std::string::npos);
  CHECK(r.out.find("S_T = ") != std::string::npos);

  const Outcome b =
      invoke({"bounds", "--S", "1", "--L", "1", "--N", "1", "--B", "1", "--tau", "0.01", "--delta", "0.5", "--T", "100"});
  CHECK(b.code == 0);
  CHECK(b.out.find("covering_bound_sparse = ") != std::string::npos);
  CHECK(b.out.find("covering_bound_clipped = 9.01517971529") != std::string::npos);
  CHECK(b.out.find("x C_rho") != std::string::npos);
}

TEST_CASE("bench command") {
  const TempDir dir;
  const std::string config = dir.write("bench.json", kBenchConfig);
  const Outcome a = invoke({"bench", "--config", config, "--out", dir.file("a.csv")});
  CHECK(a.code == 0);
  CHECK(a.err.empty());
  const std::string csv = slurp(dir.file("a.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);

  CHECK(invoke({"bench", "--config", config, "--out", dir.file("b.csv"), "--threads", "2"}).code == 0);
  CHECK(slurp(dir.file("b.csv")) == csv);

  CHECK(invoke({"bench", "--config", config, "--out", dir.file("c.csv"), "--reps", "3", "--seed", "8"}).code == 0);
  const std::string three = slurp(dir.file("c.csv"));
  CHECK(std::count(three.begin(), three.end(), '\n') == 4);

  CHECK(invoke({"bench", "--config", config, "--out", dir.file("r.json"), "--format", "json"}).code == 0);
  CHECK(nlohmann::json::parse(slurp(dir.file("r.json"))).at("rows").size() == 1);

  const Outcome verbose = invoke({"bench", "--config", config, "--out", dir.file("d.csv"), "-v"});
  CHECK(verbose.err.find("replication 1/1") != std::string::npos);

  const std::string typo = dir.write("typo.json", R"({"schema_version": 1, "model": {"name": "tar"}, "reps": 2})");
  const Outcome t = invoke({"bench", "--config", typo, "--out", dir.file("e.csv")});
  CHECK(t.code == 1);
  CHECK(t.err.find("unknown key 'reps'") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir.file("e.csv")));
}

TEST_CASE("simulate and fit commands") {
  const TempDir dir;
  CHECK(invoke({"simulate", "--model", "expar", "--T", "150", "--seed", "4", "--out", dir.file("y.csv")}).code == 0);
  const std::string first = slurp(dir.file("y.csv"));
  CHECK(first.rfind("y\n", 0) == 0);
  CHECK(std::count(first.begin(), first.end(), '\n') == 151);
  CHECK(invoke({"simulate", "--model", "expar", "--T", "150", "--seed", "4", "--out", dir.file("z.csv")}).code == 0);
  CHECK(slurp(dir.file("z.csv")) == first);
  CHECK(invoke({"simulate", "--model", "sim_v", "--v", "5", "--T", "10", "--out", dir.file("v.csv")}).code == 0);
  CHECK(invoke({"simulate", "--model", "nope", "--out", dir.file("n.csv")}).code == 1);

  const std::string knn = dir.write("knn.json", R"({"schema_version": 1, "data": "y.csv", "d": 2, "estimator": "knn"})");
  CHECK(invoke({"fit", "--config", knn, "--out", dir.file("knn_out.json")}).code == 0);
  CHECK(nlohmann::json::parse(slurp(dir.file("knn_out.json"))).contains("selected_k"));

  const std::string net = dir.write("net.json", R"({"schema_version": 1, "data": "y.csv", "d": 2,
    "estimator": "spdnn", "seed": 1, "arch": {"depth": 1, "width": 8},
    "train": {"max_epochs": 5}, "lambda_grid": [0.0, 0.01]})");
  CHECK(invoke({"fit", "--config", net, "--out", dir.file("net_out.json")}).code == 0);
  const auto j = nlohmann::json::parse(slurp(dir.file("net_out.json")));
  CHECK((j.at("selected_lambda") == 0.0 || j.at("selected_lambda") == 0.01));
  CHECK(mlp_from_json(j.at("network")).arch().widths == std::vector<Index>{8});
}

TEST_CASE("thread resolution") {
  cli::CliConfig cfg;
  cfg.threads = 3;
  CHECK(cli::resolve_threads(cfg) == 3);
  cfg.threads.reset();
  setenv("NLTS_THREADS", "5", 1);
  CHECK(cli::resolve_threads(cfg) == 5);
  setenv("NLTS_THREADS", "junk", 1);
  CHECK(cli::resolve_threads(cfg) == 1);
  unsetenv("NLTS_THREADS");
  CHECK(cli::resolve_threads(cfg) == 1);
}
