#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nlts/bench.hpp"
#include "nlts/theory.hpp"

namespace nlts::cli {

enum class Subcommand { simulate, fit, bench, bounds, rates };

/// Raised for malformed command lines; exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for --help; carries the help text. Exit code 0.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RatesArgs {
  int q = 0;
  std::vector<double> beta;  // one value is broadcast to all q+1 layers
  std::vector<int> t;
  double T = 0.0;
  double r = 1.0;
  double C_S = 1.0;
};

struct BoundsArgs {
  NetworkClassParams cls;
  double delta = 0.5;
  std::optional<double> T;
};

struct SimulateArgs {
  std::string model;
  std::optional<double> v;
  Index T = 400;
  Index burn_in = 100;
};

struct CliConfig {
  Subcommand subcommand = Subcommand::bench;
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<Index> reps;
  ReportFormat format = ReportFormat::csv;
  std::optional<unsigned> threads;
  int verbosity = 0;

  RatesArgs rates;
  BoundsArgs bounds;
  SimulateArgs simulate;
};

/// Strict parse of argv[1..]. Throws UsageError or HelpRequested.
CliConfig parse_args(const std::vector<std::string>& args);

/// Executes a parsed command. Returns 0 on success and 1 on a domain error (one line on err).
int run(const CliConfig& cfg, std::ostream& out, std::ostream& err);

/// parse_args + run with exit codes 0 (success or help), 1 (domain error), 2 (usage error).
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// --threads, else NLTS_THREADS, else 1.
unsigned resolve_threads(const CliConfig& cfg);

}  // namespace nlts::cli
