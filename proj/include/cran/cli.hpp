// Experiment runner: JSON sweep configs, seeded Monte-Carlo sweeps over the
// RF energy target, the per-RRH energy budget or the fronthaul capacity, and
// CSV/JSON result tables. The `cran` executable is a thin wrapper around
// cli_main.
#ifndef CRAN_CLI_HPP
#define CRAN_CLI_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cran/model.hpp"
#include "cran/optimizer.hpp"
#include "json.hpp"

namespace cran {

/// Schema violation. `path` is a JSON-pointer-like location such as
/// "/scenario/energy_w/2".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class SweepVariable { QMin, Energy, Capacity };
enum class Strategy { Joint, Separate };

/// Config key of the variable, which also names its unit:
/// "q_min_uw", "energy_w" or "capacity_bps_hz".
const char* to_string(SweepVariable v);
const char* to_string(Strategy s);

struct SweepConfig {
  ScenarioConfig scenario;
  SolverOptions solver;
  SweepVariable variable = SweepVariable::QMin;
  std::vector<double> values;  // in the unit named by the variable
  int trials = 100;
  std::uint64_t seed = 1;
  std::vector<Strategy> strategies{Strategy::Joint};
  std::string output;  // empty: caller decides

  /// Throws ConfigError.
  void validate() const;
};

/// Strict parse: unknown keys, wrong types and out-of-range values raise
/// ConfigError naming the offending path. `require_sweep` is false for the
/// single-scenario commands, which ignore the sweep section.
SweepConfig parse_config(const nlohmann::json& j, bool require_sweep = true);
SweepConfig load_config(const std::string& path, bool require_sweep = true);
/// Inverse of parse_config; every default is written out explicitly.
nlohmann::json config_to_json(const SweepConfig& config);

/// The base scenario with the sweep variable set to `value` on every RRH.
ScenarioConfig scenario_at(const SweepConfig& config, double value);
/// Seed of trial t: derive_seed(base, t).
std::uint64_t trial_seed(std::uint64_t base, int trial);

struct ResultRow {
  std::string kind;  // "trial" or "aggregate"
  double q_min_uw = 0.0;
  double energy_w = 0.0;
  double capacity_bps_hz = 0.0;
  std::optional<int> trial;
  std::string strategy;
  std::string status;  // run status for trials, "aggregate" otherwise
  std::optional<double> min_rate_bps_hz;
  std::optional<double> min_energy_uw;
  std::optional<double> max_rrh_power_w;
  std::optional<double> assoc_rrhs_per_dr;
  std::optional<double> outer_iterations;
  std::optional<double> bisection_steps;
  std::optional<double> q_max_uw;
  std::optional<int> trials_used;
  std::optional<int> trials_excluded;

  bool operator==(const ResultRow&) const = default;
};

using ResultTable = std::vector<ResultRow>;

/// The fixed CSV header, in column order.
const std::vector<std::string>& csv_header();

/// One (value, trial, strategy) job. Never throws for solver trouble: the
/// status column carries it.
ResultRow run_trial(const SweepConfig& config, double value, int trial, Strategy strategy);

/// Aggregate rows (one per value and strategy): means over trials whose
/// status is converged or not_converged; every other trial is excluded.
ResultTable aggregate(const ResultTable& trials, const SweepConfig& config);

using ProgressFn = std::function<void(int done, int total)>;

/// All trial rows ordered by (value, trial, strategy), then the aggregates
/// ordered by (value, strategy). `workers` threads run trials concurrently.
ResultTable run_sweep(const SweepConfig& config, int workers = 1, const ProgressFn& progress = {});

/// Numbers use %.17g; empty optionals are empty fields; infinity is "inf".
std::string to_csv(const ResultTable& table);
/// Array of objects keyed by the CSV header; empty optionals are null and
/// infinity is the string "inf".
nlohmann::json to_json(const ResultTable& table);
ResultTable table_from_csv(const std::string& text);
ResultTable table_from_json(const nlohmann::json& j);

/// Self-contained solution file: scenario (channels included), beams and
/// association threshold, so `check` needs nothing else.
nlohmann::json solution_to_json(const Scenario& scenario, const BeamformingSolution& solution);
struct SolutionFile {
  Scenario scenario;
  Beams beams;
  double assoc_threshold = 1e-6;
};
SolutionFile solution_from_json(const nlohmann::json& j);

/// Entry point of the `cran` executable. Returns the process exit code.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace cran

#endif  // CRAN_CLI_HPP
