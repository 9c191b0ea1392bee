// Max-min fair joint information/energy beamforming.
//
// The pipeline is:
//   solve_max_energy        largest common RF energy the ERs can receive
//   build_peak_power_program / h_of_gamma
//                           weighted peak-power minimization at a fixed
//                           SINR target gamma (optimal value h(gamma))
//   bisection_gamma_max     largest gamma with h(gamma) <= 1
//   max_min_beamforming     reweighted-l1 fronthaul loop around the bisection
//
// Channels are divided by sigma inside the programs so that noise is 1 and
// the SINR rows are O(1); powers stay in watts.
#ifndef CRAN_OPTIMIZER_HPP
#define CRAN_OPTIMIZER_HPP

#include <limits>
#include <string>
#include <vector>

#include "cran/model.hpp"
#include "cran/sdp.hpp"

namespace cran {

struct SolverOptions {
  double tau = 1e-5;                 // reweighting regularizer, watts
  double eps_bisect = 1e-3;          // stop once h(gamma) is in [1 - eps, 1]
  // Relative bracket width at which a bisection against an unreachable top
  // stops: eps_bisect for the reported solution, this value inside the
  // reweighting loop whose iterates only feed the next weights.
  double eps_gamma_reweight = 1e-2;
  double eps_beta = 1e-3;            // relative per-entry change of beta
  double eps_rate = 1e-3;            // relative per-entry change of the rate estimates
  int max_bisect_iters = 50;
  int max_outer_iters = 20;
  double assoc_threshold = 1e-6;
  double feasibility_margin = 1e-3;  // require Q_min <= (1 - margin) * q_max
  IpmOptions ipm;

  void validate() const;
};

/// Fronthaul reweighting state. beta is K x L; an all-zero beta drops the
/// fronthaul rows from the program.
struct OuterState {
  Eigen::MatrixXd beta;
  Eigen::VectorXd rhat;
  int iteration = 0;

  static OuterState initial(const Scenario& scenario);
};

/// Structural knobs of the peak-power program beyond the plain joint form.
/// The defaults (from PeakPowerShape::joint) give K + J blocks of size M L.
struct PeakPowerShape {
  std::vector<std::vector<int>> dr_support;  // RRHs allowed to serve DR k
  bool energy_blocks = true;                 // optimize energy covariances V_j
  bool energy_rows = true;                   // include the RF energy rows
  std::vector<CVectorXd> fixed_energy_beams; // used when !energy_blocks
  std::vector<double> budgets_w;             // per-RRH budgets used in the power rows
  double sinr_cap = std::numeric_limits<double>::infinity();

  static PeakPowerShape joint(const Scenario& scenario);
};

struct MaxEnergyResult {
  SolveStatus status = SolveStatus::NumericalLimit;
  double q_max_w = 0.0;
  std::vector<CVectorXd> v;
  std::vector<HermitianMatrixXd> V;
};

/// Largest t with eta * sum_i tr(G_j V_i) >= t for every ER under the
/// per-RRH budgets. J == 0 gives q_max = 0 with no beams.
MaxEnergyResult solve_max_energy(const Scenario& scenario, const IpmOptions& ipm = {});

ConicProgram build_peak_power_program(const Scenario& scenario, double gamma, const OuterState& state,
                                      const PeakPowerShape& shape);
ConicProgram build_peak_power_program(const Scenario& scenario, double gamma, const OuterState& state);

struct PeakPowerResult {
  SolveStatus status = SolveStatus::NumericalLimit;
  double h = std::numeric_limits<double>::infinity();
  std::vector<HermitianMatrixXd> W;  // K blocks of size M L
  std::vector<HermitianMatrixXd> V;  // J blocks of size M L (empty when fixed)
  bool retried = false;
  int ipm_iterations = 0;
};

/// Optimal value of the peak-power program; +inf when it is infeasible. On
/// NumericalLimit the solve is repeated once with relaxed tolerances and the
/// status of the retry is returned.
PeakPowerResult h_of_gamma(const Scenario& scenario, double gamma, const OuterState& state,
                           const SolverOptions& options, const PeakPowerShape& shape);
PeakPowerResult h_of_gamma(const Scenario& scenario, double gamma, const OuterState& state,
                           const SolverOptions& options = {});

/// max_k (sum_l sqrt(E_l) ||h_lk||)^2 / sigma^2
double gamma_upper_bound(const Scenario& scenario);
double gamma_upper_bound(const Scenario& scenario, const PeakPowerShape& shape);

enum class BisectionOutcome {
  PowerLimited,       // h(gamma_max) in [1 - eps, 1]
  ConstraintLimited,  // bracket collapsed against an infeasible or capped gamma
  NumericalLimit,
};

const char* to_string(BisectionOutcome o);

struct BisectionStep {
  double gamma;
  double h;
  SolveStatus status;
};

struct BisectionResult {
  BisectionOutcome outcome = BisectionOutcome::NumericalLimit;
  double gamma_max = 0.0;
  double h = std::numeric_limits<double>::infinity();
  double gamma_lower = 0.0;
  double gamma_upper = 0.0;
  Beams beams;
  std::vector<HermitianMatrixXd> W;
  std::vector<HermitianMatrixXd> V;
  std::vector<BisectionStep> trace;
  std::string message;
};

/// gamma_ceiling, when finite, must be a known upper bound on the achievable
/// gamma (for example the bracket top of a run on a larger feasible set). A
/// solve that ends in NumericalLimit is treated like an infeasible one; the
/// outcome is NumericalLimit only when no achievable gamma was found at all.
BisectionResult bisection_gamma_max(const Scenario& scenario, const OuterState& state, const SolverOptions& options,
                                    const PeakPowerShape& shape,
                                    double gamma_ceiling = std::numeric_limits<double>::infinity());
BisectionResult bisection_gamma_max(const Scenario& scenario, const OuterState& state,
                                    const SolverOptions& options = {});

/// beta_kl = 1 / (tr(W_k A_l) + tau)
Eigen::MatrixXd update_weights(const std::vector<HermitianMatrixXd>& W, int L, int M, double tau);
/// log2(1 + SINR_k) with every term in trace form.
Eigen::VectorXd update_rates(const std::vector<HermitianMatrixXd>& W, const std::vector<HermitianMatrixXd>& V,
                             const Scenario& scenario);

enum class RunStatus { Converged, NotConverged, Infeasible, NumericalLimit };

const char* to_string(RunStatus s);

struct MaxMinResult {
  RunStatus status = RunStatus::NumericalLimit;
  BeamformingSolution solution;
  double gamma = 0.0;
  double q_max_w = 0.0;
  int outer_iterations = 0;
  int bisection_steps = 0;
  std::vector<OuterState> states;
  std::vector<BisectionResult> bisections;
  std::string message;
};

MaxMinResult max_min_beamforming(const Scenario& scenario, const SolverOptions& options = {});

/// Energy beams first (minimum total power meeting every Q_j), then the
/// information beams on the residual budgets with the energy beams fixed.
MaxMinResult separate_beamforming_baseline(const Scenario& scenario, const SolverOptions& options = {});

}  // namespace cran

#endif  // CRAN_OPTIMIZER_HPP
