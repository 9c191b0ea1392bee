// Independent audits of beamforming solutions. Everything here recomputes
// from the beam vectors or the raw program data; nothing reads optimizer state.
#ifndef CRAN_VERIFY_HPP
#define CRAN_VERIFY_HPP

#include <vector>

#include "cran/model.hpp"
#include "cran/sdp.hpp"
#include "json.hpp"

namespace cran {

struct ConstraintReport {
  std::vector<double> energy_slack_w;   // Q_j - Q_min
  std::vector<double> fronthaul_slack;  // C_l - usage; +inf for unlimited links
  std::vector<double> power_slack_w;    // E_l - power
  double min_rate = 0.0;
  /// max over constraints of max(0, -slack) / scale, where scale is the
  /// right-hand side of the constraint (or 1 when it is zero)
  double worst_violation = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  nlohmann::json to_json() const;
};

ConstraintReport check_solution(const Scenario& scenario, const Beams& beams, double tol,
                                double assoc_threshold = 1e-6);
/// Uses the solution's beams and association threshold; its cached metrics are ignored.
ConstraintReport check_solution(const Scenario& scenario, const BeamformingSolution& solution, double tol);

struct BlockRank {
  int rank = 0;
  double ratio = 0.0;       // lambda_2 / lambda_1
  bool negligible = false;  // lambda_1 below negligible_rel of the largest block
};

struct RankReport {
  std::vector<BlockRank> w;
  std::vector<BlockRank> v;
  double rank_one_fraction = 1.0;  // blocks with rank <= 1 over all blocks

  nlohmann::json to_json() const;
};

/// Numerical rank and eigenvalue ratio of every block. A block whose largest
/// eigenvalue is below negligible_rel times the largest eigenvalue over all
/// blocks is numerically zero: it is reported with rank 0 and ratio 0.
RankReport rank_one_report(const std::vector<HermitianMatrixXd>& W, const std::vector<HermitianMatrixXd>& V,
                           double rel_tol, double negligible_rel = 1e-6);

struct ComplementarityReport {
  std::vector<double> traces;  // tr(X_b S_b) per block
  double bound = 0.0;          // 1e-6 * (1 + |objective|)
  bool pass = false;

  nlohmann::json to_json() const;
};

/// Rebuilds the dual slacks from the multipliers and checks tr(X_b S_b) per block.
ComplementarityReport complementarity_report(const ConicProgram& program, const ConicSolution& solution,
                                             double rel_tol = 1e-6);

}  // namespace cran

#endif  // CRAN_VERIFY_HPP
