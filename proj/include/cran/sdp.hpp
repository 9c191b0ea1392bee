// Small dense interior-point solver for conic programs over complex
// Hermitian PSD blocks, nonnegative scalars and free scalars.
#ifndef CRAN_SDP_HPP
#define CRAN_SDP_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "cran/linalg.hpp"

namespace cran {

enum class Sense { Minimize, Maximize };
enum class Relation { LessEqual, GreaterEqual, Equal };
enum class ScalarSign { Nonnegative, Free };
enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalLimit };

const char* to_string(SolveStatus s);

struct BlockTerm {
  int block;
  HermitianMatrixXd coeff;
};

struct ScalarTerm {
  int var;
  double coeff;
};

/// One linear relation  sum_b tr(F_b X_b) + sum_s a_s x_s  (<=, >=, =)  rhs.
struct LinearConstraint {
  std::string name;
  std::vector<BlockTerm> blocks;
  std::vector<ScalarTerm> scalars;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
};

class ConicProgram {
 public:
  struct Block {
    std::string name;
    int dim;
  };
  struct Scalar {
    std::string name;
    ScalarSign sign;
  };

  int add_psd_block(std::string name, int dim);
  int add_scalar(std::string name, ScalarSign sign);
  int add_constraint(LinearConstraint c);
  void set_objective(Sense sense, std::vector<BlockTerm> blocks, std::vector<ScalarTerm> scalars);

  const std::vector<Block>& blocks() const { return blocks_; }
  const std::vector<Scalar>& scalars() const { return scalars_; }
  const std::vector<LinearConstraint>& constraints() const { return constraints_; }
  Sense sense() const { return sense_; }
  const std::vector<BlockTerm>& objective_blocks() const { return obj_blocks_; }
  const std::vector<ScalarTerm>& objective_scalars() const { return obj_scalars_; }

  /// Throws std::invalid_argument describing the first malformed item.
  void validate() const;

  /// Objective value of a candidate point, in the program's own sense.
  double objective(const std::vector<HermitianMatrixXd>& x_blocks, const std::vector<double>& x_scalars) const;
  /// Left-hand side of constraint c at a candidate point.
  double lhs(std::size_t c, const std::vector<HermitianMatrixXd>& x_blocks,
             const std::vector<double>& x_scalars) const;

  /// Human-readable dump for bug reports (format described in README).
  void dump(std::ostream& os) const;

 private:
  std::vector<Block> blocks_;
  std::vector<Scalar> scalars_;
  std::vector<LinearConstraint> constraints_;
  Sense sense_ = Sense::Minimize;
  std::vector<BlockTerm> obj_blocks_;
  std::vector<ScalarTerm> obj_scalars_;
};

struct IpmOptions {
  int max_iterations = 100;
  double gap_tol = 1e-7;   // relative: gap <= gap_tol * (1 + |objective|)
  double feas_tol = 1e-7;  // relative primal/dual residuals
  double step_fraction = 0.99;
  bool verbose = false;
};

/// Dual multipliers follow the minimization form of the program: with
/// sigma = +1 (minimize) or -1 (maximize), the dual slack of block b is
///     S_b = sigma * C_b - sum_c duals[c] * F_{c,b},
/// and duals[c] is >= 0 for '>=' rows, <= 0 for '<=' rows, free for '='.
struct ConicSolution {
  SolveStatus status = SolveStatus::NumericalLimit;
  double objective_value = 0.0;
  std::vector<HermitianMatrixXd> blocks;
  std::vector<double> scalars;
  std::vector<double> duals;
  double gap = 0.0;                 // relative duality gap
  double primal_residual = 0.0;     // relative
  double dual_residual = 0.0;       // relative
  int iterations = 0;
  std::string certificate;          // Farkas summary when Infeasible/Unbounded
};

ConicSolution solve(const ConicProgram& program, const IpmOptions& options = {});

/// S_b = sigma * C_b - sum_c duals[c] * F_{c,b} for every block.
std::vector<HermitianMatrixXd> assemble_dual_slacks(const ConicProgram& program, const std::vector<double>& duals);

}  // namespace cran

#endif  // CRAN_SDP_HPP
