#include <random>
#include <sstream>

#include "cran/sdp.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cran;

namespace {

/// max tr(A X)  s.t. tr X = 1, X psd  (optimum lambda_max(A)).
ConicProgram lambda_max_program(const HermitianMatrixXd& a) {
  ConicProgram p;
  const int x = p.add_psd_block("X", static_cast<int>(a.dim()));
  p.add_constraint({"trace", {{x, HermitianMatrixXd::Identity(a.dim())}}, {}, Relation::Equal, 1.0});
  p.set_objective(Sense::Maximize, {{x, a}}, {});
  return p;
}

/// min t  with a free scalar t and  t I - A = S  (S the block variable).
/// Encoded as the min-sense program
///   min t  s.t.  tr(E_k S) - t tr(E_k I) = -tr(E_k A)  for a Hermitian basis E_k.
ConicProgram lambda_max_epigraph(const HermitianMatrixXd& a) {
  ConicProgram p;
  const int n = static_cast<int>(a.dim());
  const int s = p.add_psd_block("S", n);
  const int t = p.add_scalar("t", ScalarSign::Free);
  auto add = [&](const CMatrixXd& e) {
    HermitianMatrixXd eh(e);
    p.add_constraint({"coord", {{s, eh}}, {{t, -trace_inner(eh, HermitianMatrixXd::Identity(n))}}, Relation::Equal,
                      -trace_inner(eh, a)});
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      CMatrixXd e = CMatrixXd::Zero(n, n);
      e(i, j) = e(j, i) = 1.0;
      add(e);
      if (i != j) {
        CMatrixXd f = CMatrixXd::Zero(n, n);
        f(i, j) = {0.0, 1.0};
        f(j, i) = {0.0, -1.0};
        add(f);
      }
    }
  }
  p.set_objective(Sense::Minimize, {}, {{t, 1.0}});
  return p;
}

}  // namespace

TEST_CASE("lambda_max of a diagonal matrix") {
  Eigen::VectorXd d(2);
  d << 1, 2;
  const auto sol = solve(lambda_max_epigraph(HermitianMatrixXd::Diagonal(d)));
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective_value == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("LP embedded as a 1x1 block: min x, x >= 3") {
  ConicProgram p;
  const int x = p.add_psd_block("x", 1);
  p.add_constraint({"lb", {{x, HermitianMatrixXd::Identity(1)}}, {}, Relation::GreaterEqual, 3.0});
  p.set_objective(Sense::Minimize, {{x, HermitianMatrixXd::Identity(1)}}, {});
  const auto sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective_value == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(sol.duals[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("random lambda_max programs match the eigenvalue oracle") {
  std::mt19937_64 rng(101);
  for (int t = 0; t < 20; ++t) {
    const auto a = cran::test::random_hermitian(rng, 4);
    const double oracle = hermitian_eig(a).eigenvalues(0);
    const auto s1 = solve(lambda_max_epigraph(a));
    REQUIRE(s1.status == SolveStatus::Optimal);
    CHECK(std::abs(s1.objective_value - oracle) < 1e-6);
    const auto s2 = solve(lambda_max_program(a));
    REQUIRE(s2.status == SolveStatus::Optimal);
    CHECK(std::abs(s2.objective_value - oracle) < 1e-6);
  }
}

TEST_CASE("dual slacks and complementarity on the lambda_max program") {
  std::mt19937_64 rng(5);
  const auto a = cran::test::random_hermitian(rng, 4);
  const auto p = lambda_max_program(a);
  const auto sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  const auto slacks = assemble_dual_slacks(p, sol.duals);
  // Maximization, so sigma = -1 and S = -A - y I; at the optimum y = -lambda_max.
  const double lmax = hermitian_eig(a).eigenvalues(0);
  CHECK(sol.duals[0] == doctest::Approx(-lmax).epsilon(1e-6));
  const HermitianMatrixXd oracle = lmax * HermitianMatrixXd::Identity(4) - a;
  CHECK((slacks[0].matrix() - oracle.matrix()).norm() < 1e-6);
  CHECK(is_psd(slacks[0], 1e-6));
  CHECK(hermitian_eig(slacks[0]).eigenvalues(3) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(std::abs(trace_inner(sol.blocks[0], slacks[0])) <= 1e-6 * (1 + std::abs(sol.objective_value)));
}

TEST_CASE("assemble_dual_slacks edge cases") {
  ConicProgram p;
  const int x = p.add_psd_block("X", 2);
  p.add_constraint({"c", {{x, HermitianMatrixXd::Identity(2)}}, {}, Relation::Equal, 1.0});
  const auto s = assemble_dual_slacks(p, {0.0});
  CHECK(s[0].matrix().norm() == 0.0);
  CHECK_THROWS_AS(assemble_dual_slacks(p, {}), std::invalid_argument);
}

TEST_CASE("infeasible and unbounded programs are detected") {
  ConicProgram p;
  const int x = p.add_psd_block("X", 2);
  // tr X <= -1 with X psd is infeasible.
  p.add_constraint({"neg", {{x, HermitianMatrixXd::Identity(2)}}, {}, Relation::LessEqual, -1.0});
  p.set_objective(Sense::Minimize, {{x, HermitianMatrixXd::Identity(2)}}, {});
  const auto s = solve(p);
  CHECK(s.status == SolveStatus::Infeasible);
  CHECK_FALSE(s.certificate.empty());

  ConicProgram q;
  const int y = q.add_psd_block("Y", 2);
  const int t = q.add_scalar("t", ScalarSign::Nonnegative);
  q.add_constraint({"c", {{y, HermitianMatrixXd::Identity(2)}}, {{t, -1.0}}, Relation::Equal, 1.0});
  q.set_objective(Sense::Maximize, {}, {{t, 1.0}});
  CHECK(solve(q).status == SolveStatus::Unbounded);
}

TEST_CASE("malformed programs are rejected before iterating") {
  ConicProgram p;
  const int x = p.add_psd_block("X", 2);
  p.add_constraint({"bad", {{x, HermitianMatrixXd::Identity(3)}}, {}, Relation::Equal, 1.0});
  CHECK_THROWS_AS(solve(p), std::invalid_argument);

  ConicProgram q;
  const int y = q.add_psd_block("Y", 2);
  q.add_constraint({"zero", {{y, HermitianMatrixXd::Zero(2)}}, {}, Relation::Equal, 1.0});
  CHECK_THROWS_AS(solve(q), std::invalid_argument);
}

TEST_CASE("solves are deterministic") {
  std::mt19937_64 rng(9);
  const auto a = cran::test::random_hermitian(rng, 5);
  const auto p = lambda_max_epigraph(a);
  CHECK(solve(p).objective_value == solve(p).objective_value);
}

TEST_CASE("returned blocks are PSD and the dump is readable") {
  std::mt19937_64 rng(13);
  const auto p = lambda_max_program(cran::test::random_hermitian(rng, 3));
  const auto sol = solve(p);
  CHECK(is_psd(sol.blocks[0], 1e-7));
  std::ostringstream os;
  p.dump(os);
  CHECK(os.str().find("conic-program v1") == 0);
  CHECK(os.str().find("constraint trace =") != std::string::npos);
}
