#include <random>

#include "cran/optimizer.hpp"
#include "cran/verify.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cran;
using cran::test::random_cvector;

namespace {

Scenario small(std::mt19937_64& rng, int L, int M, int K, int J) {
  Scenario sc;
  sc.L = L;
  sc.M = M;
  sc.K = K;
  sc.J = J;
  for (int k = 0; k < K; ++k) sc.h.push_back(random_cvector(rng, L * M, 1e-3));
  for (int j = 0; j < J; ++j) sc.g.push_back(random_cvector(rng, L * M, 1e-3));
  sc.energy_w.assign(L, 1.0);
  sc.capacity.assign(L, kInfiniteCapacity);
  sc.validate();
  return sc;
}

}  // namespace

TEST_CASE("zero beams with no energy target pass with zero rate") {
  std::mt19937_64 rng(1);
  const Scenario sc = small(rng, 2, 2, 2, 1);
  Beams b;
  b.w.assign(2, CVectorXd::Zero(4));
  b.v.assign(1, CVectorXd::Zero(4));
  const ConstraintReport r = check_solution(sc, b, 1e-6);
  CHECK(r.pass);
  CHECK(r.min_rate == 0.0);
  CHECK(r.worst_violation == 0.0);
  CHECK(r.fronthaul_slack[0] == std::numeric_limits<double>::infinity());
}

TEST_CASE("doubling the amplitude of a full-power solution breaks the power budget") {
  std::mt19937_64 rng(2);
  Scenario sc = small(rng, 2, 2, 2, 1);
  sc.q_min_w = 1e-8;
  const MaxMinResult res = max_min_beamforming(sc);
  REQUIRE(res.status == RunStatus::Converged);
  const ConstraintReport ok = check_solution(sc, res.solution, 1e-6);
  CHECK(ok.pass);

  Beams doubled = res.solution.beams;
  for (auto& w : doubled.w) w *= 2.0;
  for (auto& v : doubled.v) v *= 2.0;
  const ConstraintReport bad = check_solution(sc, doubled, 1e-6);
  CHECK_FALSE(bad.pass);
  CHECK(*std::min_element(bad.power_slack_w.begin(), bad.power_slack_w.end()) < 0.0);
  CHECK(bad.worst_violation > 1.0);
}

TEST_CASE("energy and fronthaul violations are measured relative to their targets") {
  std::mt19937_64 rng(3);
  Scenario sc = small(rng, 2, 1, 1, 1);
  sc.capacity = {1.0, kInfiniteCapacity};
  sc.q_min_w = 1.0;  // unreachable with these channels
  Beams b;
  b.w = {CVectorXd::Constant(2, std::complex<double>(0.5, 0.0))};
  b.v = {CVectorXd::Zero(2)};
  const ConstraintReport r = check_solution(sc, b, 1e-6);
  CHECK_FALSE(r.pass);
  CHECK(r.energy_slack_w[0] < 0.0);
  CHECK(r.worst_violation >= 0.99);
  const double usage = rate(0, b, sc);
  CHECK(r.fronthaul_slack[0] == doctest::Approx(1.0 - usage));
}

TEST_CASE("audits are pure and monotone in the tolerance") {
  std::mt19937_64 rng(4);
  Scenario sc = small(rng, 2, 2, 2, 1);
  Beams b;
  for (int k = 0; k < 2; ++k) b.w.push_back(random_cvector(rng, 4, 0.6));
  b.v.push_back(random_cvector(rng, 4, 0.6));
  const ConstraintReport a = check_solution(sc, b, 1e-3);
  const ConstraintReport c = check_solution(sc, b, 1e-3);
  CHECK(a.to_json() == c.to_json());
  for (double tol : {1e-9, 1e-6, 1e-3, 1.0, 10.0}) {
    const ConstraintReport tight = check_solution(sc, b, tol);
    const ConstraintReport loose = check_solution(sc, b, tol * 10.0);
    if (tight.pass) CHECK(loose.pass);
  }
}

TEST_CASE("report serializes with unit-suffixed fields") {
  std::mt19937_64 rng(5);
  const Scenario sc = small(rng, 1, 2, 1, 1);
  Beams b;
  b.w = {CVectorXd::Zero(2)};
  b.v = {CVectorXd::Zero(2)};
  const nlohmann::json j = check_solution(sc, b, 1e-6).to_json();
  CHECK(j.contains("energy_slack_w"));
  CHECK(j.contains("power_slack_w"));
  CHECK(j["fronthaul_slack_bps_hz"][0].is_null());
  CHECK(j["pass"].get<bool>());
}

TEST_CASE("rank report: outer products, identity and negligible blocks") {
  std::mt19937_64 rng(6);
  std::vector<HermitianMatrixXd> W{HermitianMatrixXd::Outer(random_cvector(rng, 3)),
                                   HermitianMatrixXd::Outer(random_cvector(rng, 3))};
  const RankReport outer = rank_one_report(W, {}, 1e-4);
  for (const auto& b : outer.w) {
    CHECK(b.rank == 1);
    CHECK(b.ratio <= 1e-12);
  }
  CHECK(outer.rank_one_fraction == 1.0);

  const RankReport eye = rank_one_report({HermitianMatrixXd::Identity(2)}, {}, 1e-4);
  CHECK(eye.w[0].rank == 2);
  CHECK(eye.w[0].ratio == doctest::Approx(1.0));
  CHECK(eye.rank_one_fraction == 0.0);

  const RankReport tiny = rank_one_report(W, {1e-12 * HermitianMatrixXd::Identity(3)}, 1e-4);
  CHECK(tiny.v[0].negligible);
  CHECK(tiny.v[0].rank == 0);
  CHECK(tiny.rank_one_fraction == 1.0);
}

TEST_CASE("complementarity of the lambda_max program") {
  std::mt19937_64 rng(7);
  const HermitianMatrixXd a = cran::test::random_hermitian(rng, 4);
  ConicProgram p;
  const int x = p.add_psd_block("X", 4);
  p.add_constraint({"trace", {{x, HermitianMatrixXd::Identity(4)}}, {}, Relation::Equal, 1.0});
  p.set_objective(Sense::Maximize, {{x, a}}, {});
  const ConicSolution s = solve(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  const ComplementarityReport r = complementarity_report(p, s);
  CHECK(r.pass);
  REQUIRE(r.traces.size() == 1);
  CHECK(std::abs(r.traces[0]) <= 1e-8 * (1.0 + std::abs(s.objective_value)));
}

TEST_CASE("complementarity: trivial zero optimum and a default-scale peak-power program") {
  std::mt19937_64 rng(8);
  Scenario sc = small(rng, 1, 2, 1, 0);
  const ConicProgram tiny = build_peak_power_program(sc, 1e-12, OuterState::initial(sc));
  const ConicSolution ts = solve(tiny);
  REQUIRE(ts.status == SolveStatus::Optimal);
  const ComplementarityReport tr = complementarity_report(tiny, ts);
  CHECK(tr.pass);
  for (double t : tr.traces) CHECK(std::abs(t) <= IpmOptions{}.gap_tol);

  const Scenario base = build_scenario(ScenarioConfig{}, 11);
  const BisectionResult b = bisection_gamma_max(base, OuterState::initial(base));
  REQUIRE(b.outcome == BisectionOutcome::PowerLimited);
  const ConicProgram program = build_peak_power_program(base, 0.9 * b.gamma_max, OuterState::initial(base));
  const ConicSolution s = solve(program);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(complementarity_report(program, s).pass);
}
