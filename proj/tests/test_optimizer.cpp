#include <algorithm>
#include <cmath>
#include <random>

#include "cran/optimizer.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cran;
using cran::test::random_cvector;

namespace {

Scenario make_scenario(std::mt19937_64& rng, int L, int M, int K, int J, double energy = 1.0) {
  Scenario sc;
  sc.L = L;
  sc.M = M;
  sc.K = K;
  sc.J = J;
  for (int k = 0; k < K; ++k) sc.h.push_back(random_cvector(rng, L * M, 1e-3));
  for (int j = 0; j < J; ++j) sc.g.push_back(random_cvector(rng, L * M, 1e-3));
  sc.energy_w.assign(L, energy);
  sc.capacity.assign(L, kInfiniteCapacity);
  sc.q_min_w = 0.0;
  sc.validate();
  return sc;
}

}  // namespace

TEST_CASE("max energy: single RRH and ER reaches the matched-beam optimum") {
  std::mt19937_64 rng(101);
  Scenario sc = make_scenario(rng, 1, 3, 0, 1, 2.0);
  const MaxEnergyResult r = solve_max_energy(sc);
  REQUIRE(r.status == SolveStatus::Optimal);
  const double expect = sc.eta * 2.0 * sc.g[0].squaredNorm();
  CHECK(r.q_max_w == doctest::Approx(expect).epsilon(1e-6));

  // No full-power direction beats the optimum.
  for (int t = 0; t < 10000; ++t) {
    CVectorXd u = random_cvector(rng, 3);
    u.normalize();
    CHECK_LE(sc.eta * 2.0 * std::norm(sc.g[0].dot(u)), r.q_max_w * (1.0 + 1e-6));
  }

  // The extracted beams deliver the optimum.
  REQUIRE(r.v.size() == 1);
  Beams b;
  b.v = r.v;
  CHECK(harvested_energy(0, b, sc) >= (1.0 - 1e-3) * r.q_max_w);
  CHECK(rrh_power(0, b, sc.M) <= 2.0 * (1.0 + 1e-6));
}

TEST_CASE("max energy: no power or no ER gives zero") {
  std::mt19937_64 rng(103);
  Scenario sc = make_scenario(rng, 2, 2, 1, 2, 0.0);
  const MaxEnergyResult r = solve_max_energy(sc);
  CHECK(r.status == SolveStatus::Optimal);
  CHECK(std::abs(r.q_max_w) <= 1e-12);

  Scenario none = make_scenario(rng, 2, 2, 1, 0);
  const MaxEnergyResult z = solve_max_energy(none);
  CHECK(z.q_max_w == 0.0);
  CHECK(z.v.empty());
}

TEST_CASE("peak-power program has one row per energy, finite fronthaul, SINR and power constraint") {
  std::mt19937_64 rng(107);
  Scenario sc = make_scenario(rng, 3, 2, 4, 2);
  sc.q_min_w = 1e-7;
  sc.capacity = {10.0, kInfiniteCapacity, 20.0};
  OuterState st = OuterState::initial(sc);
  st.beta = Eigen::MatrixXd::Constant(sc.K, sc.L, 2.0);
  st.rhat = Eigen::VectorXd::Constant(sc.K, 1.5);
  const ConicProgram p = build_peak_power_program(sc, 3.0, st);
  CHECK(p.constraints().size() == static_cast<std::size_t>(sc.J + 2 + sc.K + sc.L));
  CHECK(p.blocks().size() == static_cast<std::size_t>(sc.K + sc.J));
  CHECK(p.scalars().size() == 1);
  CHECK(p.sense() == Sense::Minimize);

  // The initial state carries no fronthaul weights, so no fronthaul rows.
  const ConicProgram q = build_peak_power_program(sc, 3.0, OuterState::initial(sc));
  CHECK(q.constraints().size() == static_cast<std::size_t>(sc.J + sc.K + sc.L));
}

TEST_CASE("single user: h(gamma) and gamma_max match the matched-filter closed form") {
  std::mt19937_64 rng(109);
  Scenario sc = make_scenario(rng, 1, 3, 1, 0, 2.0);
  const double snr = 2.0 * sc.h[0].squaredNorm() / sc.sigma2_w;
  CHECK(gamma_upper_bound(sc) == doctest::Approx(snr).epsilon(1e-12));

  for (double frac : {0.1, 0.5, 0.9}) {
    const double gamma = frac * snr;
    const PeakPowerResult r = h_of_gamma(sc, gamma, OuterState::initial(sc));
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.h == doctest::Approx(gamma * sc.sigma2_w / (2.0 * sc.h[0].squaredNorm())).epsilon(1e-6));
  }
  const PeakPowerResult tiny = h_of_gamma(sc, 1e-9 * snr, OuterState::initial(sc));
  CHECK(tiny.h <= 1e-6);

  const SolverOptions opts;
  const BisectionResult b = bisection_gamma_max(sc, OuterState::initial(sc), opts);
  CHECK(b.outcome == BisectionOutcome::PowerLimited);
  CHECK(std::abs(b.h - 1.0) <= opts.eps_bisect);
  CHECK(b.gamma_max == doctest::Approx(snr).epsilon(2.0 * opts.eps_bisect));
  CHECK(b.gamma_max <= snr * (1.0 + 1e-9));
}

TEST_CASE("single user with a finite fronthaul keeps the rate within the capacity") {
  std::mt19937_64 rng(113);
  Scenario sc = make_scenario(rng, 1, 2, 1, 0, 2.0);
  sc.capacity = {3.0};
  const MaxMinResult r = max_min_beamforming(sc);
  REQUIRE((r.status == RunStatus::Converged || r.status == RunStatus::NotConverged));
  CHECK(r.solution.rate[0] <= 3.0 + SolverOptions{}.eps_rate);
  CHECK(r.solution.rate[0] >= 3.0 - 1e-2);
}

TEST_CASE("gamma upper bound: zero channels and validity on random scenarios") {
  std::mt19937_64 rng(127);
  Scenario zero = make_scenario(rng, 2, 2, 2, 0);
  for (auto& h : zero.h) h.setZero();
  CHECK(gamma_upper_bound(zero) == 0.0);

  for (int t = 0; t < 3; ++t) {
    Scenario sc = make_scenario(rng, 2, 2, 3, 1);
    const BisectionResult b = bisection_gamma_max(sc, OuterState::initial(sc));
    REQUIRE(b.outcome == BisectionOutcome::PowerLimited);
    CHECK(b.gamma_max <= gamma_upper_bound(sc));
  }
}

TEST_CASE("h(gamma) is non-decreasing in gamma") {
  std::mt19937_64 rng(131);
  for (int t = 0; t < 4; ++t) {
    Scenario sc = make_scenario(rng, 2, 2, 2, 1);
    sc.q_min_w = 1e-9;
    const double top = gamma_upper_bound(sc);
    double prev = -1.0;
    for (double frac : {1e-3, 1e-2, 0.05, 0.1, 0.2, 0.4}) {
      const PeakPowerResult r = h_of_gamma(sc, frac * top, OuterState::initial(sc));
      const double h = r.status == SolveStatus::Optimal ? r.h : std::numeric_limits<double>::infinity();
      CHECK(h >= prev - 1e-8);
      prev = h;
    }
  }
}

TEST_CASE("bisection: h within tolerance, monotone trace and consistent bracket") {
  std::mt19937_64 rng(137);
  const SolverOptions opts;
  for (int t = 0; t < 3; ++t) {
    Scenario sc = make_scenario(rng, 2, 2, 3, 1);
    sc.q_min_w = 1e-8;
    const BisectionResult b = bisection_gamma_max(sc, OuterState::initial(sc), opts);
    REQUIRE(b.outcome == BisectionOutcome::PowerLimited);
    CHECK(std::abs(b.h - 1.0) <= opts.eps_bisect);

    std::vector<BisectionStep> steps = b.trace;
    std::sort(steps.begin(), steps.end(), [](const auto& a, const auto& c) { return a.gamma < c.gamma; });
    for (std::size_t i = 1; i < steps.size(); ++i) {
      const double lo = steps[i - 1].status == SolveStatus::Optimal ? steps[i - 1].h : 1e300;
      const double hi = steps[i].status == SolveStatus::Optimal ? steps[i].h : 1e300;
      CHECK(hi >= lo - 1e-8);
    }

    const double below = h_of_gamma(sc, b.gamma_max * (1.0 - 3.0 * opts.eps_bisect), OuterState::initial(sc)).h;
    const double above = h_of_gamma(sc, b.gamma_max * (1.0 + 3.0 * opts.eps_bisect), OuterState::initial(sc)).h;
    CHECK(below <= 1.0);
    CHECK(above >= 1.0);

    // Extracted beams keep the SINR target.
    const BeamformingSolution s = evaluate(b.beams, sc);
    for (double v : s.sinr) CHECK(v >= (1.0 - 1e-3) * b.gamma_max);
  }
}

TEST_CASE("update_weights: zero blocks give 1/tau and larger power gives smaller weight") {
  const double tau = 1e-5;
  std::vector<HermitianMatrixXd> W(2, HermitianMatrixXd::Zero(4));
  const Eigen::MatrixXd b0 = update_weights(W, 2, 2, tau);
  CHECK((b0.array() == 1.0 / tau).all());

  Eigen::VectorXd d(4);
  d << 0.1, 0.2, 1.0, 3.0;
  W[0] = HermitianMatrixXd::Diagonal(d);
  const Eigen::MatrixXd b1 = update_weights(W, 2, 2, tau);
  CHECK(b1(0, 0) == doctest::Approx(1.0 / (0.3 + tau)));
  CHECK(b1(0, 1) < b1(0, 0));
  CHECK_THROWS_AS(update_weights(W, 2, 2, 0.0), std::invalid_argument);
}

TEST_CASE("update_rates matches the vector rate for rank-one blocks") {
  std::mt19937_64 rng(139);
  Scenario sc = make_scenario(rng, 2, 2, 3, 2);
  Beams b;
  for (int k = 0; k < 3; ++k) b.w.push_back(random_cvector(rng, 4, 0.5));
  for (int j = 0; j < 2; ++j) b.v.push_back(random_cvector(rng, 4, 0.5));
  std::vector<HermitianMatrixXd> W, V;
  for (const auto& w : b.w) W.push_back(HermitianMatrixXd::Outer(w));
  for (const auto& v : b.v) V.push_back(HermitianMatrixXd::Outer(v));
  const Eigen::VectorXd r = update_rates(W, V, sc);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(r(k) - rate(k, b, sc)) <= 1e-9 * std::max(1.0, r(k)));
}

TEST_CASE("energy target above q_max is reported infeasible") {
  std::mt19937_64 rng(149);
  Scenario sc = make_scenario(rng, 2, 2, 2, 2);
  const MaxEnergyResult e = solve_max_energy(sc);
  sc.q_min_w = 1.5 * e.q_max_w;
  const MaxMinResult r = max_min_beamforming(sc);
  CHECK(r.status == RunStatus::Infeasible);
  CHECK(r.q_max_w == doctest::Approx(e.q_max_w).epsilon(1e-6));
  CHECK(separate_beamforming_baseline(sc).status == RunStatus::Infeasible);
}

TEST_CASE("unlimited fronthaul reduces the outer loop to one bisection") {
  std::mt19937_64 rng(151);
  Scenario sc = make_scenario(rng, 2, 2, 3, 1);
  sc.q_min_w = 1e-8;
  const MaxMinResult r = max_min_beamforming(sc);
  REQUIRE(r.status == RunStatus::Converged);
  const BisectionResult b = bisection_gamma_max(sc, OuterState::initial(sc));
  CHECK(r.gamma == doctest::Approx(b.gamma_max).epsilon(1e-4));
  CHECK(r.outer_iterations == 1);
}

TEST_CASE("separate baseline equals the joint design without energy receivers") {
  std::mt19937_64 rng(157);
  Scenario sc = make_scenario(rng, 2, 2, 2, 0);
  const MaxMinResult joint = max_min_beamforming(sc);
  const MaxMinResult sep = separate_beamforming_baseline(sc);
  REQUIRE(joint.status == RunStatus::Converged);
  REQUIRE(sep.status == RunStatus::Converged);
  CHECK(sep.gamma == doctest::Approx(joint.gamma).epsilon(1e-4));
}

TEST_CASE("default-scale run meets every energy target") {
  ScenarioConfig cfg;
  const Scenario sc = build_scenario(cfg, 7);
  const MaxMinResult r = max_min_beamforming(sc);
  REQUIRE(r.status == RunStatus::Converged);
  for (double q : r.solution.energy_w) CHECK(q >= sc.q_min_w - 1e-9);
  for (double p : r.solution.power_w) CHECK(p <= 5.0 * (1.0 + 1e-6));

  const MaxMinResult s = separate_beamforming_baseline(sc);
  REQUIRE(s.status == RunStatus::Converged);
  for (double q : s.solution.energy_w) CHECK(q >= sc.q_min_w - 1e-9);
  CHECK(r.solution.min_rate() >= s.solution.min_rate() - 1e-3);
}

TEST_CASE("solver options are validated") {
  SolverOptions o;
  o.tau = 0.0;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  o = SolverOptions{};
  o.eps_bisect = 1.0;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
}
