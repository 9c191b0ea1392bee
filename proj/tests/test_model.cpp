#include <cmath>
#include <random>

#include "cran/model.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cran;
using cran::test::random_cvector;

namespace {

Scenario small_scenario(std::mt19937_64& rng, int L, int M, int K, int J) {
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

Beams random_beams(std::mt19937_64& rng, const Scenario& sc) {
  Beams b;
  for (int k = 0; k < sc.K; ++k) b.w.push_back(random_cvector(rng, sc.antennas_total(), 0.3));
  for (int j = 0; j < sc.J; ++j) b.v.push_back(random_cvector(rng, sc.antennas_total(), 0.3));
  return b;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::max(std::abs(a), std::abs(b))); }

}  // namespace

TEST_CASE("channel power gain at 10 m with unit fading") {
  CHECK(channel_power_gain(10.0, 3.0, 1.0) == doctest::Approx(1e-6).epsilon(1e-14));
  CHECK_THROWS_AS(channel_power_gain(0.0, 3.0, 1.0), std::invalid_argument);
}

TEST_CASE("generate_channels is deterministic and rejects bad input") {
  const Topology topo = generate_topology(3, 6, 3, {}, 42);
  const Channels a = generate_channels(topo, 2, 3.0, 9);
  const Channels b = generate_channels(topo, 2, 3.0, 9);
  REQUIRE(a.h.size() == 6);
  REQUIRE(a.g.size() == 3);
  for (std::size_t k = 0; k < a.h.size(); ++k) CHECK(a.h[k] == b.h[k]);
  for (std::size_t j = 0; j < a.g.size(); ++j) CHECK(a.g[j] == b.g[j]);
  const Channels c = generate_channels(topo, 2, 3.0, 10);
  CHECK(a.h[0] != c.h[0]);

  CHECK_THROWS_AS(generate_channels(topo, 2, 0.0, 1), std::invalid_argument);
  Topology clash = topo;
  clash.dr[0] = clash.rrh[1];
  CHECK_THROWS_AS(generate_channels(clash, 2, 3.0, 1), std::invalid_argument);
}

TEST_CASE("fading power has unit mean over many draws") {
  Topology topo;
  topo.rrh = {{0.0, 0.0}};
  topo.dr.assign(1000, Point{10.0, 0.0});
  const Channels ch = generate_channels(topo, 100, 3.0, 2024);
  double sum = 0.0;
  int n = 0;
  for (const auto& h : ch.h) {
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      sum += std::norm(h(i)) / 1e-6;
      ++n;
    }
  }
  REQUIRE(n == 100000);
  CHECK(std::abs(sum / n - 1.0) < 0.02);
}

TEST_CASE("topology respects the disc and the exclusion zone") {
  TopologyLayout layout;
  const Topology t = generate_topology(3, 50, 20, layout, 5);
  CHECK(t.rrh.size() == 3);
  for (const auto& p : t.rrh) CHECK(std::hypot(p.x, p.y) == doctest::Approx(layout.rrh_radius_m));
  auto check_rx = [&](const Point& p) {
    CHECK(std::hypot(p.x, p.y) <= layout.user_radius_m);
    for (const auto& r : t.rrh) CHECK(distance(p, r) >= layout.exclusion_m);
  };
  for (const auto& p : t.dr) check_rx(p);
  for (const auto& p : t.er) check_rx(p);
  CHECK(generate_topology(1, 1, 0, layout, 1).rrh[0].x == 0.0);
}

TEST_CASE("derive_seed separates trials and is stable") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(123, 7) == derive_seed(123, 7));
}

TEST_CASE("selection_matrix pattern, partition of unity and block norms") {
  const auto a1 = selection_matrix(0, 2, 2);
  Eigen::VectorXd expect(4);
  expect << 1, 1, 0, 0;
  CHECK(a1 == HermitianMatrixXd::Diagonal(expect));

  HermitianMatrixXd sum = HermitianMatrixXd::Zero(6);
  for (int l = 0; l < 3; ++l) sum += selection_matrix(l, 3, 2);
  CHECK(sum == HermitianMatrixXd::Identity(6));

  std::mt19937_64 rng(3);
  const CVectorXd w = random_cvector(rng, 6);
  for (int l = 0; l < 3; ++l) {
    CHECK(trace_inner(selection_matrix(l, 3, 2), HermitianMatrixXd::Outer(w)) ==
          doctest::Approx(w.segment(2 * l, 2).squaredNorm()).epsilon(1e-13));
  }
  CHECK_THROWS_AS(selection_matrix(3, 3, 2), std::out_of_range);
  CHECK_THROWS_AS(selection_matrix(-1, 3, 2), std::out_of_range);
}

TEST_CASE("sinr: matched filter, orthogonal beam and term-by-term evaluation") {
  std::mt19937_64 rng(11);
  Scenario sc = small_scenario(rng, 1, 3, 1, 0);
  const double p = 0.7;
  Beams b;
  b.w = {std::sqrt(p) * sc.h[0] / sc.h[0].norm()};
  CHECK(sinr(0, b, sc) == doctest::Approx(p * sc.h[0].squaredNorm() / sc.sigma2_w).epsilon(1e-12));

  CVectorXd orth = random_cvector(rng, 3);
  orth -= sc.h[0] * (sc.h[0].dot(orth) / sc.h[0].squaredNorm());
  b.w = {orth};
  CHECK(sinr(0, b, sc) == doctest::Approx(0.0));

  Scenario two = small_scenario(rng, 2, 2, 2, 1);
  const Beams r = random_beams(rng, two);
  for (int k = 0; k < 2; ++k) {
    const int i = 1 - k;
    auto mag2 = [](std::complex<double> z) { return z.real() * z.real() + z.imag() * z.imag(); };
    const double num = mag2((two.h[k].adjoint() * r.w[k])(0));
    const double den = mag2((two.h[k].adjoint() * r.w[i])(0)) + mag2((two.h[k].adjoint() * r.v[0])(0)) + two.sigma2_w;
    CHECK(rel_err(sinr(k, r, two), num / den) < 1e-12);
  }
}

TEST_CASE("rate is log2(1 + sinr)") {
  CHECK(rate_from_sinr(0.0) == 0.0);
  CHECK(rate_from_sinr(1.0) == doctest::Approx(1.0));
  CHECK(rate_from_sinr(3.0) == doctest::Approx(2.0));
  CHECK(rate_from_sinr(2.0) < rate_from_sinr(2.5));
}

TEST_CASE("harvested energy: zero beams, matched energy beam, trace form") {
  std::mt19937_64 rng(13);
  Scenario sc = small_scenario(rng, 2, 2, 1, 2);
  Beams zero;
  zero.w = {CVectorXd::Zero(4)};
  zero.v = {CVectorXd::Zero(4), CVectorXd::Zero(4)};
  CHECK(harvested_energy(0, zero, sc) == 0.0);

  const double p = 2.0;
  Beams one = zero;
  one.v[0] = std::sqrt(p) * sc.g[0] / sc.g[0].norm();
  CHECK(harvested_energy(0, one, sc) == doctest::Approx(0.5 * p * sc.g[0].squaredNorm()).epsilon(1e-12));

  const Beams r = random_beams(rng, sc);
  for (int j = 0; j < 2; ++j) {
    const auto gj = HermitianMatrixXd::Outer(sc.g[j]);
    double t = 0.0;
    for (const auto& w : r.w) t += trace_inner(gj, HermitianMatrixXd::Outer(w));
    for (const auto& v : r.v) t += trace_inner(gj, HermitianMatrixXd::Outer(v));
    CHECK(rel_err(harvested_energy(j, r, sc), sc.eta * t) < 1e-9);
  }
}

TEST_CASE("rrh power and fronthaul usage") {
  std::mt19937_64 rng(17);
  Scenario sc = small_scenario(rng, 2, 2, 1, 1);
  Beams zero;
  zero.w = {CVectorXd::Zero(4)};
  zero.v = {CVectorXd::Zero(4)};
  CHECK(rrh_power(0, zero, 2) == 0.0);
  CHECK(fronthaul_usage(0, zero, {0.0}, 2, 1e-6) == 0.0);

  Beams only_first = zero;
  only_first.w[0] << 1.0, 0.5, 0.0, 0.0;
  CHECK(fronthaul_usage(0, only_first, {2.5}, 2, 1e-6) == 2.5);
  CHECK(fronthaul_usage(1, only_first, {2.5}, 2, 1e-6) == 0.0);

  const Beams r = random_beams(rng, sc);
  for (int l = 0; l < 2; ++l) {
    const auto al = selection_matrix(l, 2, 2);
    double t = trace_inner(al, HermitianMatrixXd::Outer(r.w[0])) + trace_inner(al, HermitianMatrixXd::Outer(r.v[0]));
    CHECK(std::abs(rrh_power(l, r, 2) - t) <= 1e-12 * std::max(1.0, t));
  }
}

TEST_CASE("beam scaling scales power quadratically and keeps associations") {
  std::mt19937_64 rng(19);
  Scenario sc = small_scenario(rng, 3, 2, 2, 1);
  Beams r = random_beams(rng, sc);
  r.w[1].segment(2, 2).setZero();
  const auto base = evaluate(r, sc);
  Beams scaled = r;
  for (auto& w : scaled.w) w *= 3.0;
  for (auto& v : scaled.v) v *= 3.0;
  const auto big = evaluate(scaled, sc);
  for (int l = 0; l < 3; ++l) CHECK(big.power_w[l] == doctest::Approx(9.0 * base.power_w[l]).epsilon(1e-12));
  CHECK(big.association == base.association);
  CHECK_FALSE(base.association[1][1]);
  CHECK(base.mean_associated_rrhs() == doctest::Approx(2.5));
}

TEST_CASE("evaluate stores metrics consistent with the free functions") {
  std::mt19937_64 rng(23);
  Scenario sc = small_scenario(rng, 2, 2, 3, 2);
  const Beams r = random_beams(rng, sc);
  const auto s = evaluate(r, sc);
  for (int k = 0; k < 3; ++k) CHECK(rel_err(s.rate[k], rate(k, r, sc)) < 1e-9);
  for (int j = 0; j < 2; ++j) CHECK(rel_err(s.energy_w[j], harvested_energy(j, r, sc)) < 1e-9);
  CHECK(s.min_rate() == doctest::Approx(*std::min_element(s.rate.begin(), s.rate.end())));
  Beams wrong = r;
  wrong.w.pop_back();
  CHECK_THROWS_AS(evaluate(wrong, sc), std::invalid_argument);
}

TEST_CASE("scenario validation") {
  std::mt19937_64 rng(29);
  Scenario sc = small_scenario(rng, 2, 2, 1, 1);
  Scenario bad = sc;
  bad.eta = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = sc;
  bad.sigma2_w = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = sc;
  bad.capacity[0] = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = sc;
  bad.h[0] = CVectorXd::Zero(3);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  const Scenario base = build_scenario(ScenarioConfig{}, 77);
  CHECK(base.L == 3);
  CHECK(base.h.size() == 6);
  CHECK(base.g.size() == 3);
  CHECK(base.h[0].size() == 6);
}
