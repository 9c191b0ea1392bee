#include "cran/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cran {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Topology generate_topology(int rrh_count, int dr_count, int er_count, const TopologyLayout& layout,
                           std::uint64_t seed) {
  if (rrh_count <= 0 || dr_count < 0 || er_count < 0) throw std::invalid_argument("generate_topology: bad counts");
  if (!(layout.user_radius_m > 0) || layout.exclusion_m < 0 || layout.rrh_radius_m < 0) {
    throw std::invalid_argument("generate_topology: bad layout radii");
  }
  Topology t;
  for (int l = 0; l < rrh_count; ++l) {
    if (rrh_count == 1) {
      t.rrh.push_back({0.0, 0.0});
    } else {
      const double phi = 2.0 * std::numbers::pi * l / rrh_count;
      t.rrh.push_back({layout.rrh_radius_m * std::cos(phi), layout.rrh_radius_m * std::sin(phi)});
    }
  }
  Rng rng(seed);
  auto draw = [&]() {
    for (int attempt = 0; attempt < 100000; ++attempt) {
      const Point p{(2.0 * rng.uniform() - 1.0) * layout.user_radius_m,
                    (2.0 * rng.uniform() - 1.0) * layout.user_radius_m};
      if (std::hypot(p.x, p.y) > layout.user_radius_m) continue;
      const bool clear = std::all_of(t.rrh.begin(), t.rrh.end(),
                                     [&](const Point& r) { return distance(p, r) >= layout.exclusion_m; });
      if (clear) return p;
    }
    throw std::runtime_error("generate_topology: exclusion zones cover the user disc");
  };
  for (int k = 0; k < dr_count; ++k) t.dr.push_back(draw());
  for (int j = 0; j < er_count; ++j) t.er.push_back(draw());
  return t;
}

double channel_power_gain(double distance_m, double alpha, double fading) {
  if (!(distance_m > 0)) throw std::invalid_argument("channel_power_gain: distance must be positive");
  if (!(alpha > 0)) throw std::invalid_argument("channel_power_gain: path-loss exponent must be positive");
  return 1e-3 * fading / std::pow(distance_m, alpha);
}

Channels generate_channels(const Topology& topology, int antennas, double alpha, std::uint64_t seed) {
  if (!(alpha > 0)) throw std::invalid_argument("generate_channels: path-loss exponent must be positive");
  if (antennas <= 0) throw std::invalid_argument("generate_channels: antenna count must be positive");
  const int L = static_cast<int>(topology.rrh.size());
  const int n = L * antennas;
  Channels ch;
  ch.h.assign(topology.dr.size(), CVectorXd::Zero(n));
  ch.g.assign(topology.er.size(), CVectorXd::Zero(n));
  Rng rng(seed);
  auto fill = [&](int l, const Point& rx, CVectorXd& out) {
    const double d = distance(topology.rrh[l], rx);
    if (!(d > 0)) throw std::invalid_argument("generate_channels: zero RRH-receiver distance");
    for (int m = 0; m < antennas; ++m) {
      const double a = rng.exponential();
      const double phase = 2.0 * std::numbers::pi * rng.uniform();
      out(l * antennas + m) = std::polar(std::sqrt(channel_power_gain(d, alpha, a)), phase);
    }
  };
  for (int l = 0; l < L; ++l) {
    for (std::size_t k = 0; k < topology.dr.size(); ++k) fill(l, topology.dr[k], ch.h[k]);
    for (std::size_t j = 0; j < topology.er.size(); ++j) fill(l, topology.er[j], ch.g[j]);
  }
  return ch;
}

void Scenario::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("Scenario: " + what); };
  if (L <= 0 || M <= 0 || K < 0 || J < 0) fail("dimensions must be positive");
  if (static_cast<int>(h.size()) != K) fail("expected K DR channels");
  if (static_cast<int>(g.size()) != J) fail("expected J ER channels");
  for (const auto& v : h) {
    if (v.size() != L * M) fail("DR channel length must be M*L");
    if (!v.allFinite()) fail("non-finite DR channel");
  }
  for (const auto& v : g) {
    if (v.size() != L * M) fail("ER channel length must be M*L");
    if (!v.allFinite()) fail("non-finite ER channel");
  }
  if (static_cast<int>(energy_w.size()) != L) fail("expected L energy budgets");
  if (static_cast<int>(capacity.size()) != L) fail("expected L fronthaul capacities");
  for (double e : energy_w) {
    if (!(e >= 0) || !std::isfinite(e)) fail("energy budgets must be finite and nonnegative");
  }
  for (double c : capacity) {
    if (!(c > 0)) fail("fronthaul capacities must be positive");
  }
  if (!(sigma2_w > 0)) fail("noise power must be positive");
  if (!(eta > 0 && eta < 1)) fail("efficiency must lie in (0, 1)");
  if (!(q_min_w >= 0) || !std::isfinite(q_min_w)) fail("RF energy target must be finite and nonnegative");
}

Scenario build_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  const Topology topo = generate_topology(config.L, config.K, config.J, config.layout, derive_seed(seed, 0));
  Channels ch = generate_channels(topo, config.M, config.path_loss_exponent, derive_seed(seed, 1));
  Scenario sc;
  sc.L = config.L;
  sc.M = config.M;
  sc.K = config.K;
  sc.J = config.J;
  sc.h = std::move(ch.h);
  sc.g = std::move(ch.g);
  sc.energy_w = config.energy_w;
  sc.capacity = config.capacity;
  sc.q_min_w = config.q_min_w;
  sc.sigma2_w = config.sigma2_w;
  sc.eta = config.eta;
  sc.validate();
  return sc;
}

HermitianMatrixXd selection_matrix(int l, int L, int M) {
  if (l < 0 || l >= L) throw std::out_of_range("selection_matrix: RRH index out of range");
  Eigen::VectorXd d = Eigen::VectorXd::Zero(L * M);
  d.segment(l * M, M).setOnes();
  return HermitianMatrixXd::Diagonal(d);
}

namespace {

double gain(const CVectorXd& ch, const CVectorXd& beam) { return std::norm(ch.dot(beam)); }

}  // namespace

double sinr(int k, const Beams& beams, const Scenario& sc) {
  const CVectorXd& hk = sc.h.at(k);
  double interference = sc.sigma2_w;
  for (std::size_t i = 0; i < beams.w.size(); ++i) {
    if (static_cast<int>(i) != k) interference += gain(hk, beams.w[i]);
  }
  for (const auto& v : beams.v) interference += gain(hk, v);
  return gain(hk, beams.w.at(k)) / interference;
}

double rate_from_sinr(double s) { return std::log2(1.0 + s); }

double rate(int k, const Beams& beams, const Scenario& sc) { return rate_from_sinr(sinr(k, beams, sc)); }

double harvested_energy(int j, const Beams& beams, const Scenario& sc) {
  const CVectorXd& gj = sc.g.at(j);
  double p = 0.0;
  for (const auto& w : beams.w) p += gain(gj, w);
  for (const auto& v : beams.v) p += gain(gj, v);
  return sc.eta * p;
}

double rrh_power(int l, const Beams& beams, int M) {
  double p = 0.0;
  for (const auto& w : beams.w) p += w.segment(l * M, M).squaredNorm();
  for (const auto& v : beams.v) p += v.segment(l * M, M).squaredNorm();
  return p;
}

bool associated(int k, int l, const Beams& beams, int M, double threshold) {
  const CVectorXd& w = beams.w.at(k);
  return w.segment(l * M, M).squaredNorm() > threshold * w.squaredNorm();
}

double fronthaul_usage(int l, const Beams& beams, const std::vector<double>& rates, int M, double threshold) {
  double u = 0.0;
  for (std::size_t k = 0; k < beams.w.size(); ++k) {
    if (associated(static_cast<int>(k), l, beams, M, threshold)) u += rates.at(k);
  }
  return u;
}

double BeamformingSolution::min_rate() const {
  return rate.empty() ? 0.0 : *std::min_element(rate.begin(), rate.end());
}

double BeamformingSolution::min_energy() const {
  return energy_w.empty() ? 0.0 : *std::min_element(energy_w.begin(), energy_w.end());
}

double BeamformingSolution::max_power() const {
  return power_w.empty() ? 0.0 : *std::max_element(power_w.begin(), power_w.end());
}

double BeamformingSolution::mean_associated_rrhs() const {
  if (association.empty()) return 0.0;
  double total = 0.0;
  for (const auto& row : association) total += static_cast<double>(std::count(row.begin(), row.end(), true));
  return total / static_cast<double>(association.size());
}

BeamformingSolution evaluate(Beams beams, const Scenario& sc, double assoc_threshold) {
  if (static_cast<int>(beams.w.size()) != sc.K || static_cast<int>(beams.v.size()) != sc.J) {
    throw std::invalid_argument("evaluate: beam count does not match the scenario");
  }
  for (const auto& b : beams.w) {
    if (b.size() != sc.antennas_total()) throw std::invalid_argument("evaluate: beam length mismatch");
  }
  for (const auto& b : beams.v) {
    if (b.size() != sc.antennas_total()) throw std::invalid_argument("evaluate: beam length mismatch");
  }
  BeamformingSolution s;
  s.assoc_threshold = assoc_threshold;
  for (int k = 0; k < sc.K; ++k) {
    s.sinr.push_back(sinr(k, beams, sc));
    s.rate.push_back(rate_from_sinr(s.sinr.back()));
  }
  for (int j = 0; j < sc.J; ++j) s.energy_w.push_back(harvested_energy(j, beams, sc));
  for (int l = 0; l < sc.L; ++l) {
    s.power_w.push_back(rrh_power(l, beams, sc.M));
    s.fronthaul.push_back(fronthaul_usage(l, beams, s.rate, sc.M, assoc_threshold));
  }
  s.association.assign(sc.K, std::vector<bool>(sc.L, false));
  for (int k = 0; k < sc.K; ++k)
    for (int l = 0; l < sc.L; ++l) s.association[k][l] = associated(k, l, beams, sc.M, assoc_threshold);
  s.beams = std::move(beams);
  return s;
}

}  // namespace cran
