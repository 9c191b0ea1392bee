// Network model: topology, channel generation and the physical-layer
// metrics (SINR, rate, harvested RF energy, per-RRH power and fronthaul).
//
// Indices are zero-based throughout: RRH l in [0, L), DR k in [0, K),
// ER j in [0, J). Network-wide vectors stack the per-RRH blocks, so antenna
// m of RRH l sits at position l * M + m.
#ifndef CRAN_MODEL_HPP
#define CRAN_MODEL_HPP

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "cran/linalg.hpp"

namespace cran {

inline constexpr double kInfiniteCapacity = std::numeric_limits<double>::infinity();

/// Deterministic generator. Uniforms take the top 53 bits of a
/// std::mt19937_64 draw, so sequences are identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Exponential(1) by inverse CDF.
  double exponential() { return -std::log1p(-uniform()); }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer applied to base + (index + 1) * golden-ratio
/// increment. Trial t of a sweep uses derive_seed(seed, t), so adding trials
/// never changes earlier ones.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point& a, const Point& b);

struct Topology {
  std::vector<Point> rrh;
  std::vector<Point> dr;
  std::vector<Point> er;
};

struct TopologyLayout {
  double rrh_radius_m = 10.0;   // RRHs on a regular polygon of this radius
  double user_radius_m = 15.0;  // receivers uniform in the disc of this radius
  double exclusion_m = 1.0;     // minimum receiver distance to any RRH
};

/// Places L RRHs on a regular polygon (the origin when L == 1) and draws
/// receivers uniformly in the disc by rejection: DRs first, then ERs, each
/// point as (x, y) uniforms.
Topology generate_topology(int rrh_count, int dr_count, int er_count, const TopologyLayout& layout,
                           std::uint64_t seed);

struct Channels {
  std::vector<CVectorXd> h;  // K vectors of length M L
  std::vector<CVectorXd> g;  // J vectors of length M L
};

/// Mean-scaled power gain 1e-3 * a / d^alpha of one antenna coefficient.
double channel_power_gain(double distance_m, double alpha, double fading);

/// Rayleigh channels with power gain 1e-3 * a / d^alpha, a ~ Exp(1).
/// Draw order: RRH-major, then receiver (DRs before ERs), then antenna; each
/// coefficient consumes one uniform for a (inverse CDF) and one for its phase.
Channels generate_channels(const Topology& topology, int antennas, double alpha, std::uint64_t seed);

struct Scenario {
  int L = 0;  // RRHs
  int M = 0;  // antennas per RRH
  int K = 0;  // data receivers
  int J = 0;  // energy receivers
  std::vector<CVectorXd> h;
  std::vector<CVectorXd> g;
  std::vector<double> energy_w;        // E_l, watts
  std::vector<double> capacity;        // C_l, bits/s/Hz; kInfiniteCapacity for unlimited
  double q_min_w = 0.0;                // RF energy target, watts
  double sigma2_w = 1e-9;              // noise power, watts
  double eta = 0.5;                    // RF-to-DC efficiency

  int antennas_total() const { return L * M; }
  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
  /// h_k restricted to RRH l.
  CVectorXd dr_block(int k, int l) const { return h[k].segment(l * M, M); }
};

/// Everything needed to draw a random Scenario: dimensions, geometry,
/// budgets and receiver parameters. Topology and channels come from the seed.
struct ScenarioConfig {
  int L = 3;
  int M = 2;
  int K = 6;
  int J = 3;
  TopologyLayout layout;
  double path_loss_exponent = 3.0;
  std::vector<double> energy_w{5.0, 5.0, 5.0};
  std::vector<double> capacity{kInfiniteCapacity, kInfiniteCapacity, kInfiniteCapacity};
  double q_min_w = 1e-6;
  double sigma2_w = 1e-9;
  double eta = 0.5;
};

/// Topology from derive_seed(seed, 0), channels from derive_seed(seed, 1).
Scenario build_scenario(const ScenarioConfig& config, std::uint64_t seed);

/// Beamforming vectors: w[k] for DR k, v[j] for ER j, each of length M L.
struct Beams {
  std::vector<CVectorXd> w;
  std::vector<CVectorXd> v;
};

/// A_l: diagonal 0/1 selector of RRH l's antennas.
HermitianMatrixXd selection_matrix(int l, int L, int M);

double sinr(int k, const Beams& beams, const Scenario& scenario);
/// log2(1 + sinr)
double rate(int k, const Beams& beams, const Scenario& scenario);
double rate_from_sinr(double sinr);
double harvested_energy(int j, const Beams& beams, const Scenario& scenario);
/// ||w_{kl}||^2 summed over DRs plus ||v_{jl}||^2 summed over ERs.
double rrh_power(int l, const Beams& beams, int M);
/// 1{ ||w_{kl}||^2 > threshold * ||w_k||^2 }
bool associated(int k, int l, const Beams& beams, int M, double threshold);
/// sum_k 1{associated(k, l)} * rates[k]
double fronthaul_usage(int l, const Beams& beams, const std::vector<double>& rates, int M, double threshold);

struct BeamformingSolution {
  Beams beams;
  std::vector<double> sinr;
  std::vector<double> rate;
  std::vector<double> energy_w;
  std::vector<double> power_w;
  std::vector<double> fronthaul;
  std::vector<std::vector<bool>> association;  // [k][l]
  double assoc_threshold = 1e-6;

  double min_rate() const;
  double min_energy() const;
  double max_power() const;
  double mean_associated_rrhs() const;
};

/// Evaluates every derived metric from the raw vectors.
BeamformingSolution evaluate(Beams beams, const Scenario& scenario, double assoc_threshold = 1e-6);

}  // namespace cran

#endif  // CRAN_MODEL_HPP
