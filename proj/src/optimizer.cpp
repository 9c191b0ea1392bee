#include "cran/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cran {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<int> antenna_indices(const std::vector<int>& rrhs, int M) {
  std::vector<int> idx;
  for (int l : rrhs)
    for (int m = 0; m < M; ++m) idx.push_back(l * M + m);
  return idx;
}

CVectorXd gather(const CVectorXd& v, const std::vector<int>& idx) {
  CVectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
  return out;
}

HermitianMatrixXd scatter(const HermitianMatrixXd& small, const std::vector<int>& idx, int n) {
  CMatrixXd full = CMatrixXd::Zero(n, n);
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b) full(idx[a], idx[b]) = small(a, b);
  return HermitianMatrixXd(full);
}

/// Restriction of A_l to the antennas listed in idx.
HermitianMatrixXd restricted_selection(const std::vector<int>& idx, int l, int M) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) d(static_cast<Eigen::Index>(i)) = (idx[i] / M == l) ? 1.0 : 0.0;
  return HermitianMatrixXd::Diagonal(d);
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

double block_power(const HermitianMatrixXd& X, int l, int M) {
  double p = 0.0;
  for (int m = 0; m < M; ++m) p += X(l * M + m, l * M + m).real();
  return p;
}

/// Splits the aggregate energy covariance into J beams along its top
/// eigenvectors. All constraints see the energy covariances only through
/// their sum, so this is lossless whenever that sum has rank <= J.
std::vector<CVectorXd> energy_beams_from_sum(const std::vector<HermitianMatrixXd>& V, int J, int n) {
  std::vector<CVectorXd> beams(J, CVectorXd::Zero(n));
  if (V.empty()) return beams;
  HermitianMatrixXd sum = HermitianMatrixXd::Zero(n);
  for (const auto& v : V) sum += v;
  const auto eig = hermitian_eig(sum);
  for (int j = 0; j < J && j < n; ++j) {
    if (eig.eigenvalues(j) > 0) {
      beams[j] = normalize_phase<double>(std::sqrt(eig.eigenvalues(j)) * eig.eigenvectors.col(j));
    }
  }
  return beams;
}

double relative_change(const Eigen::MatrixXd& now, const Eigen::MatrixXd& before) {
  if (now.size() != before.size() || now.size() == 0) return now.size() == before.size() ? 0.0 : kInf;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < now.size(); ++i) {
    const double a = now.data()[i];
    const double b = before.data()[i];
    const double scale = std::max(std::abs(b), 1e-12);
    worst = std::max(worst, std::abs(a - b) / scale);
  }
  return worst;
}

bool any_finite_capacity(const Scenario& sc) {
  return std::any_of(sc.capacity.begin(), sc.capacity.end(), [](double c) { return std::isfinite(c); });
}

}  // namespace

void SolverOptions::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(std::string("SolverOptions: ") + what); };
  if (!(tau > 0)) fail("tau must be positive");
  if (!(eps_bisect > 0 && eps_bisect < 1)) fail("eps_bisect must be in (0, 1)");
  if (!(eps_gamma_reweight > 0 && eps_gamma_reweight < 1)) fail("eps_gamma_reweight must be in (0, 1)");
  if (!(eps_beta > 0 && eps_beta < 1)) fail("eps_beta must be in (0, 1)");
  if (!(eps_rate > 0 && eps_rate < 1)) fail("eps_rate must be in (0, 1)");
  if (max_bisect_iters <= 0 || max_outer_iters <= 0) fail("iteration caps must be positive");
  if (!(assoc_threshold > 0 && assoc_threshold < 1)) fail("assoc_threshold must be in (0, 1)");
  if (!(feasibility_margin > 0 && feasibility_margin < 1)) fail("feasibility_margin must be in (0, 1)");
}

OuterState OuterState::initial(const Scenario& sc) {
  OuterState s;
  s.beta = Eigen::MatrixXd::Zero(sc.K, sc.L);
  s.rhat = Eigen::VectorXd::Zero(sc.K);
  return s;
}

PeakPowerShape PeakPowerShape::joint(const Scenario& sc) {
  PeakPowerShape shape;
  std::vector<int> all(sc.L);
  for (int l = 0; l < sc.L; ++l) all[l] = l;
  shape.dr_support.assign(sc.K, all);
  shape.budgets_w = sc.energy_w;
  return shape;
}

// ---------------------------------------------------------------------------
// Maximum harvestable energy

MaxEnergyResult solve_max_energy(const Scenario& sc, const IpmOptions& ipm) {
  sc.validate();
  MaxEnergyResult out;
  const int n = sc.antennas_total();
  if (sc.J == 0) {
    out.status = SolveStatus::Optimal;
    return out;
  }
  std::vector<int> active;
  for (int l = 0; l < sc.L; ++l)
    if (sc.energy_w[l] > 0) active.push_back(l);
  if (active.empty()) {
    out.status = SolveStatus::Optimal;
    out.v.assign(sc.J, CVectorXd::Zero(n));
    out.V.assign(sc.J, HermitianMatrixXd::Zero(n));
    return out;
  }
  const std::vector<int> idx = antenna_indices(active, sc.M);
  const double sigma = std::sqrt(sc.sigma2_w);

  ConicProgram p;
  for (int j = 0; j < sc.J; ++j) p.add_psd_block("V" + std::to_string(j), static_cast<int>(idx.size()));
  const int t = p.add_scalar("t", ScalarSign::Free);
  for (int j = 0; j < sc.J; ++j) {
    LinearConstraint c;
    c.name = "energy_" + std::to_string(j);
    const auto gj = HermitianMatrixXd::Outer(gather(sc.g[j], idx) / sigma);
    for (int i = 0; i < sc.J; ++i) c.blocks.push_back({i, sc.eta * gj});
    c.scalars.push_back({t, -1.0});
    c.relation = Relation::GreaterEqual;
    p.add_constraint(std::move(c));
  }
  for (int l : active) {
    LinearConstraint c;
    c.name = "power_" + std::to_string(l);
    const auto al = restricted_selection(idx, l, sc.M);
    for (int i = 0; i < sc.J; ++i) c.blocks.push_back({i, al});
    c.relation = Relation::LessEqual;
    c.rhs = sc.energy_w[l];
    p.add_constraint(std::move(c));
  }
  p.set_objective(Sense::Maximize, {}, {{t, 1.0}});

  const ConicSolution sol = solve(p, ipm);
  out.status = sol.status;
  if (sol.status != SolveStatus::Optimal) return out;
  out.q_max_w = std::max(0.0, sol.scalars[t]) * sc.sigma2_w;
  for (int j = 0; j < sc.J; ++j) out.V.push_back(scatter(sol.blocks[j], idx, n));
  out.v = energy_beams_from_sum(out.V, sc.J, n);
  return out;
}

// ---------------------------------------------------------------------------
// Peak-power program

ConicProgram build_peak_power_program(const Scenario& sc, double gamma, const OuterState& state,
                                      const PeakPowerShape& shape) {
  if (!(gamma > 0) || !std::isfinite(gamma)) throw std::invalid_argument("build_peak_power_program: gamma must be positive");
  if (state.beta.rows() != sc.K || state.beta.cols() != sc.L || state.rhat.size() != sc.K) {
    throw std::invalid_argument("build_peak_power_program: state dimensions do not match the scenario");
  }
  if (static_cast<int>(shape.dr_support.size()) != sc.K || static_cast<int>(shape.budgets_w.size()) != sc.L) {
    throw std::invalid_argument("build_peak_power_program: shape dimensions do not match the scenario");
  }
  if (!shape.energy_blocks && static_cast<int>(shape.fixed_energy_beams.size()) != sc.J) {
    throw std::invalid_argument("build_peak_power_program: expected J fixed energy beams");
  }
  const int n = sc.antennas_total();
  const double sigma = std::sqrt(sc.sigma2_w);

  std::vector<std::vector<int>> idx(sc.K);
  ConicProgram p;
  for (int k = 0; k < sc.K; ++k) {
    if (shape.dr_support[k].empty()) throw std::invalid_argument("build_peak_power_program: DR with empty support");
    idx[k] = antenna_indices(shape.dr_support[k], sc.M);
    p.add_psd_block("W" + std::to_string(k), static_cast<int>(idx[k].size()));
  }
  const int v0 = static_cast<int>(p.blocks().size());
  if (shape.energy_blocks) {
    for (int j = 0; j < sc.J; ++j) p.add_psd_block("V" + std::to_string(j), n);
  }
  const int rho = p.add_scalar("rho", ScalarSign::Free);

  // Received power of the fixed energy beams, in units of sigma^2.
  auto fixed_energy_at = [&](const CVectorXd& ch) {
    double s = 0.0;
    if (!shape.energy_blocks) {
      for (const auto& v : shape.fixed_energy_beams) s += std::norm(ch.dot(v));
    }
    return s / sc.sigma2_w;
  };

  if (shape.energy_rows) {
    for (int j = 0; j < sc.J; ++j) {
      LinearConstraint c;
      c.name = "energy_" + std::to_string(j);
      const CVectorXd gj = sc.g[j] / sigma;
      for (int k = 0; k < sc.K; ++k) c.blocks.push_back({k, HermitianMatrixXd::Outer(gather(gj, idx[k]))});
      if (shape.energy_blocks) {
        const auto G = HermitianMatrixXd::Outer(gj);
        for (int i = 0; i < sc.J; ++i) c.blocks.push_back({v0 + i, G});
      }
      c.relation = Relation::GreaterEqual;
      c.rhs = sc.q_min_w / (sc.eta * sc.sigma2_w) - fixed_energy_at(sc.g[j]);
      p.add_constraint(std::move(c));
    }
  }

  for (int l = 0; l < sc.L; ++l) {
    if (!std::isfinite(sc.capacity[l])) continue;
    LinearConstraint c;
    c.name = "fronthaul_" + std::to_string(l);
    for (int k = 0; k < sc.K; ++k) {
      const double weight = state.beta(k, l) * state.rhat(k);
      if (weight > 0 && contains(shape.dr_support[k], l)) {
        c.blocks.push_back({k, weight * restricted_selection(idx[k], l, sc.M)});
      }
    }
    if (c.blocks.empty()) continue;
    c.relation = Relation::LessEqual;
    c.rhs = sc.capacity[l];
    p.add_constraint(std::move(c));
  }

  for (int k = 0; k < sc.K; ++k) {
    const CVectorXd hk = sc.h[k] / sigma;
    const double noise = 1.0 + fixed_energy_at(sc.h[k]);
    auto row = [&](double own, double others, Relation rel, double rhs, const std::string& name) {
      LinearConstraint c;
      c.name = name;
      for (int i = 0; i < sc.K; ++i) {
        const auto Hi = HermitianMatrixXd::Outer(gather(hk, idx[i]));
        c.blocks.push_back({i, (i == k ? own : -others) * Hi});
      }
      if (shape.energy_blocks) {
        const auto H = HermitianMatrixXd::Outer(hk);
        for (int j = 0; j < sc.J; ++j) c.blocks.push_back({v0 + j, -others * H});
      }
      c.relation = rel;
      c.rhs = rhs;
      p.add_constraint(std::move(c));
    };
    row(1.0 / gamma, 1.0, Relation::GreaterEqual, noise, "sinr_" + std::to_string(k));
    if (std::isfinite(shape.sinr_cap)) {
      row(1.0, shape.sinr_cap, Relation::LessEqual, shape.sinr_cap * noise, "sinr_cap_" + std::to_string(k));
    }
  }

  bool rho_used = false;
  for (int l = 0; l < sc.L; ++l) {
    LinearConstraint c;
    c.name = "power_" + std::to_string(l);
    for (int k = 0; k < sc.K; ++k) {
      if (contains(shape.dr_support[k], l)) c.blocks.push_back({k, restricted_selection(idx[k], l, sc.M)});
    }
    if (shape.energy_blocks) {
      const auto al = selection_matrix(l, sc.L, sc.M);
      for (int j = 0; j < sc.J; ++j) c.blocks.push_back({v0 + j, al});
    }
    if (c.blocks.empty()) continue;
    if (shape.budgets_w[l] > 0) {
      c.scalars.push_back({rho, -shape.budgets_w[l]});
      rho_used = true;
    }
    c.relation = Relation::LessEqual;
    p.add_constraint(std::move(c));
  }
  if (!rho_used) throw std::invalid_argument("build_peak_power_program: every serving RRH has a zero budget");
  p.set_objective(Sense::Minimize, {}, {{rho, 1.0}});
  return p;
}

ConicProgram build_peak_power_program(const Scenario& sc, double gamma, const OuterState& state) {
  return build_peak_power_program(sc, gamma, state, PeakPowerShape::joint(sc));
}

PeakPowerResult h_of_gamma(const Scenario& sc, double gamma, const OuterState& state, const SolverOptions& options,
                           const PeakPowerShape& shape) {
  const ConicProgram p = build_peak_power_program(sc, gamma, state, shape);
  ConicSolution sol = solve(p, options.ipm);
  PeakPowerResult out;
  out.ipm_iterations = sol.iterations;
  if (sol.status == SolveStatus::NumericalLimit || sol.status == SolveStatus::Unbounded) {
    IpmOptions relaxed = options.ipm;
    relaxed.gap_tol = std::max(relaxed.gap_tol, 1e-6);
    relaxed.feas_tol = std::max(relaxed.feas_tol, 1e-6);
    relaxed.max_iterations = 2 * relaxed.max_iterations;
    sol = solve(p, relaxed);
    out.retried = true;
    out.ipm_iterations += sol.iterations;
  }
  out.status = sol.status;
  if (sol.status == SolveStatus::Infeasible) {
    out.h = kInf;
    return out;
  }
  if (sol.status != SolveStatus::Optimal) return out;

  const int n = sc.antennas_total();
  out.h = sol.scalars.back();
  for (int k = 0; k < sc.K; ++k) {
    out.W.push_back(scatter(sol.blocks[k], antenna_indices(shape.dr_support[k], sc.M), n));
  }
  if (shape.energy_blocks) {
    for (int j = 0; j < sc.J; ++j) out.V.push_back(sol.blocks[sc.K + j]);
  }
  return out;
}

PeakPowerResult h_of_gamma(const Scenario& sc, double gamma, const OuterState& state, const SolverOptions& options) {
  return h_of_gamma(sc, gamma, state, options, PeakPowerShape::joint(sc));
}

// ---------------------------------------------------------------------------
// Bisection

double gamma_upper_bound(const Scenario& sc, const PeakPowerShape& shape) {
  double best = 0.0;
  for (int k = 0; k < sc.K; ++k) {
    double s = 0.0;
    for (int l : shape.dr_support[k]) s += std::sqrt(std::max(0.0, shape.budgets_w[l])) * sc.dr_block(k, l).norm();
    double noise = sc.sigma2_w;
    if (!shape.energy_blocks) {
      for (const auto& v : shape.fixed_energy_beams) noise += std::norm(sc.h[k].dot(v));
    }
    best = std::max(best, s * s / noise);
  }
  return best;
}

double gamma_upper_bound(const Scenario& sc) { return gamma_upper_bound(sc, PeakPowerShape::joint(sc)); }

const char* to_string(BisectionOutcome o) {
  switch (o) {
    case BisectionOutcome::PowerLimited: return "power_limited";
    case BisectionOutcome::ConstraintLimited: return "constraint_limited";
    case BisectionOutcome::NumericalLimit: return "numerical_limit";
  }
  return "unknown";
}

namespace {

bool achievable(const PeakPowerResult& r) { return r.status == SolveStatus::Optimal && r.h <= 1.0; }

/// Bisection on [lo, hi]. When `floor` holds an achievable solve at lo it
/// seeds the best iterate; `probe_top` first tries a point just below hi. A
/// positive `guess` inside the bracket is used to shrink it geometrically
/// before bisecting.
BisectionResult bisect(const Scenario& sc, const OuterState& state, const SolverOptions& options,
                       const PeakPowerShape& shape, double lo, double hi, bool capped, PeakPowerResult* floor,
                       bool probe_top, double guess = 0.0, double collapse = 0.0) {
  const int n = sc.antennas_total();
  if (!(collapse > 0)) collapse = options.eps_bisect;
  constexpr double kMachineFloor = 1e-12;
  BisectionResult out;
  out.beams.w.assign(sc.K, CVectorXd::Zero(n));
  out.beams.v = shape.energy_blocks ? std::vector<CVectorXd>(sc.J, CVectorXd::Zero(n)) : shape.fixed_energy_beams;
  if (!(hi > 0)) {
    out.outcome = BisectionOutcome::ConstraintLimited;
    out.message = "SINR upper bound is zero";
    return out;
  }

  bool have_best = false;
  bool top_unreachable = capped;
  PeakPowerResult best;
  if (floor != nullptr) {
    best = std::move(*floor);
    have_best = true;
    out.gamma_max = lo;
    out.h = best.h;
  }
  out.outcome = BisectionOutcome::NumericalLimit;
  out.message = "bisection iteration cap reached";
  bool done = false;
  if (probe_top && hi > lo) {
    const double gamma = hi * (1.0 - collapse);
    PeakPowerResult r = h_of_gamma(sc, gamma, state, options, shape);
    out.trace.push_back({gamma, r.h, r.status});
    if (achievable(r)) {
      lo = gamma;
      best = std::move(r);
      have_best = true;
      out.gamma_max = gamma;
      out.h = best.h;
      out.outcome = best.h >= 1.0 - options.eps_bisect || !capped ? BisectionOutcome::PowerLimited
                                                                    : BisectionOutcome::ConstraintLimited;
      out.message.clear();
      done = true;
    } else {
      hi = gamma;
      top_unreachable = top_unreachable || r.status != SolveStatus::Optimal;
    }
  }
  double step = 1.02;
  bool galloping = !done && guess > lo && guess < hi;
  bool going_up = true;
  for (int it = 0; !done && it < options.max_bisect_iters; ++it) {
    double gamma = 0.5 * (lo + hi);
    if (galloping) {
      gamma = guess;
      if (!(gamma > lo && gamma < hi)) {
        galloping = false;
        gamma = 0.5 * (lo + hi);
      }
    }
    PeakPowerResult r = h_of_gamma(sc, gamma, state, options, shape);
    out.trace.push_back({gamma, r.h, r.status});
    if (galloping) {
      const bool up = achievable(r);
      if (it > 0 && up != going_up) galloping = false;
      going_up = up;
      guess = up ? gamma * step : gamma / step;
      step *= step;
    }
    if (!achievable(r)) {
      hi = gamma;
      top_unreachable = r.status != SolveStatus::Optimal;
    } else {
      lo = gamma;
      best = std::move(r);
      have_best = true;
      out.gamma_max = gamma;
      out.h = best.h;
      if (best.h >= 1.0 - options.eps_bisect) {
        out.outcome = BisectionOutcome::PowerLimited;
        out.message.clear();
        break;
      }
    }
    // Against an unreachable top the bracket only needs the SINR tolerance;
    // otherwise h must enter [1 - eps, 1] before the machine-relative floor.
    if (have_best && top_unreachable && hi - lo <= collapse * hi) {
      out.outcome = BisectionOutcome::ConstraintLimited;
      out.message.clear();
      break;
    }
    if (hi - lo <= kMachineFloor * hi) {
      out.message = "bracket collapsed without meeting the h tolerance";
      break;
    }
  }
  out.gamma_lower = lo;
  out.gamma_upper = hi;
  if (!have_best) {
    out.outcome = BisectionOutcome::NumericalLimit;
    if (out.message.empty()) out.message = "no achievable SINR target found";
    return out;
  }

  out.W = std::move(best.W);
  out.V = std::move(best.V);
  for (int k = 0; k < sc.K; ++k) out.beams.w[k] = principal_component(out.W[k]).beam();
  if (shape.energy_blocks) out.beams.v = energy_beams_from_sum(out.V, sc.J, n);
  return out;
}

double bracket_top(const Scenario& sc, const PeakPowerShape& shape, double gamma_ceiling) {
  return std::min({gamma_upper_bound(sc, shape), shape.sinr_cap, gamma_ceiling});
}

}  // namespace

BisectionResult bisection_gamma_max(const Scenario& sc, const OuterState& state, const SolverOptions& options,
                                    const PeakPowerShape& shape, double gamma_ceiling) {
  options.validate();
  const double hi = bracket_top(sc, shape, gamma_ceiling);
  return bisect(sc, state, options, shape, 0.0, hi, hi == shape.sinr_cap, nullptr, false);
}

BisectionResult bisection_gamma_max(const Scenario& sc, const OuterState& state, const SolverOptions& options) {
  return bisection_gamma_max(sc, state, options, PeakPowerShape::joint(sc));
}

// ---------------------------------------------------------------------------
// Reweighting

Eigen::MatrixXd update_weights(const std::vector<HermitianMatrixXd>& W, int L, int M, double tau) {
  if (!(tau > 0)) throw std::invalid_argument("update_weights: tau must be positive");
  Eigen::MatrixXd beta(static_cast<Eigen::Index>(W.size()), L);
  for (std::size_t k = 0; k < W.size(); ++k) {
    if (W[k].dim() != L * M) throw std::invalid_argument("update_weights: block dimension mismatch");
    for (int l = 0; l < L; ++l) beta(static_cast<Eigen::Index>(k), l) = 1.0 / (std::max(0.0, block_power(W[k], l, M)) + tau);
  }
  return beta;
}

Eigen::VectorXd update_rates(const std::vector<HermitianMatrixXd>& W, const std::vector<HermitianMatrixXd>& V,
                             const Scenario& sc) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(W.size()));
  for (std::size_t k = 0; k < W.size(); ++k) {
    const CVectorXd& h = sc.h.at(k);
    double interference = sc.sigma2_w;
    for (std::size_t i = 0; i < W.size(); ++i) {
      if (i != k) interference += std::max(0.0, quadratic_form(W[i], h));
    }
    for (const auto& v : V) interference += std::max(0.0, quadratic_form(v, h));
    r(static_cast<Eigen::Index>(k)) = rate_from_sinr(std::max(0.0, quadratic_form(W[k], h)) / interference);
  }
  return r;
}

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "converged";
    case RunStatus::NotConverged: return "not_converged";
    case RunStatus::Infeasible: return "infeasible";
    case RunStatus::NumericalLimit: return "numerical_limit";
  }
  return "unknown";
}

namespace {

std::vector<HermitianMatrixXd> outer_products(const std::vector<CVectorXd>& beams) {
  std::vector<HermitianMatrixXd> out;
  for (const auto& b : beams) out.push_back(HermitianMatrixXd::Outer(b));
  return out;
}

using Support = std::vector<std::vector<int>>;

/// Links carrying more than `threshold` of each DR's beam power; a DR with
/// no such link keeps its strongest channel.
Support beam_support(const Scenario& sc, const PeakPowerShape& base, const Beams& beams, double threshold) {
  Support support(sc.K);
  for (int k = 0; k < sc.K; ++k) {
    for (int l : base.dr_support[k]) {
      if (associated(k, l, beams, sc.M, threshold)) support[k].push_back(l);
    }
    if (support[k].empty()) {
      int best = base.dr_support[k].front();
      for (int l : base.dr_support[k]) {
        if (sc.dr_block(k, l).norm() > sc.dr_block(k, best).norm()) best = l;
      }
      support[k].push_back(best);
    }
  }
  return support;
}

std::vector<int> served_counts(const Scenario& sc, const Support& support) {
  std::vector<int> served(sc.L, 0);
  for (const auto& s : support)
    for (int l : s) ++served[l];
  return served;
}

/// RRH whose capacity sets the SINR cap of `support`, or -1 when no finite
/// capacity is in use.
int binding_rrh(const Scenario& sc, const Support& support) {
  const std::vector<int> served = served_counts(sc, support);
  int arg = -1;
  for (int l = 0; l < sc.L; ++l) {
    if (!std::isfinite(sc.capacity[l]) || served[l] == 0) continue;
    if (arg < 0 || sc.capacity[l] / served[l] < sc.capacity[arg] / served[arg]) arg = l;
  }
  return arg;
}

/// The program restricted to `support`, with the SINR capped so that every
/// finite fronthaul capacity carries the rates of the DRs it serves.
PeakPowerShape restricted_shape(const Scenario& sc, const PeakPowerShape& base, const Support& support) {
  PeakPowerShape shape = base;
  shape.dr_support = support;
  const int l = binding_rrh(sc, support);
  if (l >= 0) {
    const int served = served_counts(sc, support)[l];
    shape.sinr_cap = std::min(shape.sinr_cap, std::exp2(sc.capacity[l] / served) - 1.0);
  }
  return shape;
}

/// Greedy support pruning on top of the reweighted beams. Starting from every
/// link in use, each round drops the weakest removable link of the RRH whose
/// capacity binds. A candidate is probed at its bracket top and then at the
/// incumbent target; it is bisected only when it can beat the incumbent.
/// Pruning shrinks the power-feasible set, so the search stops at the first
/// candidate that cannot reach its cap. The returned trace lists every solve.
BisectionResult polish(const Scenario& sc, const SolverOptions& options, const PeakPowerShape& base,
                       const Beams& beams, double ceiling) {
  const OuterState plain = OuterState::initial(sc);
  Support support = beam_support(sc, base, beams, options.assoc_threshold);
  auto share = [&](int k, int l) {
    return beams.w[k].segment(l * sc.M, sc.M).squaredNorm() / std::max(beams.w[k].squaredNorm(), 1e-300);
  };

  BisectionResult best;
  bool have_best = false;
  std::vector<BisectionStep> all_steps;
  for (;;) {
    const PeakPowerShape shape = restricted_shape(sc, base, support);
    const double hi = bracket_top(sc, shape, ceiling);
    const bool capped = hi == shape.sinr_cap;
    BisectionResult r;
    bool usable = true;
    if (!have_best || best.gamma_max <= 0) {
      r = bisect(sc, plain, options, shape, 0.0, hi, capped, nullptr, true);
    } else if (hi > best.gamma_max) {
      PeakPowerResult at_best = h_of_gamma(sc, best.gamma_max, plain, options, shape);
      all_steps.push_back({best.gamma_max, at_best.h, at_best.status});
      if (achievable(at_best)) {
        r = bisect(sc, plain, options, shape, best.gamma_max, hi, capped, &at_best, true);
      } else {
        usable = false;
      }
    } else {
      usable = false;
    }
    const bool reached_cap = usable && capped && r.outcome != BisectionOutcome::NumericalLimit &&
                             r.gamma_max >= hi * (1.0 - 2.0 * options.eps_bisect);
    if (usable) {
      all_steps.insert(all_steps.end(), r.trace.begin(), r.trace.end());
      if (r.outcome != BisectionOutcome::NumericalLimit && (!have_best || r.gamma_max > best.gamma_max)) {
        best = std::move(r);
        have_best = true;
      }
    }
    if (!reached_cap && have_best) break;

    const int l = binding_rrh(sc, support);
    if (l < 0) break;
    int drop = -1;
    for (int k = 0; k < sc.K; ++k) {
      if (support[k].size() < 2 || !contains(support[k], l)) continue;
      if (drop < 0 || share(k, l) < share(drop, l)) drop = k;
    }
    if (drop < 0) break;
    std::erase(support[drop], l);
  }
  if (!have_best) {
    best.outcome = BisectionOutcome::NumericalLimit;
    best.message = "no polished support reached an achievable SINR target";
  }
  best.trace = std::move(all_steps);
  return best;
}

MaxMinResult run_reweighting(const Scenario& sc, const SolverOptions& options, const PeakPowerShape& shape) {
  MaxMinResult out;
  const std::vector<HermitianMatrixXd> fixed_v =
      shape.energy_blocks ? std::vector<HermitianMatrixXd>{} : outer_products(shape.fixed_energy_beams);

  auto record = [&](const OuterState& st, BisectionResult b) -> bool {
    out.states.push_back(st);
    out.bisection_steps += static_cast<int>(b.trace.size());
    const bool ok = b.outcome != BisectionOutcome::NumericalLimit;
    if (!ok) out.message = b.message;
    out.bisections.push_back(std::move(b));
    return ok;
  };

  OuterState state = OuterState::initial(sc);
  if (!record(state, bisection_gamma_max(sc, state, options, shape))) {
    out.status = RunStatus::NumericalLimit;
    return out;
  }
  out.outer_iterations = 1;
  bool converged = true;

  if (any_finite_capacity(sc)) {
    converged = false;
    // Fronthaul rows, support restriction and rate caps only shrink the
    // feasible set, so the first bracket top bounds every later bisection.
    const double ceiling = out.bisections.front().gamma_upper;
    for (int n = 1; n <= options.max_outer_iters; ++n) {
      const BisectionResult& last = out.bisections.back();
      OuterState next;
      next.beta = update_weights(last.W, sc.L, sc.M, options.tau);
      next.rhat = update_rates(last.W, shape.energy_blocks ? last.V : fixed_v, sc);
      next.iteration = n;
      if (n >= 2 && relative_change(next.beta, state.beta) <= options.eps_beta &&
          relative_change(next.rhat, state.rhat) <= options.eps_rate) {
        converged = true;
        break;
      }
      if (n == options.max_outer_iters) break;
      state = next;
      ++out.outer_iterations;
      const double previous = out.bisections.back().gamma_max;
      const double hi = bracket_top(sc, shape, ceiling);
      if (!record(state, bisect(sc, state, options, shape, 0.0, hi, hi == shape.sinr_cap, nullptr, false,
                                previous, options.eps_gamma_reweight))) {
        out.status = RunStatus::NumericalLimit;
        return out;
      }
    }
    // The reweighted rows only approximate the fronthaul usage, so the final
    // beams come from one more bisection on the selected support with a rate cap.
    if (!record(OuterState::initial(sc), polish(sc, options, shape, out.bisections.back().beams, ceiling))) {
      out.status = RunStatus::NumericalLimit;
      return out;
    }
  }

  const BisectionResult& fin = out.bisections.back();
  out.gamma = fin.gamma_max;
  out.solution = evaluate(fin.beams, sc, options.assoc_threshold);
  out.status = converged ? RunStatus::Converged : RunStatus::NotConverged;
  return out;
}

bool energy_gate(const Scenario& sc, const SolverOptions& options, MaxMinResult& out) {
  if (sc.J == 0) return true;
  const MaxEnergyResult q = solve_max_energy(sc, options.ipm);
  if (q.status != SolveStatus::Optimal) {
    out.status = RunStatus::NumericalLimit;
    out.message = std::string("maximum-energy program: ") + to_string(q.status);
    return false;
  }
  out.q_max_w = q.q_max_w;
  if (sc.q_min_w > (1.0 - options.feasibility_margin) * q.q_max_w) {
    out.status = RunStatus::Infeasible;
    out.message = "RF energy target exceeds the harvestable maximum";
    return false;
  }
  return true;
}

}  // namespace

MaxMinResult max_min_beamforming(const Scenario& sc, const SolverOptions& options) {
  sc.validate();
  options.validate();
  if (sc.K == 0) throw std::invalid_argument("max_min_beamforming: no data receivers");
  MaxMinResult gate;
  if (!energy_gate(sc, options, gate)) return gate;
  MaxMinResult out = run_reweighting(sc, options, PeakPowerShape::joint(sc));
  out.q_max_w = gate.q_max_w;
  return out;
}

MaxMinResult separate_beamforming_baseline(const Scenario& sc, const SolverOptions& options) {
  sc.validate();
  options.validate();
  if (sc.K == 0) throw std::invalid_argument("separate_beamforming_baseline: no data receivers");
  MaxMinResult gate;
  if (!energy_gate(sc, options, gate)) return gate;

  const int n = sc.antennas_total();
  std::vector<CVectorXd> v(sc.J, CVectorXd::Zero(n));
  if (sc.J > 0 && sc.q_min_w > 0) {
    const double sigma = std::sqrt(sc.sigma2_w);
    ConicProgram p;
    for (int j = 0; j < sc.J; ++j) p.add_psd_block("V" + std::to_string(j), n);
    for (int j = 0; j < sc.J; ++j) {
      LinearConstraint c;
      c.name = "energy_" + std::to_string(j);
      const auto G = HermitianMatrixXd::Outer(sc.g[j] / sigma);
      for (int i = 0; i < sc.J; ++i) c.blocks.push_back({i, G});
      c.relation = Relation::GreaterEqual;
      c.rhs = sc.q_min_w / (sc.eta * sc.sigma2_w);
      p.add_constraint(std::move(c));
    }
    for (int l = 0; l < sc.L; ++l) {
      LinearConstraint c;
      c.name = "power_" + std::to_string(l);
      const auto al = selection_matrix(l, sc.L, sc.M);
      for (int i = 0; i < sc.J; ++i) c.blocks.push_back({i, al});
      c.relation = Relation::LessEqual;
      c.rhs = sc.energy_w[l];
      p.add_constraint(std::move(c));
    }
    std::vector<BlockTerm> objective;
    for (int j = 0; j < sc.J; ++j) objective.push_back({j, HermitianMatrixXd::Identity(n)});
    p.set_objective(Sense::Minimize, std::move(objective), {});
    const ConicSolution sol = solve(p, options.ipm);
    if (sol.status == SolveStatus::Infeasible) {
      gate.status = RunStatus::Infeasible;
      gate.message = "energy-beam stage is infeasible";
      return gate;
    }
    if (sol.status != SolveStatus::Optimal) {
      gate.status = RunStatus::NumericalLimit;
      gate.message = std::string("energy-beam stage: ") + to_string(sol.status);
      return gate;
    }
    v = energy_beams_from_sum(std::vector<HermitianMatrixXd>(sol.blocks.begin(), sol.blocks.begin() + sc.J), sc.J, n);
  }

  PeakPowerShape shape = PeakPowerShape::joint(sc);
  shape.energy_blocks = false;
  shape.energy_rows = false;
  shape.fixed_energy_beams = v;
  Beams energy_only;
  energy_only.v = v;
  std::vector<int> usable;
  for (int l = 0; l < sc.L; ++l) {
    const double residual = sc.energy_w[l] - rrh_power(l, energy_only, sc.M);
    shape.budgets_w[l] = std::max(0.0, residual);
    if (residual > 1e-9 * std::max(1.0, sc.energy_w[l])) usable.push_back(l);
  }
  if (usable.empty()) {
    gate.status = RunStatus::Infeasible;
    gate.message = "energy beams exhaust every RRH budget";
    return gate;
  }
  for (auto& s : shape.dr_support) s = usable;

  MaxMinResult out = run_reweighting(sc, options, shape);
  out.q_max_w = gate.q_max_w;
  return out;
}

}  // namespace cran
