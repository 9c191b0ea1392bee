#include "cran/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cran {

namespace {

double violation(double slack, double rhs) {
  const double scale = rhs != 0.0 ? std::abs(rhs) : 1.0;
  return std::max(0.0, -slack) / scale;
}

nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

ConstraintReport check_solution(const Scenario& sc, const Beams& beams, double tol, double assoc_threshold) {
  if (static_cast<int>(beams.w.size()) != sc.K || static_cast<int>(beams.v.size()) != sc.J) {
    throw std::invalid_argument("check_solution: beam count does not match the scenario");
  }
  ConstraintReport r;
  r.tolerance = tol;
  std::vector<double> rates;
  for (int k = 0; k < sc.K; ++k) rates.push_back(rate(k, beams, sc));
  r.min_rate = rates.empty() ? 0.0 : *std::min_element(rates.begin(), rates.end());

  for (int j = 0; j < sc.J; ++j) {
    r.energy_slack_w.push_back(harvested_energy(j, beams, sc) - sc.q_min_w);
    r.worst_violation = std::max(r.worst_violation, violation(r.energy_slack_w.back(), sc.q_min_w));
  }
  for (int l = 0; l < sc.L; ++l) {
    const double c = sc.capacity[l];
    if (std::isfinite(c)) {
      r.fronthaul_slack.push_back(c - fronthaul_usage(l, beams, rates, sc.M, assoc_threshold));
      r.worst_violation = std::max(r.worst_violation, violation(r.fronthaul_slack.back(), c));
    } else {
      r.fronthaul_slack.push_back(std::numeric_limits<double>::infinity());
    }
    r.power_slack_w.push_back(sc.energy_w[l] - rrh_power(l, beams, sc.M));
    r.worst_violation = std::max(r.worst_violation, violation(r.power_slack_w.back(), sc.energy_w[l]));
  }
  r.pass = r.worst_violation <= tol;
  return r;
}

ConstraintReport check_solution(const Scenario& sc, const BeamformingSolution& solution, double tol) {
  return check_solution(sc, solution.beams, tol, solution.assoc_threshold);
}

nlohmann::json ConstraintReport::to_json() const {
  nlohmann::json fh = nlohmann::json::array();
  for (double s : fronthaul_slack) fh.push_back(finite_or_null(s));
  return {{"energy_slack_w", energy_slack_w},
          {"fronthaul_slack_bps_hz", fh},
          {"power_slack_w", power_slack_w},
          {"min_rate_bps_hz", min_rate},
          {"worst_relative_violation", worst_violation},
          {"tolerance", tolerance},
          {"pass", pass}};
}

RankReport rank_one_report(const std::vector<HermitianMatrixXd>& W, const std::vector<HermitianMatrixXd>& V,
                           double rel_tol, double negligible_rel) {
  struct Spectrum {
    double l1, l2;
  };
  auto spectrum = [](const HermitianMatrixXd& a) {
    const auto e = hermitian_eig(a);
    const Eigen::Index n = e.eigenvalues.size();
    const double l1 = n > 0 ? std::max(0.0, e.eigenvalues(0)) : 0.0;
    const double l2 = n > 1 ? std::max(0.0, e.eigenvalues(1)) : 0.0;
    return Spectrum{l1, l2};
  };
  std::vector<Spectrum> sw, sv;
  double largest = 0.0;
  for (const auto& a : W) {
    sw.push_back(spectrum(a));
    largest = std::max(largest, sw.back().l1);
  }
  for (const auto& a : V) {
    sv.push_back(spectrum(a));
    largest = std::max(largest, sv.back().l1);
  }

  RankReport r;
  int total = 0, rank_one = 0;
  auto classify = [&](const HermitianMatrixXd& a, const Spectrum& s) {
    BlockRank b;
    if (s.l1 <= negligible_rel * largest) {
      b.negligible = true;
    } else {
      b.rank = numerical_rank(a, rel_tol);
      b.ratio = s.l2 / s.l1;
    }
    ++total;
    if (b.rank <= 1) ++rank_one;
    return b;
  };
  for (std::size_t i = 0; i < W.size(); ++i) r.w.push_back(classify(W[i], sw[i]));
  for (std::size_t i = 0; i < V.size(); ++i) r.v.push_back(classify(V[i], sv[i]));
  r.rank_one_fraction = total > 0 ? static_cast<double>(rank_one) / total : 1.0;
  return r;
}

nlohmann::json RankReport::to_json() const {
  auto list = [](const std::vector<BlockRank>& blocks) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& b : blocks) a.push_back({{"rank", b.rank}, {"ratio", b.ratio}, {"negligible", b.negligible}});
    return a;
  };
  return {{"w", list(w)}, {"v", list(v)}, {"rank_one_fraction", rank_one_fraction}};
}

ComplementarityReport complementarity_report(const ConicProgram& program, const ConicSolution& solution,
                                             double rel_tol) {
  ComplementarityReport r;
  r.bound = rel_tol * (1.0 + std::abs(solution.objective_value));
  r.pass = solution.status == SolveStatus::Optimal;
  if (solution.blocks.size() != program.blocks().size()) {
    throw std::invalid_argument("complementarity_report: block count does not match the program");
  }
  const std::vector<HermitianMatrixXd> slacks = assemble_dual_slacks(program, solution.duals);
  for (std::size_t b = 0; b < slacks.size(); ++b) {
    r.traces.push_back(trace_inner(solution.blocks[b], slacks[b]));
    if (!(std::abs(r.traces.back()) <= r.bound)) r.pass = false;
  }
  return r;
}

nlohmann::json ComplementarityReport::to_json() const {
  return {{"traces", traces}, {"bound", bound}, {"pass", pass}};
}

}  // namespace cran
