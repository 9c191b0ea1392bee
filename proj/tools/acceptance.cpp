// Acceptance suite: one PASS/FAIL line per criterion, exit code 0 only when
// every selected criterion passes. `--quick` shrinks trial counts and grids so
// the suite fits in a test run; the default sizes are the reference ones.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "cran/cli.hpp"
#include "cran/optimizer.hpp"
#include "cran/sdp.hpp"
#include "cran/verify.hpp"

using namespace cran;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Settings {
  bool quick = false;
  int workers = 1;
  std::uint64_t seed = 2024;
  std::string out_dir;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

/// min t with a free scalar t and tI - A = S, S psd; the optimum is lambda_max(A).
ConicProgram lambda_max_epigraph(const HermitianMatrixXd& a) {
  ConicProgram p;
  const int n = static_cast<int>(a.dim());
  const int s = p.add_psd_block("S", n);
  const int t = p.add_scalar("t", ScalarSign::Free);
  auto add = [&](const CMatrixXd& e) {
    const HermitianMatrixXd eh(e);
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

Scenario default_scenario(std::uint64_t seed, double capacity = kInfiniteCapacity, double q_min_uw = 1.0) {
  ScenarioConfig cfg;
  cfg.capacity.assign(cfg.L, capacity);
  cfg.q_min_w = q_min_uw * 1e-6;
  return build_scenario(cfg, seed);
}

// ---------------------------------------------------------------------------

Outcome criterion_oracle(const Settings& s) {
  std::mt19937_64 rng(s.seed);
  std::uniform_int_distribution<int> dim(1, 6);
  std::normal_distribution<double> nd;
  const auto t0 = Clock::now();
  double worst = 0.0;
  int failed = 0;
  const int count = 100;
  for (int i = 0; i < count; ++i) {
    const int n = dim(rng);
    CMatrixXd m(n, n);
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < n; ++r) m(r, c) = {nd(rng), nd(rng)};
    const HermitianMatrixXd a(m);
    const ConicSolution sol = solve(lambda_max_epigraph(a));
    const double err = std::abs(sol.objective_value - hermitian_eig(a).eigenvalues(0));
    if (sol.status != SolveStatus::Optimal || !(err <= 1e-6)) ++failed;
    if (sol.status == SolveStatus::Optimal) worst = std::max(worst, err);
  }
  const double elapsed = seconds_since(t0);
  return {failed == 0 && elapsed < 60.0, std::to_string(count) + " matrices, worst |t - lambda_max| = " + fmt(worst) +
                                             ", failures " + std::to_string(failed) + ", " + fmt(elapsed, 3) + " s"};
}

Outcome criterion_bisection(const Settings& s) {
  const int count = s.quick ? 5 : 20;
  const SolverOptions opts;
  int converged = 0, bad_h = 0, bad_trace = 0;
  double worst_h = 0.0, worst_mono = 0.0;
  for (int i = 0; i < count; ++i) {
    const Scenario sc = default_scenario(derive_seed(s.seed + 1, i));
    const BisectionResult b = bisection_gamma_max(sc, OuterState::initial(sc), opts);
    if (b.outcome != BisectionOutcome::PowerLimited) continue;
    ++converged;
    worst_h = std::max(worst_h, std::abs(b.h - 1.0));
    if (std::abs(b.h - 1.0) > 1e-3) ++bad_h;
    std::vector<BisectionStep> steps = b.trace;
    std::stable_sort(steps.begin(), steps.end(), [](const auto& a, const auto& c) { return a.gamma < c.gamma; });
    double prev = 0.0;
    bool mono = true;
    for (const BisectionStep& st : steps) {
      const double h = st.status == SolveStatus::Optimal ? st.h : std::numeric_limits<double>::infinity();
      if (std::isfinite(prev) && h < prev) {
        worst_mono = std::max(worst_mono, prev - h);
        if (prev - h > 1e-8) mono = false;
      }
      prev = std::max(prev, h);
    }
    if (!mono) ++bad_trace;
  }
  return {converged > 0 && bad_h == 0 && bad_trace == 0,
          std::to_string(converged) + "/" + std::to_string(count) + " power-limited, max |h - 1| = " + fmt(worst_h) +
              ", worst trace decrease " + fmt(worst_mono) + ", traces violating " + std::to_string(bad_trace)};
}

Outcome criterion_rank_one(const Settings& s) {
  const int count = s.quick ? 10 : 50;
  const SolverOptions opts;
  int blocks = 0, rank_one = 0, instances = 0, sinr_fail = 0;
  double worst_ratio = 0.0;
  for (int i = 0; i < count; ++i) {
    // Alternate plain instances with reweighted ones under a finite fronthaul.
    const bool reweighted = i % 2 == 1;
    const Scenario sc = default_scenario(derive_seed(s.seed + 2, i), reweighted ? 20.0 : kInfiniteCapacity);
    OuterState state = OuterState::initial(sc);
    BisectionResult b = bisection_gamma_max(sc, state, opts);
    if (reweighted && !b.W.empty()) {
      state.beta = update_weights(b.W, sc.L, sc.M, opts.tau);
      state.rhat = update_rates(b.W, b.V, sc);
      state.iteration = 1;
      b = bisection_gamma_max(sc, state, opts);
    }
    if (b.W.empty()) continue;
    ++instances;
    const RankReport r = rank_one_report(b.W, b.V, 1e-4);
    for (const auto* list : {&r.w, &r.v}) {
      for (const BlockRank& br : *list) {
        ++blocks;
        if (br.negligible || br.ratio <= 1e-4) ++rank_one;
        worst_ratio = std::max(worst_ratio, br.ratio);
      }
    }
    const BeamformingSolution sol = evaluate(b.beams, sc);
    for (double v : sol.sinr) {
      if (v < (1.0 - 1e-3) * b.gamma_max) {
        ++sinr_fail;
        break;
      }
    }
  }
  const double frac = blocks > 0 ? static_cast<double>(rank_one) / blocks : 0.0;
  return {instances == count && frac >= 0.95 && sinr_fail == 0,
          std::to_string(instances) + " instances, rank-one blocks " + std::to_string(rank_one) + "/" +
              std::to_string(blocks) + " (" + fmt(100 * frac, 4) + "%), worst lambda2/lambda1 " + fmt(worst_ratio) +
              ", instances below the SINR target " + std::to_string(sinr_fail)};
}

Outcome criterion_audit(const Settings& s) {
  const int seeds = s.quick ? 2 : 6;
  const SolverOptions opts;
  int audited = 0, failed = 0;
  double worst = 0.0;
  for (int i = 0; i < seeds; ++i) {
    for (double cap : {10.0, 30.0, kInfiniteCapacity}) {
      const Scenario sc = default_scenario(derive_seed(s.seed + 3, i), cap);
      for (bool joint : {true, false}) {
        const MaxMinResult r = joint ? max_min_beamforming(sc, opts) : separate_beamforming_baseline(sc, opts);
        if (r.status != RunStatus::Converged && r.status != RunStatus::NotConverged) continue;
        ++audited;
        const ConstraintReport rep = check_solution(sc, r.solution, 1e-6);
        worst = std::max(worst, rep.worst_violation);
        if (!rep.pass) ++failed;
      }
    }
  }
  return {audited > 0 && failed == 0, std::to_string(audited) + " solutions audited, failures " +
                                          std::to_string(failed) + ", worst relative violation " + fmt(worst)};
}

// ---------------------------------------------------------------------------
// Trend suites

struct SuiteRun {
  ResultTable table;
  double seconds = 0.0;
};

SweepConfig trend_config(const Settings& s, SweepVariable var, std::vector<double> values) {
  SweepConfig c;
  c.variable = var;
  c.values = std::move(values);
  c.trials = s.quick ? 2 : 20;
  c.seed = s.seed + 100;
  return c;
}

void save(const Settings& s, const std::string& name, const ResultTable& table) {
  if (s.out_dir.empty()) return;
  std::filesystem::create_directories(s.out_dir);
  std::ofstream(std::filesystem::path(s.out_dir) / (name + ".csv")) << to_csv(table);
}

ResultTable sweep(const Settings& s, const SweepConfig& c, const std::string& name) {
  ResultTable t = run_sweep(c, s.workers);
  save(s, name, t);
  return t;
}

bool ok_status(const ResultRow& r) { return r.status == "converged" || r.status == "not_converged"; }

/// Trend curves compare means over the trials that succeeded at every point
/// of every curve in the suite, so a curve never moves because its sample did.
struct Curves {
  std::set<int> common;
  int total = 0;

  explicit Curves(const std::vector<const ResultTable*>& tables) {
    std::map<int, bool> good;
    for (const ResultTable* t : tables) {
      for (const ResultRow& r : *t) {
        if (r.kind != "trial") continue;
        auto it = good.emplace(*r.trial, true).first;
        it->second = it->second && ok_status(r);
      }
    }
    total = static_cast<int>(good.size());
    for (const auto& [trial, g] : good)
      if (g) common.insert(trial);
  }

  std::vector<double> mean(const ResultTable& t, const std::vector<double>& values, SweepVariable var,
                           const std::string& strategy, std::optional<double> ResultRow::*metric) const {
    std::vector<double> out;
    for (double v : values) {
      double sum = 0.0;
      int n = 0;
      for (const ResultRow& r : t) {
        const double key = var == SweepVariable::QMin ? r.q_min_uw
                           : var == SweepVariable::Energy ? r.energy_w
                                                          : r.capacity_bps_hz;
        if (r.kind != "trial" || r.strategy != strategy || key != v || !common.count(*r.trial)) continue;
        sum += *(r.*metric);
        ++n;
      }
      out.push_back(n > 0 ? sum / n : std::nan(""));
    }
    return out;
  }

  std::string sample() const { return std::to_string(common.size()) + "/" + std::to_string(total) + " trials"; }
};

std::string curve_text(const std::vector<double>& c) {
  std::string s = "[";
  for (std::size_t i = 0; i < c.size(); ++i) s += (i ? " " : "") + fmt(c[i]);
  return s + "]";
}

bool non_increasing(const std::vector<double>& c, double slack) {
  for (std::size_t i = 1; i < c.size(); ++i)
    if (!(c[i] <= c[i - 1] + slack)) return false;
  return !c.empty();
}

bool non_decreasing(const std::vector<double>& c, double slack) {
  for (std::size_t i = 1; i < c.size(); ++i)
    if (!(c[i] >= c[i - 1] - slack)) return false;
  return !c.empty();
}

bool dominates(const std::vector<double>& hi, const std::vector<double>& lo, double slack) {
  for (std::size_t i = 0; i < hi.size(); ++i)
    if (!(hi[i] >= lo[i] - slack)) return false;
  return !hi.empty();
}

constexpr double kSlack = 1e-3;

Outcome criterion_rate_vs_qmin(const Settings& s, double& seconds) {
  const auto t0 = Clock::now();
  const std::vector<double> q = s.quick ? std::vector<double>{1, 8} : std::vector<double>{1, 4, 8};
  const std::vector<double> caps{10, 30};
  std::vector<ResultTable> tables;
  for (double cap : caps) {
    SweepConfig c = trend_config(s, SweepVariable::QMin, q);
    c.scenario.capacity.assign(c.scenario.L, cap);
    tables.push_back(sweep(s, c, "rate_vs_qmin_c" + fmt(cap)));
  }
  seconds = seconds_since(t0);
  const Curves curves({&tables[0], &tables[1]});
  std::vector<std::vector<double>> rate;
  for (const auto& t : tables) rate.push_back(curves.mean(t, q, SweepVariable::QMin, "joint", &ResultRow::min_rate_bps_hz));
  const bool pass = !curves.common.empty() && non_increasing(rate[0], kSlack) && non_increasing(rate[1], kSlack) &&
                    dominates(rate[1], rate[0], kSlack);
  return {pass, curves.sample() + "; C=10: " + curve_text(rate[0]) + ", C=30: " + curve_text(rate[1]) +
                    " over Q_min " + curve_text(q) + " uW"};
}

Outcome criterion_rate_vs_energy(const Settings& s, double& seconds) {
  const auto t0 = Clock::now();
  const std::vector<double> e = s.quick ? std::vector<double>{1, 10} : std::vector<double>{1, 5, 10};
  std::vector<ResultTable> tables;
  for (double cap : {30.0, kInfiniteCapacity}) {
    SweepConfig c = trend_config(s, SweepVariable::Energy, e);
    c.scenario.capacity.assign(c.scenario.L, cap);
    tables.push_back(sweep(s, c, std::isinf(cap) ? "rate_vs_energy_cinf" : "rate_vs_energy_c30"));
  }
  seconds = seconds_since(t0);
  const Curves curves({&tables[0], &tables[1]});
  const auto finite = curves.mean(tables[0], e, SweepVariable::Energy, "joint", &ResultRow::min_rate_bps_hz);
  const auto unlimited = curves.mean(tables[1], e, SweepVariable::Energy, "joint", &ResultRow::min_rate_bps_hz);
  const bool pass = !curves.common.empty() && non_decreasing(finite, kSlack) && non_decreasing(unlimited, kSlack) &&
                    dominates(unlimited, finite, kSlack);
  return {pass, curves.sample() + "; C=30: " + curve_text(finite) + ", C=inf: " + curve_text(unlimited) + " over E_L " +
                    curve_text(e) + " W"};
}

Outcome criterion_association(const Settings& s, double& seconds) {
  const auto t0 = Clock::now();
  const std::vector<double> caps = s.quick ? std::vector<double>{10, 50} : std::vector<double>{10, 30, 50};
  const std::vector<double> q{1, 8};
  std::vector<ResultTable> tables;
  for (double qm : q) {
    SweepConfig c = trend_config(s, SweepVariable::Capacity, caps);
    c.scenario.q_min_w = qm * 1e-6;
    tables.push_back(sweep(s, c, "assoc_vs_capacity_q" + fmt(qm)));
  }
  seconds = seconds_since(t0);
  const Curves curves({&tables[0], &tables[1]});
  std::vector<std::vector<double>> assoc;
  for (const auto& t : tables) {
    assoc.push_back(curves.mean(t, caps, SweepVariable::Capacity, "joint", &ResultRow::assoc_rrhs_per_dr));
  }
  const bool pass = !curves.common.empty() && non_decreasing(assoc[0], kSlack) && non_decreasing(assoc[1], kSlack) &&
                    dominates(assoc[1], assoc[0], kSlack);
  return {pass, curves.sample() + "; RRHs per DR at Q_min=1 uW: " + curve_text(assoc[0]) + ", Q_min=8 uW: " +
                    curve_text(assoc[1]) + " over C_L " + curve_text(caps)};
}

Outcome criterion_joint_vs_separate(const Settings& s, double& seconds) {
  const auto t0 = Clock::now();
  const std::vector<double> q = s.quick ? std::vector<double>{1, 8} : std::vector<double>{1, 4, 8};
  SweepConfig c = trend_config(s, SweepVariable::QMin, q);
  c.scenario.energy_w.assign(c.scenario.L, 10.0);
  c.scenario.capacity.assign(c.scenario.L, 30.0);
  c.strategies = {Strategy::Joint, Strategy::Separate};
  const ResultTable table = sweep(s, c, "joint_vs_separate");
  seconds = seconds_since(t0);

  // Pairs where both strategies returned a solution; gaps are per pair.
  std::map<std::pair<double, int>, std::map<std::string, double>> rates;
  for (const ResultRow& r : table) {
    if (r.kind == "trial" && ok_status(r)) rates[{r.q_min_uw, *r.trial}][r.strategy] = *r.min_rate_bps_hz;
  }
  int pairs = 0, wins = 0;
  std::map<double, std::pair<double, int>> gap;
  for (const auto& [key, m] : rates) {
    if (m.size() != 2) continue;
    ++pairs;
    const double d = m.at("joint") - m.at("separate");
    if (d >= -kSlack) ++wins;
    gap[key.first].first += d;
    gap[key.first].second += 1;
  }
  std::vector<double> mean_gap;
  bool gaps_ok = true;
  for (double v : q) {
    const auto it = gap.find(v);
    const double g = it == gap.end() ? std::nan("") : it->second.first / it->second.second;
    mean_gap.push_back(g);
    if (!(g >= 0.0)) gaps_ok = false;
  }
  const double frac = pairs > 0 ? static_cast<double>(wins) / pairs : 0.0;
  return {pairs > 0 && frac >= 0.95 && gaps_ok, "joint >= separate in " + std::to_string(wins) + "/" +
                                                    std::to_string(pairs) + " pairs, mean gap " + curve_text(mean_gap) +
                                                    " over Q_min " + curve_text(q) + " uW"};
}

// ---------------------------------------------------------------------------

int run_cli_capture(std::vector<std::string> words, std::string& out_text) {
  words.insert(words.begin(), "cran");
  std::vector<char*> argv;
  for (auto& w : words) argv.push_back(w.data());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  out_text = out.str();
  return code;
}

Outcome criterion_infeasible(const Settings& s) {
  const int count = s.quick ? 2 : 5;
  const SolverOptions opts;
  int gated = 0, feas_ok = 0;
  double worst_rel = 0.0;
  const auto dir = std::filesystem::temp_directory_path() / "cran_acceptance";
  std::filesystem::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    SweepConfig c;
    c.scenario.capacity.assign(c.scenario.L, 20.0);
    c.seed = s.seed + 4;
    const Scenario base = build_scenario(c.scenario, trial_seed(c.seed, i));
    const double q_max = solve_max_energy(base, opts.ipm).q_max_w;
    Scenario sc = base;
    sc.q_min_w = 1.5 * q_max;
    bool all = true;
    for (bool joint : {true, false}) {
      const MaxMinResult r = joint ? max_min_beamforming(sc, opts) : separate_beamforming_baseline(sc, opts);
      all = all && r.status == RunStatus::Infeasible;
    }
    if (all) ++gated;

    std::ofstream(dir / "config.json") << config_to_json(c).dump();
    std::string out;
    const int code = run_cli_capture(
        {"feasibility", "--config", (dir / "config.json").string(), "--trial", std::to_string(i)}, out);
    if (code == 0) {
      const double reported = nlohmann::json::parse(out)["q_max_uw"].get<double>() * 1e-6;
      const double rel = std::abs(reported - q_max) / std::max(q_max, 1e-300);
      worst_rel = std::max(worst_rel, rel);
      if (rel <= 1e-6) ++feas_ok;
    }
  }
  std::filesystem::remove_all(dir);
  return {gated == count && feas_ok == count,
          "Infeasible at 1.5 q_max for " + std::to_string(gated) + "/" + std::to_string(count) +
              " realizations (joint and separate), feasibility command within 1e-6 for " + std::to_string(feas_ok) +
              "/" + std::to_string(count) + " (worst relative difference " + fmt(worst_rel) + ")"};
}

Outcome criterion_determinism(const Settings& s) {
  SweepConfig c;
  c.variable = SweepVariable::QMin;
  c.values = {0.5, 2.0};
  c.trials = 2;
  c.seed = s.seed + 5;
  c.scenario.L = 2;
  c.scenario.K = 3;
  c.scenario.J = 2;
  c.scenario.energy_w.assign(2, 5.0);
  c.scenario.capacity.assign(2, 15.0);
  c.strategies = {Strategy::Joint, Strategy::Separate};
  const std::string a = to_csv(run_sweep(c, 1));
  const std::string b = to_csv(run_sweep(c, std::max(2, s.workers)));

  const auto dir = std::filesystem::temp_directory_path() / "cran_acceptance_det";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "config.json") << config_to_json(c).dump();
  std::string ignored;
  bool cli_same = true;
  std::string first;
  for (int rep = 0; rep < 2; ++rep) {
    const auto path = dir / ("run" + std::to_string(rep) + ".csv");
    run_cli_capture({"sweep", "--config", (dir / "config.json").string(), "--out", path.string()}, ignored);
    std::ifstream in(path, std::ios::binary);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (rep == 0) first = text;
    cli_same = cli_same && text == a;
  }
  std::filesystem::remove_all(dir);
  return {a == b && cli_same && !a.empty(), std::string("in-process rerun ") + (a == b ? "identical" : "DIFFERS") +
                                                ", CLI reruns " + (cli_same ? "identical" : "DIFFER") + " (" +
                                                std::to_string(a.size()) + " bytes)"};
}

Outcome criterion_runtime(const Settings& s, const std::map<int, double>& suite_seconds) {
  const Scenario sc = default_scenario(derive_seed(s.seed + 6, 0), 20.0);
  const auto t0 = Clock::now();
  const MaxMinResult r = max_min_beamforming(sc);
  const double single = seconds_since(t0);
  bool pass = single < 30.0;
  std::string detail = "one run at default scale (C=20, " + std::string(to_string(r.status)) + ", " +
                       std::to_string(r.outer_iterations) + " outer iterations) " + fmt(single, 3) + " s";
  for (const auto& [k, sec] : suite_seconds) {
    detail += "; suite " + std::to_string(k) + " " + fmt(sec / 60.0, 3) + " min";
    pass = pass && sec < 30.0 * 60.0;
  }
  if (suite_seconds.empty()) detail += "; no trend suite selected";
  if (s.quick) detail += " (quick grids)";
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  Settings s;
  std::vector<int> only;
  CLI::App app{"Acceptance suite"};
  app.add_flag("--quick", s.quick, "Small trial counts and grids");
  app.add_option("--workers", s.workers, "Concurrent trials in the sweeps")->check(CLI::PositiveNumber);
  app.add_option("--seed", s.seed, "Base seed");
  app.add_option("--only", only, "Criteria to run (default: all)")->check(CLI::Range(1, 11));
  app.add_option("--out-dir", s.out_dir, "Write the trend sweep tables here as CSV");
  CLI11_PARSE(app, argc, argv);

  std::set<int> selected(only.begin(), only.end());
  if (selected.empty())
    for (int k = 1; k <= 11; ++k) selected.insert(k);

  std::map<int, double> suite_seconds;
  auto timed_suite = [&](int k, Outcome (*f)(const Settings&, double&)) {
    return [&s, &suite_seconds, k, f]() {
      double sec = 0.0;
      Outcome o = f(s, sec);
      suite_seconds[k] = sec;
      o.detail += " [" + fmt(sec, 4) + " s]";
      return o;
    };
  };
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, [&] { return criterion_oracle(s); }},
      {2, [&] { return criterion_bisection(s); }},
      {3, [&] { return criterion_rank_one(s); }},
      {4, [&] { return criterion_audit(s); }},
      {5, timed_suite(5, criterion_rate_vs_qmin)},
      {6, timed_suite(6, criterion_rate_vs_energy)},
      {7, timed_suite(7, criterion_association)},
      {8, timed_suite(8, criterion_joint_vs_separate)},
      {9, [&] { return criterion_infeasible(s); }},
      {10, [&] { return criterion_determinism(s); }},
      {11, [&] { return criterion_runtime(s, suite_seconds); }},
  };
  const char* names[] = {"",
                         "solver oracle",
                         "bisection bracketing",
                         "rank-one solutions",
                         "feasibility audit",
                         "rate vs energy target",
                         "rate vs green energy",
                         "associated RRHs",
                         "joint vs separate",
                         "infeasibility gate",
                         "determinism",
                         "runtime"};

  int failures = 0;
  for (const auto& [k, run] : criteria) {
    if (!selected.count(k)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << k << " " << (o.pass ? "PASS" : "FAIL") << "  " << names[k] << ": " << o.detail
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
