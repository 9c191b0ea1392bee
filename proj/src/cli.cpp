#include "cran/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "cran/verify.hpp"

namespace cran {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Strict JSON reading

std::string type_name(const json& v) { return v.type_name(); }

double read_number(const json& v, const std::string& path, bool allow_inf = false) {
  if (allow_inf && v.is_string() && v.get<std::string>() == "inf") return kInf;
  if (!v.is_number()) {
    throw ConfigError(path, std::string("expected a number") + (allow_inf ? " or \"inf\"" : "") + ", got " +
                                type_name(v));
  }
  return v.get<double>();
}

int read_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer, got " + type_name(v));
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError(path, "integer out of range");
  }
  return static_cast<int>(x);
}

std::uint64_t read_seed(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError(path, "expected a nonnegative integer");
}

std::string read_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string, got " + type_name(v));
  return v.get<std::string>();
}

/// Tracks which keys of an object were consumed and rejects the rest.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object, got " + type_name(j_));
  }

  template <typename F>
  void optional(const char* key, F&& f) {
    seen_.insert(key);
    if (j_.contains(key)) f(j_.at(key), path_ + "/" + key);
  }

  template <typename F>
  void required(const char* key, F&& f) {
    if (!j_.contains(key)) throw ConfigError(path_ + "/" + key, "missing required field");
    optional(key, std::forward<F>(f));
  }

  bool has(const char* key) const { return j_.contains(key); }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(path_ + "/" + item.key(), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

/// Scalar (broadcast to every RRH) or per-RRH array.
std::vector<double> read_per_rrh(const json& v, const std::string& path, bool allow_inf) {
  std::vector<double> out;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(read_number(v[i], path + "/" + std::to_string(i), allow_inf));
    if (out.empty()) throw ConfigError(path, "per-RRH array must not be empty");
  } else {
    out.push_back(read_number(v, path, allow_inf));
  }
  return out;
}

json number_or_inf(double x) { return std::isinf(x) && x > 0 ? json("inf") : json(x); }

// ---------------------------------------------------------------------------
// Formatting

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }
std::string fmt(const std::optional<int>& x) { return x ? std::to_string(*x) : std::string(); }

double parse_double(const std::string& s, const std::string& where) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  if (s == "nan") return std::nan("");
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw std::runtime_error(where + ": not a number: '" + s + "'");
  return x;
}

std::optional<double> parse_opt_double(const std::string& s, const std::string& where) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, where);
}

std::optional<int> parse_opt_int(const std::string& s, const std::string& where) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  int x = 0;
  try {
    x = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw std::runtime_error(where + ": not an integer: '" + s + "'");
  return x;
}

json opt_json(const std::optional<double>& x) { return x ? number_or_inf(*x) : json(nullptr); }
json opt_json(const std::optional<int>& x) { return x ? json(*x) : json(nullptr); }

std::optional<double> opt_from_json(const json& v, const std::string& where) {
  if (v.is_null()) return std::nullopt;
  return read_number(v, where, true);
}

std::optional<int> opt_int_from_json(const json& v, const std::string& where) {
  if (v.is_null()) return std::nullopt;
  return read_int(v, where);
}

json cvec_to_json(const CVectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v(i).real(), v(i).imag()});
  return a;
}

CVectorXd cvec_from_json(const json& a, const std::string& path) {
  if (!a.is_array()) throw ConfigError(path, "expected an array of [re, im] pairs");
  CVectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string p = path + "/" + std::to_string(i);
    if (!a[i].is_array() || a[i].size() != 2) throw ConfigError(p, "expected [re, im]");
    v(static_cast<Eigen::Index>(i)) = {read_number(a[i][0], p + "/0"), read_number(a[i][1], p + "/1")};
  }
  return v;
}

std::vector<CVectorXd> cvecs_from_json(const json& a, const std::string& path) {
  if (!a.is_array()) throw ConfigError(path, "expected an array of vectors");
  std::vector<CVectorXd> out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(cvec_from_json(a[i], path + "/" + std::to_string(i)));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

const char* to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::QMin: return "q_min_uw";
    case SweepVariable::Energy: return "energy_w";
    case SweepVariable::Capacity: return "capacity_bps_hz";
  }
  return "unknown";
}

const char* to_string(Strategy s) { return s == Strategy::Joint ? "joint" : "separate"; }

void SweepConfig::validate() const {
  const ScenarioConfig& s = scenario;
  if (s.L <= 0) throw ConfigError("/scenario/rrhs", "must be positive");
  if (s.M <= 0) throw ConfigError("/scenario/antennas_per_rrh", "must be positive");
  if (s.K < 0) throw ConfigError("/scenario/data_receivers", "must be nonnegative");
  if (s.J < 0) throw ConfigError("/scenario/energy_receivers", "must be nonnegative");
  if (!(s.layout.user_radius_m > 0)) throw ConfigError("/scenario/user_radius_m", "must be positive");
  if (!(s.layout.rrh_radius_m >= 0)) throw ConfigError("/scenario/rrh_radius_m", "must be nonnegative");
  if (!(s.layout.exclusion_m >= 0)) throw ConfigError("/scenario/exclusion_m", "must be nonnegative");
  if (!(s.path_loss_exponent > 0)) throw ConfigError("/scenario/path_loss_exponent", "must be positive");
  if (static_cast<int>(s.energy_w.size()) != s.L) throw ConfigError("/scenario/energy_w", "needs one entry per RRH");
  for (std::size_t l = 0; l < s.energy_w.size(); ++l) {
    if (!(s.energy_w[l] >= 0) || !std::isfinite(s.energy_w[l])) {
      throw ConfigError("/scenario/energy_w/" + std::to_string(l), "must be finite and nonnegative");
    }
  }
  if (static_cast<int>(s.capacity.size()) != s.L) {
    throw ConfigError("/scenario/capacity_bps_hz", "needs one entry per RRH");
  }
  for (std::size_t l = 0; l < s.capacity.size(); ++l) {
    if (!(s.capacity[l] > 0)) throw ConfigError("/scenario/capacity_bps_hz/" + std::to_string(l), "must be positive");
  }
  if (!(s.q_min_w >= 0) || !std::isfinite(s.q_min_w)) throw ConfigError("/scenario/q_min_uw", "must be finite and nonnegative");
  if (!(s.sigma2_w > 0)) throw ConfigError("/scenario/noise_w", "must be positive");
  if (!(s.eta > 0 && s.eta < 1)) throw ConfigError("/scenario/efficiency", "must lie in (0, 1)");
  try {
    solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("/solver", e.what());
  }
  if (values.empty()) throw ConfigError("/sweep/values", "must not be empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::string p = "/sweep/values/" + std::to_string(i);
    const double v = values[i];
    const bool ok = variable == SweepVariable::Capacity ? v > 0 : (v >= 0 && std::isfinite(v));
    if (!ok) throw ConfigError(p, "out of range for " + std::string(to_string(variable)));
    if (i > 0 && !(v > values[i - 1])) throw ConfigError(p, "values must be strictly increasing");
  }
  if (trials < 1) throw ConfigError("/trials", "must be at least 1");
  if (strategies.empty()) throw ConfigError("/strategies", "must not be empty");
  for (std::size_t i = 1; i < strategies.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (strategies[i] == strategies[k]) throw ConfigError("/strategies/" + std::to_string(i), "duplicate strategy");
    }
  }
}

SweepConfig parse_config(const json& j, bool require_sweep) {
  SweepConfig c;
  ObjectReader top(j, "");
  std::optional<std::vector<double>> energy, capacity;

  top.optional("scenario", [&](const json& v, const std::string& path) {
    ObjectReader r(v, path);
    ScenarioConfig& s = c.scenario;
    r.optional("rrhs", [&](const json& x, const std::string& p) { s.L = read_int(x, p); });
    r.optional("antennas_per_rrh", [&](const json& x, const std::string& p) { s.M = read_int(x, p); });
    r.optional("data_receivers", [&](const json& x, const std::string& p) { s.K = read_int(x, p); });
    r.optional("energy_receivers", [&](const json& x, const std::string& p) { s.J = read_int(x, p); });
    r.optional("rrh_radius_m", [&](const json& x, const std::string& p) { s.layout.rrh_radius_m = read_number(x, p); });
    r.optional("user_radius_m", [&](const json& x, const std::string& p) { s.layout.user_radius_m = read_number(x, p); });
    r.optional("exclusion_m", [&](const json& x, const std::string& p) { s.layout.exclusion_m = read_number(x, p); });
    r.optional("path_loss_exponent", [&](const json& x, const std::string& p) { s.path_loss_exponent = read_number(x, p); });
    r.optional("energy_w", [&](const json& x, const std::string& p) { energy = read_per_rrh(x, p, false); });
    r.optional("capacity_bps_hz", [&](const json& x, const std::string& p) { capacity = read_per_rrh(x, p, true); });
    r.optional("q_min_uw", [&](const json& x, const std::string& p) { s.q_min_w = 1e-6 * read_number(x, p); });
    r.optional("noise_w", [&](const json& x, const std::string& p) { s.sigma2_w = read_number(x, p); });
    r.optional("efficiency", [&](const json& x, const std::string& p) { s.eta = read_number(x, p); });
    r.finish();
  });
  // Scalars broadcast over the RRH count, which may have changed from the default.
  const int L = c.scenario.L;
  auto broadcast = [&](const std::optional<std::vector<double>>& given, std::vector<double>& dst, double fallback,
                       const char* key) {
    if (!given) {
      dst.assign(std::max(L, 0), fallback);
    } else if (given->size() == 1 && !j.at("scenario").at(key).is_array()) {
      dst.assign(std::max(L, 0), given->front());
    } else {
      dst = *given;
    }
  };
  broadcast(energy, c.scenario.energy_w, ScenarioConfig{}.energy_w.front(), "energy_w");
  broadcast(capacity, c.scenario.capacity, ScenarioConfig{}.capacity.front(), "capacity_bps_hz");

  top.optional("solver", [&](const json& v, const std::string& path) {
    ObjectReader r(v, path);
    SolverOptions& o = c.solver;
    r.optional("tau_w", [&](const json& x, const std::string& p) { o.tau = read_number(x, p); });
    r.optional("eps_bisect", [&](const json& x, const std::string& p) { o.eps_bisect = read_number(x, p); });
    r.optional("eps_gamma_reweight", [&](const json& x, const std::string& p) { o.eps_gamma_reweight = read_number(x, p); });
    r.optional("eps_beta", [&](const json& x, const std::string& p) { o.eps_beta = read_number(x, p); });
    r.optional("eps_rate", [&](const json& x, const std::string& p) { o.eps_rate = read_number(x, p); });
    r.optional("max_bisect_iters", [&](const json& x, const std::string& p) { o.max_bisect_iters = read_int(x, p); });
    r.optional("max_outer_iters", [&](const json& x, const std::string& p) { o.max_outer_iters = read_int(x, p); });
    r.optional("assoc_threshold", [&](const json& x, const std::string& p) { o.assoc_threshold = read_number(x, p); });
    r.optional("feasibility_margin", [&](const json& x, const std::string& p) { o.feasibility_margin = read_number(x, p); });
    r.optional("ipm_max_iterations", [&](const json& x, const std::string& p) { o.ipm.max_iterations = read_int(x, p); });
    r.optional("ipm_gap_tol", [&](const json& x, const std::string& p) { o.ipm.gap_tol = read_number(x, p); });
    r.optional("ipm_feas_tol", [&](const json& x, const std::string& p) { o.ipm.feas_tol = read_number(x, p); });
    r.finish();
    if (o.ipm.max_iterations <= 0) throw ConfigError(path + "/ipm_max_iterations", "must be positive");
    if (!(o.ipm.gap_tol > 0)) throw ConfigError(path + "/ipm_gap_tol", "must be positive");
    if (!(o.ipm.feas_tol > 0)) throw ConfigError(path + "/ipm_feas_tol", "must be positive");
  });

  auto read_sweep = [&](const json& v, const std::string& path) {
    ObjectReader r(v, path);
    r.required("variable", [&](const json& x, const std::string& p) {
      const std::string name = read_string(x, p);
      if (name == "q_min_uw") {
        c.variable = SweepVariable::QMin;
      } else if (name == "energy_w") {
        c.variable = SweepVariable::Energy;
      } else if (name == "capacity_bps_hz") {
        c.variable = SweepVariable::Capacity;
      } else {
        throw ConfigError(p, "unknown sweep variable '" + name + "' (expected q_min_uw, energy_w or capacity_bps_hz)");
      }
    });
    r.required("values", [&](const json& x, const std::string& p) {
      if (!x.is_array()) throw ConfigError(p, "expected an array");
      for (std::size_t i = 0; i < x.size(); ++i) {
        c.values.push_back(read_number(x[i], p + "/" + std::to_string(i), c.variable == SweepVariable::Capacity));
      }
    });
    r.finish();
  };
  if (require_sweep) {
    top.required("sweep", read_sweep);
  } else {
    top.optional("sweep", read_sweep);
  }

  top.optional("trials", [&](const json& x, const std::string& p) { c.trials = read_int(x, p); });
  top.optional("seed", [&](const json& x, const std::string& p) { c.seed = read_seed(x, p); });
  top.optional("strategies", [&](const json& x, const std::string& p) {
    if (!x.is_array()) throw ConfigError(p, "expected an array");
    c.strategies.clear();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const std::string name = read_string(x[i], p + "/" + std::to_string(i));
      if (name == "joint") {
        c.strategies.push_back(Strategy::Joint);
      } else if (name == "separate") {
        c.strategies.push_back(Strategy::Separate);
      } else {
        throw ConfigError(p + "/" + std::to_string(i), "unknown strategy '" + name + "'");
      }
    }
  });
  top.optional("output", [&](const json& x, const std::string& p) { c.output = read_string(x, p); });
  top.finish();

  if (!require_sweep && c.values.empty()) c.values = {0.0};
  c.validate();
  return c;
}

SweepConfig load_config(const std::string& path, bool require_sweep) {
  std::ifstream in(path);
  if (!in) throw ConfigError("/", "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j, require_sweep);
}

json config_to_json(const SweepConfig& c) {
  const ScenarioConfig& s = c.scenario;
  json capacity = json::array();
  for (double x : s.capacity) capacity.push_back(number_or_inf(x));
  json values = json::array();
  for (double x : c.values) values.push_back(number_or_inf(x));
  json strategies = json::array();
  for (Strategy st : c.strategies) strategies.push_back(to_string(st));
  json out = {
      {"scenario",
       {{"rrhs", s.L},
        {"antennas_per_rrh", s.M},
        {"data_receivers", s.K},
        {"energy_receivers", s.J},
        {"rrh_radius_m", s.layout.rrh_radius_m},
        {"user_radius_m", s.layout.user_radius_m},
        {"exclusion_m", s.layout.exclusion_m},
        {"path_loss_exponent", s.path_loss_exponent},
        {"energy_w", s.energy_w},
        {"capacity_bps_hz", capacity},
        {"q_min_uw", s.q_min_w * 1e6},
        {"noise_w", s.sigma2_w},
        {"efficiency", s.eta}}},
      {"solver",
       {{"tau_w", c.solver.tau},
        {"eps_bisect", c.solver.eps_bisect},
        {"eps_gamma_reweight", c.solver.eps_gamma_reweight},
        {"eps_beta", c.solver.eps_beta},
        {"eps_rate", c.solver.eps_rate},
        {"max_bisect_iters", c.solver.max_bisect_iters},
        {"max_outer_iters", c.solver.max_outer_iters},
        {"assoc_threshold", c.solver.assoc_threshold},
        {"feasibility_margin", c.solver.feasibility_margin},
        {"ipm_max_iterations", c.solver.ipm.max_iterations},
        {"ipm_gap_tol", c.solver.ipm.gap_tol},
        {"ipm_feas_tol", c.solver.ipm.feas_tol}}},
      {"sweep", {{"variable", to_string(c.variable)}, {"values", values}}},
      {"trials", c.trials},
      {"seed", c.seed},
      {"strategies", strategies},
  };
  if (!c.output.empty()) out["output"] = c.output;
  return out;
}

ScenarioConfig scenario_at(const SweepConfig& c, double value) {
  ScenarioConfig s = c.scenario;
  switch (c.variable) {
    case SweepVariable::QMin: s.q_min_w = 1e-6 * value; break;
    case SweepVariable::Energy: s.energy_w.assign(s.L, value); break;
    case SweepVariable::Capacity: s.capacity.assign(s.L, value); break;
  }
  return s;
}

std::uint64_t trial_seed(std::uint64_t base, int trial) { return derive_seed(base, static_cast<std::uint64_t>(trial)); }

// ---------------------------------------------------------------------------
// Sweeps

const std::vector<std::string>& csv_header() {
  static const std::vector<std::string> header{
      "kind",          "q_min_uw",          "energy_w",         "capacity_bps_hz", "trial",
      "strategy",      "status",            "min_rate_bps_hz",  "min_energy_uw",   "max_rrh_power_w",
      "assoc_rrhs_per_dr", "outer_iterations", "bisection_steps", "q_max_uw",        "trials_used",
      "trials_excluded"};
  return header;
}

namespace {

// The swept column carries the configured value itself, not a unit round trip.
ResultRow row_skeleton(const SweepConfig& config, double value) {
  const ScenarioConfig s = scenario_at(config, value);
  ResultRow r;
  r.q_min_uw = config.variable == SweepVariable::QMin ? value : s.q_min_w * 1e6;
  r.energy_w = s.energy_w.empty() ? 0.0 : s.energy_w.front();
  r.capacity_bps_hz = s.capacity.empty() ? kInf : s.capacity.front();
  return r;
}

bool successful(const std::string& status) { return status == "converged" || status == "not_converged"; }

}  // namespace

ResultRow run_trial(const SweepConfig& config, double value, int trial, Strategy strategy) {
  const ScenarioConfig sc_cfg = scenario_at(config, value);
  ResultRow row = row_skeleton(config, value);
  row.kind = "trial";
  row.trial = trial;
  row.strategy = to_string(strategy);
  try {
    const Scenario sc = build_scenario(sc_cfg, trial_seed(config.seed, trial));
    const MaxMinResult r = strategy == Strategy::Joint ? max_min_beamforming(sc, config.solver)
                                                       : separate_beamforming_baseline(sc, config.solver);
    row.status = to_string(r.status);
    row.q_max_uw = r.q_max_w * 1e6;
    row.outer_iterations = r.outer_iterations;
    row.bisection_steps = r.bisection_steps;
    if (successful(row.status)) {
      row.min_rate_bps_hz = r.solution.min_rate();
      row.min_energy_uw = r.solution.min_energy() * 1e6;
      row.max_rrh_power_w = r.solution.max_power();
      row.assoc_rrhs_per_dr = r.solution.mean_associated_rrhs();
    }
  } catch (const std::exception&) {
    row.status = "error";
  }
  return row;
}

ResultTable aggregate(const ResultTable& trials, const SweepConfig& config) {
  ResultTable out;
  for (double value : config.values) {
    const ResultRow base = row_skeleton(config, value);
    for (Strategy st : config.strategies) {
      ResultRow a = base;
      a.kind = "aggregate";
      a.strategy = to_string(st);
      a.status = "aggregate";
      int used = 0, excluded = 0;
      double rate = 0, energy = 0, power = 0, assoc = 0, outer = 0, steps = 0, qmax = 0;
      for (const ResultRow& r : trials) {
        if (r.kind != "trial" || r.strategy != a.strategy || r.q_min_uw != base.q_min_uw ||
            r.energy_w != base.energy_w || r.capacity_bps_hz != base.capacity_bps_hz) {
          continue;
        }
        if (!successful(r.status)) {
          ++excluded;
          continue;
        }
        ++used;
        rate += *r.min_rate_bps_hz;
        energy += *r.min_energy_uw;
        power += *r.max_rrh_power_w;
        assoc += *r.assoc_rrhs_per_dr;
        outer += *r.outer_iterations;
        steps += *r.bisection_steps;
        qmax += *r.q_max_uw;
      }
      a.trials_used = used;
      a.trials_excluded = excluded;
      if (used > 0) {
        a.min_rate_bps_hz = rate / used;
        a.min_energy_uw = energy / used;
        a.max_rrh_power_w = power / used;
        a.assoc_rrhs_per_dr = assoc / used;
        a.outer_iterations = outer / used;
        a.bisection_steps = steps / used;
        a.q_max_uw = qmax / used;
      }
      out.push_back(std::move(a));
    }
  }
  return out;
}

ResultTable run_sweep(const SweepConfig& config, int workers, const ProgressFn& progress) {
  config.validate();
  struct Job {
    double value;
    int trial;
    Strategy strategy;
  };
  std::vector<Job> jobs;
  for (double v : config.values)
    for (int t = 0; t < config.trials; ++t)
      for (Strategy s : config.strategies) jobs.push_back({v, t, s});

  ResultTable rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mutex;
  auto work = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      rows[i] = run_trial(config, jobs[i].value, jobs[i].trial, jobs[i].strategy);
      const int d = ++done;
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(d, static_cast<int>(jobs.size()));
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  ResultTable agg = aggregate(rows, config);
  rows.insert(rows.end(), agg.begin(), agg.end());
  return rows;
}

// ---------------------------------------------------------------------------
// Tables

std::string to_csv(const ResultTable& table) {
  std::ostringstream os;
  const auto& h = csv_header();
  for (std::size_t i = 0; i < h.size(); ++i) os << (i ? "," : "") << h[i];
  os << '\n';
  for (const ResultRow& r : table) {
    os << r.kind << ',' << fmt(r.q_min_uw) << ',' << fmt(r.energy_w) << ',' << fmt(r.capacity_bps_hz) << ','
       << fmt(r.trial) << ',' << r.strategy << ',' << r.status << ',' << fmt(r.min_rate_bps_hz) << ','
       << fmt(r.min_energy_uw) << ',' << fmt(r.max_rrh_power_w) << ',' << fmt(r.assoc_rrhs_per_dr) << ','
       << fmt(r.outer_iterations) << ',' << fmt(r.bisection_steps) << ',' << fmt(r.q_max_uw) << ','
       << fmt(r.trials_used) << ',' << fmt(r.trials_excluded) << '\n';
  }
  return os.str();
}

json to_json(const ResultTable& table) {
  json rows = json::array();
  for (const ResultRow& r : table) {
    rows.push_back({{"kind", r.kind},
                    {"q_min_uw", number_or_inf(r.q_min_uw)},
                    {"energy_w", number_or_inf(r.energy_w)},
                    {"capacity_bps_hz", number_or_inf(r.capacity_bps_hz)},
                    {"trial", opt_json(r.trial)},
                    {"strategy", r.strategy},
                    {"status", r.status},
                    {"min_rate_bps_hz", opt_json(r.min_rate_bps_hz)},
                    {"min_energy_uw", opt_json(r.min_energy_uw)},
                    {"max_rrh_power_w", opt_json(r.max_rrh_power_w)},
                    {"assoc_rrhs_per_dr", opt_json(r.assoc_rrhs_per_dr)},
                    {"outer_iterations", opt_json(r.outer_iterations)},
                    {"bisection_steps", opt_json(r.bisection_steps)},
                    {"q_max_uw", opt_json(r.q_max_uw)},
                    {"trials_used", opt_json(r.trials_used)},
                    {"trials_excluded", opt_json(r.trials_excluded)}});
  }
  return rows;
}

ResultTable table_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
  std::string expected;
  for (std::size_t i = 0; i < csv_header().size(); ++i) expected += (i ? "," : "") + csv_header()[i];
  if (line != expected) throw std::runtime_error("csv: unexpected header");
  ResultTable out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != csv_header().size()) throw std::runtime_error("csv line " + std::to_string(lineno) + ": wrong field count");
    const std::string where = "csv line " + std::to_string(lineno);
    ResultRow r;
    r.kind = f[0];
    r.q_min_uw = parse_double(f[1], where);
    r.energy_w = parse_double(f[2], where);
    r.capacity_bps_hz = parse_double(f[3], where);
    r.trial = parse_opt_int(f[4], where);
    r.strategy = f[5];
    r.status = f[6];
    r.min_rate_bps_hz = parse_opt_double(f[7], where);
    r.min_energy_uw = parse_opt_double(f[8], where);
    r.max_rrh_power_w = parse_opt_double(f[9], where);
    r.assoc_rrhs_per_dr = parse_opt_double(f[10], where);
    r.outer_iterations = parse_opt_double(f[11], where);
    r.bisection_steps = parse_opt_double(f[12], where);
    r.q_max_uw = parse_opt_double(f[13], where);
    r.trials_used = parse_opt_int(f[14], where);
    r.trials_excluded = parse_opt_int(f[15], where);
    out.push_back(std::move(r));
  }
  return out;
}

ResultTable table_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("/", "expected an array of rows");
  ResultTable out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = "/" + std::to_string(i);
    const json& o = j[i];
    if (!o.is_object()) throw ConfigError(p, "expected an object");
    for (const auto& item : o.items()) {
      const auto& h = csv_header();
      if (std::find(h.begin(), h.end(), item.key()) == h.end()) throw ConfigError(p + "/" + item.key(), "unknown field");
    }
    for (const auto& key : csv_header()) {
      if (!o.contains(key)) throw ConfigError(p + "/" + key, "missing field");
    }
    ResultRow r;
    r.kind = read_string(o["kind"], p + "/kind");
    r.q_min_uw = read_number(o["q_min_uw"], p + "/q_min_uw", true);
    r.energy_w = read_number(o["energy_w"], p + "/energy_w", true);
    r.capacity_bps_hz = read_number(o["capacity_bps_hz"], p + "/capacity_bps_hz", true);
    r.trial = opt_int_from_json(o["trial"], p + "/trial");
    r.strategy = read_string(o["strategy"], p + "/strategy");
    r.status = read_string(o["status"], p + "/status");
    r.min_rate_bps_hz = opt_from_json(o["min_rate_bps_hz"], p + "/min_rate_bps_hz");
    r.min_energy_uw = opt_from_json(o["min_energy_uw"], p + "/min_energy_uw");
    r.max_rrh_power_w = opt_from_json(o["max_rrh_power_w"], p + "/max_rrh_power_w");
    r.assoc_rrhs_per_dr = opt_from_json(o["assoc_rrhs_per_dr"], p + "/assoc_rrhs_per_dr");
    r.outer_iterations = opt_from_json(o["outer_iterations"], p + "/outer_iterations");
    r.bisection_steps = opt_from_json(o["bisection_steps"], p + "/bisection_steps");
    r.q_max_uw = opt_from_json(o["q_max_uw"], p + "/q_max_uw");
    r.trials_used = opt_int_from_json(o["trials_used"], p + "/trials_used");
    r.trials_excluded = opt_int_from_json(o["trials_excluded"], p + "/trials_excluded");
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Solution files

json solution_to_json(const Scenario& sc, const BeamformingSolution& s) {
  json h = json::array(), g = json::array(), w = json::array(), v = json::array(), cap = json::array();
  for (const auto& x : sc.h) h.push_back(cvec_to_json(x));
  for (const auto& x : sc.g) g.push_back(cvec_to_json(x));
  for (const auto& x : s.beams.w) w.push_back(cvec_to_json(x));
  for (const auto& x : s.beams.v) v.push_back(cvec_to_json(x));
  for (double c : sc.capacity) cap.push_back(number_or_inf(c));
  return {{"scenario",
           {{"rrhs", sc.L},
            {"antennas_per_rrh", sc.M},
            {"data_receivers", sc.K},
            {"energy_receivers", sc.J},
            {"dr_channels", h},
            {"er_channels", g},
            {"energy_w", sc.energy_w},
            {"capacity_bps_hz", cap},
            {"q_min_w", sc.q_min_w},
            {"noise_w", sc.sigma2_w},
            {"efficiency", sc.eta}}},
          {"beams", {{"w", w}, {"v", v}}},
          {"assoc_threshold", s.assoc_threshold}};
}

SolutionFile solution_from_json(const json& j) {
  SolutionFile f;
  ObjectReader top(j, "");
  top.required("scenario", [&](const json& v, const std::string& path) {
    ObjectReader r(v, path);
    Scenario& sc = f.scenario;
    r.required("rrhs", [&](const json& x, const std::string& p) { sc.L = read_int(x, p); });
    r.required("antennas_per_rrh", [&](const json& x, const std::string& p) { sc.M = read_int(x, p); });
    r.required("data_receivers", [&](const json& x, const std::string& p) { sc.K = read_int(x, p); });
    r.required("energy_receivers", [&](const json& x, const std::string& p) { sc.J = read_int(x, p); });
    r.required("dr_channels", [&](const json& x, const std::string& p) { sc.h = cvecs_from_json(x, p); });
    r.required("er_channels", [&](const json& x, const std::string& p) { sc.g = cvecs_from_json(x, p); });
    r.required("energy_w", [&](const json& x, const std::string& p) {
      if (!x.is_array()) throw ConfigError(p, "expected an array");
      for (std::size_t i = 0; i < x.size(); ++i) sc.energy_w.push_back(read_number(x[i], p + "/" + std::to_string(i)));
    });
    r.required("capacity_bps_hz", [&](const json& x, const std::string& p) {
      if (!x.is_array()) throw ConfigError(p, "expected an array");
      for (std::size_t i = 0; i < x.size(); ++i) sc.capacity.push_back(read_number(x[i], p + "/" + std::to_string(i), true));
    });
    r.required("q_min_w", [&](const json& x, const std::string& p) { sc.q_min_w = read_number(x, p); });
    r.required("noise_w", [&](const json& x, const std::string& p) { sc.sigma2_w = read_number(x, p); });
    r.required("efficiency", [&](const json& x, const std::string& p) { sc.eta = read_number(x, p); });
    r.finish();
    try {
      sc.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path, e.what());
    }
  });
  top.required("beams", [&](const json& v, const std::string& path) {
    ObjectReader r(v, path);
    r.required("w", [&](const json& x, const std::string& p) { f.beams.w = cvecs_from_json(x, p); });
    r.required("v", [&](const json& x, const std::string& p) { f.beams.v = cvecs_from_json(x, p); });
    r.finish();
  });
  top.optional("assoc_threshold", [&](const json& x, const std::string& p) { f.assoc_threshold = read_number(x, p); });
  top.finish();
  const int n = f.scenario.antennas_total();
  if (static_cast<int>(f.beams.w.size()) != f.scenario.K) throw ConfigError("/beams/w", "expected one beam per DR");
  if (static_cast<int>(f.beams.v.size()) != f.scenario.J) throw ConfigError("/beams/v", "expected one beam per ER");
  for (std::size_t k = 0; k < f.beams.w.size(); ++k) {
    if (f.beams.w[k].size() != n) throw ConfigError("/beams/w/" + std::to_string(k), "wrong length");
  }
  for (std::size_t k = 0; k < f.beams.v.size(); ++k) {
    if (f.beams.v[k].size() != n) throw ConfigError("/beams/v/" + std::to_string(k), "wrong length");
  }
  return f;
}

// ---------------------------------------------------------------------------
// Command line

namespace {

bool write_text(const std::string& path, const std::string& text, std::ostream& err) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    err << "error: cannot write '" << path << "'\n";
    return false;
  }
  out << text;
  return static_cast<bool>(out);
}

std::string infer_format(const std::string& format, const std::string& path) {
  if (!format.empty()) return format;
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) return "json";
  return "csv";
}

struct ScenarioPick {
  std::optional<double> value;
  int trial = 0;
  std::optional<std::uint64_t> seed_override;
};

void add_pick_options(CLI::App* app, ScenarioPick& pick) {
  app->add_option("--value", pick.value, "Sweep-variable value to apply (default: the base scenario)");
  app->add_option("--trial", pick.trial, "Trial index; the channel seed is derived from the base seed")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--seed-override", pick.seed_override, "Replace the config's base seed");
}

Scenario picked_scenario(const SweepConfig& c, const ScenarioPick& pick, std::uint64_t& seed_out) {
  const ScenarioConfig s = pick.value ? scenario_at(c, *pick.value) : c.scenario;
  seed_out = trial_seed(pick.seed_override.value_or(c.seed), pick.trial);
  return build_scenario(s, seed_out);
}

}  // namespace

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Max-min fair joint information/energy beamforming for fronthaul-limited green Cloud-RAN"};
  app.require_subcommand(1);

  std::string config_path, out_path, format, solution_path, strategy_name = "joint";
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::optional<std::uint64_t> seed_override;
  bool progress = false;
  double tol = 1e-6;
  ScenarioPick pick;

  CLI::App* sweep = app.add_subcommand("sweep", "Run a seeded Monte-Carlo sweep and write a CSV or JSON table");
  sweep->add_option("--config", config_path, "Sweep config (JSON)")->required();
  sweep->add_option("--out", out_path, "Output file (default: config 'output', else stdout)");
  sweep->add_option("--format", format, "csv or json (default: from the output extension)")
      ->check(CLI::IsMember({"csv", "json"}));
  sweep->add_option("--workers", workers, "Concurrent trials")->check(CLI::PositiveNumber);
  sweep->add_option("--seed-override", seed_override, "Replace the config's base seed");
  sweep->add_flag("--progress", progress, "Report progress on stderr");

  CLI::App* feas = app.add_subcommand("feasibility", "Print the largest common RF energy q_max of one scenario");
  feas->add_option("--config", config_path, "Config (JSON); the sweep section is optional")->required();
  add_pick_options(feas, pick);

  CLI::App* solve_cmd = app.add_subcommand("solve", "Solve one scenario and save a self-contained solution file");
  solve_cmd->add_option("--config", config_path, "Config (JSON); the sweep section is optional")->required();
  solve_cmd->add_option("--out", out_path, "Solution file (JSON)")->required();
  solve_cmd->add_option("--strategy", strategy_name, "joint or separate")->check(CLI::IsMember({"joint", "separate"}));
  add_pick_options(solve_cmd, pick);

  CLI::App* check = app.add_subcommand("check", "Audit a saved solution against the energy, fronthaul and power constraints");
  check->add_option("--solution", solution_path, "Solution file written by 'solve'")->required()->check(CLI::ExistingFile);
  check->add_option("--tol", tol, "Relative tolerance")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (sweep->parsed()) {
      SweepConfig c = load_config(config_path);
      if (seed_override) c.seed = *seed_override;
      if (out_path.empty()) out_path = c.output;
      ProgressFn report;
      if (progress) report = [&err](int done, int total) { err << "\r" << done << "/" << total << std::flush; };
      const ResultTable table = run_sweep(c, workers, report);
      if (progress) err << "\n";
      const std::string fmt_name = infer_format(format, out_path);
      const std::string text = fmt_name == "json" ? to_json(table).dump(2) + "\n" : to_csv(table);
      if (out_path.empty()) {
        out << text;
      } else if (!write_text(out_path, text, err)) {
        return 1;
      }
      return 0;
    }
    if (feas->parsed()) {
      const SweepConfig c = load_config(config_path, false);
      std::uint64_t seed = 0;
      const Scenario sc = picked_scenario(c, pick, seed);
      const MaxEnergyResult r = solve_max_energy(sc, c.solver.ipm);
      const bool ok = r.status == SolveStatus::Optimal;
      const json report = {{"seed", seed},
                           {"trial", pick.trial},
                           {"status", to_string(r.status)},
                           {"q_max_uw", r.q_max_w * 1e6},
                           {"q_min_uw", sc.q_min_w * 1e6},
                           {"feasible", ok && sc.q_min_w <= (1.0 - c.solver.feasibility_margin) * r.q_max_w}};
      out << report.dump(2) << "\n";
      return ok ? 0 : 1;
    }
    if (solve_cmd->parsed()) {
      const SweepConfig c = load_config(config_path, false);
      std::uint64_t seed = 0;
      const Scenario sc = picked_scenario(c, pick, seed);
      const MaxMinResult r = strategy_name == "joint" ? max_min_beamforming(sc, c.solver)
                                                      : separate_beamforming_baseline(sc, c.solver);
      const bool ok = r.status == RunStatus::Converged || r.status == RunStatus::NotConverged;
      json summary = {{"seed", seed},
                      {"strategy", strategy_name},
                      {"status", to_string(r.status)},
                      {"q_max_uw", r.q_max_w * 1e6},
                      {"outer_iterations", r.outer_iterations},
                      {"bisection_steps", r.bisection_steps}};
      if (ok) {
        summary["min_rate_bps_hz"] = r.solution.min_rate();
        summary["assoc_rrhs_per_dr"] = r.solution.mean_associated_rrhs();
        if (!write_text(out_path, solution_to_json(sc, r.solution).dump(2) + "\n", err)) return 1;
      } else if (!r.message.empty()) {
        summary["message"] = r.message;
      }
      out << summary.dump(2) << "\n";
      return ok ? 0 : 1;
    }
    if (check->parsed()) {
      std::ifstream in(solution_path);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError("/", std::string("invalid JSON: ") + e.what());
      }
      const SolutionFile f = solution_from_json(j);
      const ConstraintReport r = check_solution(f.scenario, f.beams, tol, f.assoc_threshold);
      out << r.to_json().dump(2) << "\n";
      return r.pass ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    err << "config error at " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace cran
