#pragma once

// Experiment runner behind the command-line tool. Needs nlohmann/json
// (vendor/json.hpp) on the include path, unlike the numerical headers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "netalloc/allocate.hpp"
#include "netalloc/bounds.hpp"
#include "netalloc/common.hpp"
#include "netalloc/dynamics.hpp"
#include "netalloc/exact.hpp"
#include "netalloc/meanfield.hpp"
#include "netalloc/model.hpp"
#include "netalloc/network.hpp"

namespace netalloc {

/// Raised for malformed configuration or unusable inputs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Method { Brute, Bfva, Greedy, Random, None };
enum class Evaluator { Exact, Va, Mcmc };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::Brute: return "brute";
    case Method::Bfva: return "bfva";
    case Method::Greedy: return "greedy";
    case Method::Random: return "random";
    case Method::None: return "none";
  }
  return "?";
}

inline std::string to_string(Evaluator e) {
  switch (e) {
    case Evaluator::Exact: return "exact";
    case Evaluator::Va: return "va";
    case Evaluator::Mcmc: return "mcmc";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::Brute, Method::Bfva, Method::Greedy, Method::Random, Method::None}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown method '" + s + "'");
}

inline Evaluator parse_evaluator(const std::string& s) {
  for (Evaluator e : {Evaluator::Exact, Evaluator::Va, Evaluator::Mcmc}) {
    if (to_string(e) == s) return e;
  }
  throw ConfigError("unknown evaluator '" + s + "'");
}

inline SweepMode parse_sweep_mode(const std::string& s) {
  if (s == "gauss-seidel") return SweepMode::GaussSeidel;
  if (s == "jacobi") return SweepMode::Jacobi;
  throw ConfigError("unknown sweep mode '" + s + "' (expected gauss-seidel or jacobi)");
}

inline SimilarityKernel parse_kernel(const std::string& s, double constant) {
  if (s == "absdiff") return SimilarityKernel::abs_diff();
  if (s == "inverse") return SimilarityKernel::inverse_distance();
  if (s == "constant") return SimilarityKernel::constant_value(constant);
  throw ConfigError("unknown kernel '" + s + "' (expected absdiff, inverse or constant)");
}

/// Floats in every emitted table and report carry 6 significant digits.
inline std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline double round6(double v) { return std::stod(fmt6(v)); }

struct SamplerSettings {
  std::size_t sweeps = 10000;
  std::size_t burn_in = 5000;
};

/// How A_N is chosen when it is not given explicitly.
enum class ScaleRule { InverseN, One, Fixed };

struct ExperimentConfig {
  std::string mode = "simulate";
  std::vector<std::size_t> sizes{15};
  std::vector<double> densities{0.3};
  std::vector<int> param_sets{1};
  std::size_t replications = 100;

  /// Explicit parameters; when absent the built-in sets in param_sets are used.
  /// Their a_n field is ignored in favour of scale_rule / a_n below.
  std::optional<ThetaParams> theta;
  ScaleRule scale_rule = ScaleRule::InverseN;
  double a_n = 1.0;  ///< used when scale_rule == Fixed
  std::string kernel = "absdiff";
  double kernel_constant = 1.0;
  bool sparse = false;

  double kappa_fraction = 0.3;
  std::optional<std::size_t> kappa;
  std::optional<std::size_t> random_draws;

  std::uint64_t seed = 20240601;
  SolverSettings solver;
  SamplerSettings sampler;
  std::size_t exact_cap = 16;
  std::uint64_t bfva_cap = std::uint64_t{1} << 16;

  std::vector<Method> methods{Method::Brute, Method::Bfva, Method::Greedy, Method::Random, Method::None};
  std::vector<Evaluator> evaluators{Evaluator::Va};

  /// allocate: user inputs and the optimiser to run.
  std::string network_path;
  std::string covariates_path;
  Method allocate_method = Method::Greedy;
  bool mcmc_check = false;

  /// validate: per-person tolerance of the VA–MCMC comparison.
  double tolerance = 0.01;

  std::string out_dir = ".";
  std::size_t threads = 0;  ///< 0 → hardware concurrency

  std::size_t kappa_for(std::size_t n) const { return kappa ? std::min(*kappa, n) : capacity_from_fraction(n, kappa_fraction); }

  std::size_t draws_for(std::size_t n) const {
    if (random_draws) return *random_draws;
    return n <= 15 ? 50 : 10;
  }

  double a_n_for(std::size_t n) const {
    switch (scale_rule) {
      case ScaleRule::InverseN: return 1.0 / static_cast<double>(n);
      case ScaleRule::One: return 1.0;
      case ScaleRule::Fixed: return a_n;
    }
    return 1.0;
  }

  void validate() const {
    static const std::set<std::string> modes{"simulate", "allocate", "validate", "bounds"};
    if (!modes.count(mode)) throw ConfigError("unknown mode '" + mode + "'");
    if (replications < 1) throw ConfigError("replications must be at least 1");
    if (sizes.empty()) throw ConfigError("at least one network size is required");
    for (auto n : sizes) {
      if (n < 2) throw ConfigError("network size must be at least 2");
    }
    for (double d : densities) {
      if (!(d > 0.0 && d <= 1.0)) throw ConfigError("density must lie in (0, 1]");
    }
    if (!theta) {
      for (int p : param_sets) {
        if (p != 1 && p != 2) throw ConfigError("param_set must be 1 or 2");
      }
      if (param_sets.empty()) throw ConfigError("at least one parameter set is required");
    }
    if (!(kappa_fraction >= 0.0 && kappa_fraction <= 1.0)) throw ConfigError("kappa_fraction must lie in [0, 1]");
    if (!(solver.rho > 0.0)) throw ConfigError("solver rho must be positive");
    if (sampler.sweeps <= sampler.burn_in) throw ConfigError("sampler sweeps must exceed burn_in");
    if (random_draws && *random_draws == 0) throw ConfigError("random_draws must be at least 1");
    if (scale_rule == ScaleRule::Fixed && !(a_n > 0.0)) throw ConfigError("a_n must be positive");
    if (mode == "allocate") {
      if (network_path.empty()) throw ConfigError("allocate needs a network file");
      if (covariates_path.empty()) throw ConfigError("allocate needs a covariates file");
      for (const auto& p : {network_path, covariates_path}) {
        if (!std::ifstream(p)) throw ConfigError("cannot open " + p);
      }
    }
    (void)parse_kernel(kernel, kernel_constant);
  }
};

namespace detail {

template <typename T>
std::vector<T> scalar_or_array(const nlohmann::json& j) {
  if (j.is_array()) return j.get<std::vector<T>>();
  return {j.get<T>()};
}

inline ThetaParams theta_from_json(const nlohmann::json& j) {
  static const std::set<std::string> keys{"theta0", "theta1", "theta2", "theta3", "theta4",
                                          "theta5", "theta6", "a_n",    "kernel"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!keys.count(it.key())) throw ConfigError("unknown theta key '" + it.key() + "'");
  }
  ThetaParams t;
  auto req = [&](const char* k) {
    if (!j.contains(k)) throw ConfigError(std::string("theta is missing '") + k + "'");
    return j.at(k);
  };
  t.theta0 = req("theta0").get<double>();
  t.theta1 = req("theta1").get<double>();
  t.theta2 = scalar_or_array<double>(req("theta2"));
  t.theta3 = scalar_or_array<double>(req("theta3"));
  t.theta4 = req("theta4").get<double>();
  t.theta5 = req("theta5").get<double>();
  t.theta6 = req("theta6").get<double>();
  t.a_n = j.value("a_n", 1.0);
  return t;
}

}  // namespace detail

/// Reads a JSON configuration. Unknown keys are rejected so that typos do not
/// silently fall back to defaults.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> keys{
      "mode",      "n",          "density",      "param_set",    "replications", "theta",     "a_n",
      "kernel",    "kernel_constant", "sparse",  "kappa_fraction", "kappa",      "random_draws", "seed",
      "solver",    "sampler",    "exact_cap",    "bfva_cap",     "methods",      "evaluators", "network",
      "covariates", "method",    "mcmc_check",   "tolerance",    "out",          "threads"};
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!keys.count(it.key())) throw ConfigError("unknown configuration key '" + it.key() + "'");
  }
  ExperimentConfig c;
  try {
    c.mode = j.value("mode", c.mode);
    if (j.contains("n")) c.sizes = detail::scalar_or_array<std::size_t>(j["n"]);
    if (j.contains("density")) c.densities = detail::scalar_or_array<double>(j["density"]);
    if (j.contains("param_set")) c.param_sets = detail::scalar_or_array<int>(j["param_set"]);
    c.replications = j.value("replications", c.replications);
    if (j.contains("theta")) {
      c.theta = detail::theta_from_json(j["theta"]);
      if (j["theta"].contains("a_n")) {
        c.scale_rule = ScaleRule::Fixed;
        c.a_n = c.theta->a_n;
      }
      if (j["theta"].contains("kernel")) c.kernel = j["theta"]["kernel"].get<std::string>();
    }
    c.sparse = j.value("sparse", c.sparse);
    if (c.sparse && c.scale_rule == ScaleRule::InverseN) c.scale_rule = ScaleRule::One;
    if (j.contains("a_n")) {
      const auto& a = j["a_n"];
      if (a.is_string()) {
        const auto s = a.get<std::string>();
        if (s == "1/n") c.scale_rule = ScaleRule::InverseN;
        else if (s == "1") c.scale_rule = ScaleRule::One;
        else throw ConfigError("a_n must be a number, \"1/n\" or \"1\"");
      } else {
        c.scale_rule = ScaleRule::Fixed;
        c.a_n = a.get<double>();
      }
    }
    c.kernel = j.value("kernel", c.kernel);
    c.kernel_constant = j.value("kernel_constant", c.kernel_constant);
    c.kappa_fraction = j.value("kappa_fraction", c.kappa_fraction);
    if (j.contains("kappa")) c.kappa = j["kappa"].get<std::size_t>();
    if (j.contains("random_draws")) c.random_draws = j["random_draws"].get<std::size_t>();
    c.seed = j.value("seed", c.seed);
    if (j.contains("solver")) {
      const auto& s = j["solver"];
      c.solver.rho = s.value("rho", c.solver.rho);
      c.solver.foc_tol = s.value("foc_tol", c.solver.foc_tol);
      c.solver.max_iter = s.value("max_iter", c.solver.max_iter);
      c.solver.restarts = s.value("restarts", c.solver.restarts);
      c.solver.warm_start = s.value("warm_start", c.solver.warm_start);
      if (s.contains("mode")) c.solver.mode = parse_sweep_mode(s["mode"].get<std::string>());
    }
    if (j.contains("sampler")) {
      c.sampler.sweeps = j["sampler"].value("sweeps", c.sampler.sweeps);
      c.sampler.burn_in = j["sampler"].value("burn_in", c.sampler.burn_in);
    }
    c.exact_cap = j.value("exact_cap", c.exact_cap);
    c.bfva_cap = j.value("bfva_cap", c.bfva_cap);
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j["methods"]) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("evaluators")) {
      c.evaluators.clear();
      for (const auto& e : j["evaluators"]) c.evaluators.push_back(parse_evaluator(e.get<std::string>()));
    }
    c.network_path = j.value("network", c.network_path);
    c.covariates_path = j.value("covariates", c.covariates_path);
    if (j.contains("method")) c.allocate_method = parse_method(j["method"].get<std::string>());
    c.mcmc_check = j.value("mcmc_check", c.mcmc_check);
    c.tolerance = j.value("tolerance", c.tolerance);
    c.out_dir = j.value("out", c.out_dir);
    c.threads = j.value("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad configuration value: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse config " + path + ": " + e.what());
  }
  ExperimentConfig c = config_from_json(j);
  // Relative data paths are read relative to the config file itself.
  const auto base = std::filesystem::path(path).parent_path();
  for (std::string* p : {&c.network_path, &c.covariates_path}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  }
  return c;
}

/// Runs body(0..count-1) on up to `threads` workers. Results must be written
/// to index-addressed slots so the schedule cannot change the output.
template <typename F>
void parallel_for(std::size_t count, std::size_t threads, F&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

/// One point of the simulation grid.
struct GridPoint {
  int param_set = 1;
  double density = 0.3;
  std::size_t n = 0;
};

/// Simulated instance for replication r: G(n, M) network, Bernoulli(0.5)
/// scalar covariate, absolute-difference similarity.
inline Instance simulated_instance(const ExperimentConfig& cfg, const GridPoint& g, std::uint64_t rep_seed) {
  const Network net = erdos_renyi(g.n, g.density, derive_seed(rep_seed, {1}));
  std::mt19937_64 rng(derive_seed(rep_seed, {2}));
  std::bernoulli_distribution coin(0.5);
  std::size_t cols = cfg.theta ? cfg.theta->theta2.size() : 1;
  std::vector<double> x(g.n * cols);
  for (auto& v : x) v = coin(rng) ? 1.0 : 0.0;
  ThetaParams theta = cfg.theta ? *cfg.theta : parameter_set(g.param_set, 1.0);
  theta.a_n = cfg.a_n_for(g.n);
  return Instance(net, Covariates(g.n, cols, std::move(x)), parse_kernel(cfg.kernel, cfg.kernel_constant),
                  std::move(theta));
}

/// Seed of replication r at grid point g. Networks do not depend on the
/// parameter set, so both sets are compared on the same draws.
inline std::uint64_t replication_seed(const ExperimentConfig& cfg, const GridPoint& g, std::size_t r) {
  const auto density_key = static_cast<std::uint64_t>(std::llround(g.density * 1e6));
  return derive_seed(cfg.seed, {g.n, density_key, r});
}

/// Per-person welfare of one (method, evaluator) cell on one instance, or the
/// reason it could not be computed.
struct CellValue {
  std::optional<double> value;
  std::string na_reason;
};

/// Evaluates allocations on one instance under the configured evaluators.
class InstanceEvaluator {
 public:
  InstanceEvaluator(const Instance& inst, const ExperimentConfig& cfg, std::uint64_t seed)
      : inst_(inst), cfg_(cfg), seed_(seed) {}

  bool exact_feasible() const { return inst_.size() <= cfg_.exact_cap; }

  /// Per-person welfare of d; `salt` decorrelates the MCMC stream.
  CellValue evaluate(const Allocation& d, Evaluator e, std::uint64_t salt) const {
    const double n = static_cast<double>(inst_.size());
    switch (e) {
      case Evaluator::Exact:
        if (!exact_feasible()) return {std::nullopt, "exact_infeasible"};
        return {exact_welfare(inst_, d, cfg_.exact_cap) / n, {}};
      case Evaluator::Va:
        return {approx_welfare(inst_, d, cfg_.solver, derive_seed(seed_, {3, salt})) / n, {}};
      case Evaluator::Mcmc:
        return {mcmc_welfare(inst_, d, cfg_.sampler.sweeps, cfg_.sampler.burn_in, derive_seed(seed_, {5, salt}))
                    .estimate,
                {}};
    }
    return {std::nullopt, "unknown_evaluator"};
  }

 private:
  const Instance& inst_;
  const ExperimentConfig& cfg_;
  std::uint64_t seed_;
};

/// Aggregated welfare for one (grid point, method, evaluator) cell.
struct WelfareCell {
  GridPoint point;
  Method method = Method::Greedy;
  Evaluator evaluator = Evaluator::Va;
  /// Per-replication per-person welfare; NaN where not computed.
  std::vector<double> values;
  std::string na_reason;

  std::size_t count() const {
    return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](double v) { return !std::isnan(v); }));
  }

  bool available() const { return na_reason.empty() && count() > 0; }

  double mean() const {
    double s = 0.0;
    for (double v : values) {
      if (!std::isnan(v)) s += v;
    }
    return s / static_cast<double>(count());
  }

  /// Standard error of the mean across replications (0 for one replication).
  double std_error() const {
    const std::size_t k = count();
    if (k < 2) return 0.0;
    const double m = mean();
    double ss = 0.0;
    for (double v : values) {
      if (!std::isnan(v)) ss += (v - m) * (v - m);
    }
    return std::sqrt(ss / static_cast<double>(k - 1) / static_cast<double>(k));
  }
};

struct WelfareReport {
  std::vector<WelfareCell> cells;

  const WelfareCell* find(const GridPoint& g, Method m, Evaluator e) const {
    for (const auto& c : cells) {
      if (c.point.param_set == g.param_set && c.point.density == g.density && c.point.n == g.n && c.method == m &&
          c.evaluator == e) {
        return &c;
      }
    }
    return nullptr;
  }

  void write_csv(std::ostream& os) const {
    os << "paramSet,density,n,method,evaluator,mean,stderr,replications,na_reason\n";
    for (const auto& c : cells) {
      os << c.point.param_set << ',' << fmt6(c.point.density) << ',' << c.point.n << ',' << to_string(c.method) << ','
         << to_string(c.evaluator) << ',';
      if (c.available()) {
        os << fmt6(c.mean()) << ',' << fmt6(c.std_error()) << ',' << c.count() << ",\n";
      } else {
        os << "NA,NA,0," << (c.na_reason.empty() ? "no_values" : c.na_reason) << '\n';
      }
    }
  }

  void write_instances_csv(std::ostream& os) const {
    os << "paramSet,density,n,method,evaluator,replication,welfare\n";
    for (const auto& c : cells) {
      for (std::size_t r = 0; r < c.values.size(); ++r) {
        if (std::isnan(c.values[r])) continue;
        os << c.point.param_set << ',' << fmt6(c.point.density) << ',' << c.point.n << ',' << to_string(c.method)
           << ',' << to_string(c.evaluator) << ',' << r << ',' << fmt6(c.values[r]) << '\n';
      }
    }
  }
};

inline std::vector<GridPoint> grid(const ExperimentConfig& cfg) {
  std::vector<GridPoint> out;
  const std::vector<int> sets = cfg.theta ? std::vector<int>{0} : cfg.param_sets;
  for (int p : sets) {
    for (double d : cfg.densities) {
      for (std::size_t n : cfg.sizes) out.push_back({p, d, n});
    }
  }
  return out;
}

namespace detail {

/// Allocation chosen by a deterministic method, or why none could be chosen.
struct Chosen {
  std::optional<Allocation> allocation;
  std::string na_reason;
};

inline Chosen choose(const Instance& inst, Method m, std::size_t kappa, const ExperimentConfig& cfg,
                     std::uint64_t seed) {
  const std::size_t n = inst.size();
  switch (m) {
    case Method::Brute: {
      const std::uint64_t count = count_subsets_up_to(n, std::min(kappa, n));
      if (n > cfg.exact_cap || count == UINT64_MAX || count > (kBruteForceWorkCap >> std::min<std::size_t>(n, 63))) {
        return {std::nullopt, "brute_infeasible"};
      }
      return {brute_force_optimal(inst, kappa, cfg.exact_cap).allocation, {}};
    }
    case Method::Bfva:
      if (count_subsets_up_to(n, std::min(kappa, n)) > cfg.bfva_cap) return {std::nullopt, "bfva_infeasible"};
      return {bfva(inst, kappa, cfg.solver, derive_seed(seed, {6}), cfg.bfva_cap).allocation, {}};
    case Method::Greedy:
      return {greedy(inst, kappa, cfg.solver, derive_seed(seed, {7})).allocation, {}};
    case Method::None:
      return {no_treatment(inst), {}};
    case Method::Random:
      return {std::nullopt, {}};
  }
  return {std::nullopt, "unknown_method"};
}

}  // namespace detail

/// Replicates the benchmark tables: per grid point, `replications` simulated
/// instances, every requested method under every requested evaluator.
inline WelfareReport simulate(const ExperimentConfig& cfg) {
  cfg.validate();
  WelfareReport report;
  for (const GridPoint& g : grid(cfg)) {
    const std::size_t base = report.cells.size();
    for (Method m : cfg.methods) {
      for (Evaluator e : cfg.evaluators) {
        WelfareCell c;
        c.point = g;
        c.method = m;
        c.evaluator = e;
        c.values.assign(cfg.replications, std::nan(""));
        report.cells.push_back(std::move(c));
      }
    }
    std::vector<std::vector<CellValue>> per_rep(cfg.replications);
    parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
      const std::uint64_t seed = replication_seed(cfg, g, r);
      const Instance inst = simulated_instance(cfg, g, seed);
      const std::size_t kappa = cfg.kappa_for(g.n);
      const InstanceEvaluator eval(inst, cfg, seed);
      auto& out = per_rep[r];
      for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        const Method m = cfg.methods[mi];
        const auto chosen = detail::choose(inst, m, kappa, cfg, seed);
        for (std::size_t ei = 0; ei < cfg.evaluators.size(); ++ei) {
          const Evaluator e = cfg.evaluators[ei];
          const std::uint64_t salt = mi * 16 + ei;
          if (m == Method::Random) {
            if (e == Evaluator::Exact && !eval.exact_feasible()) {
              out.push_back({std::nullopt, "exact_infeasible"});
              continue;
            }
            std::size_t draw = 0;
            const double v = random_allocation_welfare(
                inst, kappa, cfg.draws_for(g.n), derive_seed(seed, {4}),
                [&](const Allocation& d) { return *eval.evaluate(d, e, salt * 1024 + draw++).value; });
            out.push_back({v, {}});
          } else if (!chosen.allocation) {
            out.push_back({std::nullopt, chosen.na_reason});
          } else {
            out.push_back(eval.evaluate(*chosen.allocation, e, salt));
          }
        }
      }
    });
    for (std::size_t r = 0; r < cfg.replications; ++r) {
      for (std::size_t k = 0; k < per_rep[r].size(); ++k) {
        auto& cell = report.cells[base + k];
        if (per_rep[r][k].value) {
          cell.values[r] = *per_rep[r][k].value;
        } else if (cell.na_reason.empty()) {
          cell.na_reason = per_rep[r][k].na_reason;
        }
      }
    }
  }
  return report;
}

inline nlohmann::json to_json(const BoundsReport& b) {
  nlohmann::json c = nlohmann::json::object();
  for (std::size_t k = 0; k < b.asymptotic_constants.size(); ++k) {
    c["C" + std::to_string(k + 1)] = round6(b.asymptotic_constants[k]);
  }
  return {
      {"zeta", round6(b.zeta)},
      {"xiUp", round6(b.xi_up)},
      {"gammaLow", round6(b.gamma_low)},
      {"guaranteeFactor", round6(b.guarantee_factor)},
      {"klUpperBound", round6(b.kl_upper_bound)},
      {"regretUpperBound", round6(b.regret_upper_bound)},
      {"regretScale", round6(b.regret_scale)},
      {"assumptionNHolds", b.assumption_n_holds},
      {"positivityHolds", b.positivity_holds},
      {"contractionHolds", b.contraction_holds},
      {"asymptoticConstants", c},
      {"diagnostics", b.diagnostics},
  };
}

/// Bounds report with the regret scale taken from BFVA when it is affordable.
inline BoundsReport bounds_for(const Instance& inst, std::size_t kappa, const ExperimentConfig& cfg,
                               std::uint64_t seed) {
  std::optional<double> bfva_welfare;
  if (count_subsets_up_to(inst.size(), std::min(kappa, inst.size())) <= cfg.bfva_cap) {
    bfva_welfare = bfva(inst, kappa, cfg.solver, seed, cfg.bfva_cap).welfare;
  }
  return bounds_report(inst, bfva_welfare);
}

/// The instance described by the allocate inputs: network and covariate files
/// plus explicit θ (or the first built-in parameter set). A_N defaults to 1 for sparse networks and 1/N otherwise.
inline Instance instance_from_files(const ExperimentConfig& cfg) {
  Network net = load_network(cfg.network_path);
  Covariates x = load_covariates(cfg.covariates_path);
  ThetaParams theta = cfg.theta ? *cfg.theta : parameter_set(cfg.param_sets.front(), 1.0);
  theta.a_n = cfg.a_n_for(net.size());
  return Instance(std::move(net), std::move(x), parse_kernel(cfg.kernel, cfg.kernel_constant), std::move(theta));
}

struct AllocationResult {
  Allocation allocation;
  std::size_t kappa = 0;
  double welfare_va = 0.0;
  std::optional<McmcEstimate> welfare_mcmc;
  std::vector<GreedyRound> trace;
  BoundsReport bounds;
};

inline AllocationResult run_allocation(const Instance& inst, const ExperimentConfig& cfg) {
  AllocationResult out;
  out.kappa = cfg.kappa_for(inst.size());
  const std::uint64_t seed = derive_seed(cfg.seed, {0});
  switch (cfg.allocate_method) {
    case Method::Greedy: {
      auto g = greedy(inst, out.kappa, cfg.solver, seed);
      out.allocation = g.allocation;
      out.trace = g.trace;
      break;
    }
    case Method::Bfva:
      out.allocation = bfva(inst, out.kappa, cfg.solver, seed, cfg.bfva_cap).allocation;
      break;
    case Method::Brute:
      out.allocation = brute_force_optimal(inst, out.kappa, cfg.exact_cap).allocation;
      break;
    case Method::None:
      out.allocation = no_treatment(inst);
      break;
    case Method::Random: {
      std::mt19937_64 rng(seed);
      out.allocation = random_allocation(inst.size(), out.kappa, rng);
      break;
    }
  }
  out.welfare_va = approx_welfare(inst, out.allocation, cfg.solver, derive_seed(seed, {1}));
  if (cfg.mcmc_check) {
    out.welfare_mcmc = mcmc_welfare(inst, out.allocation, cfg.sampler.sweeps, cfg.sampler.burn_in, derive_seed(seed, {2}));
  }
  out.bounds = bounds_for(inst, out.kappa, cfg, derive_seed(seed, {3}));
  return out;
}

inline nlohmann::json to_json(const AllocationResult& a) {
  const double n = static_cast<double>(a.allocation.size());
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& t : a.trace) trace.push_back({{"round", t.round}, {"unit", t.unit}, {"delta", round6(t.delta)}});
  nlohmann::json j{
      {"n", a.allocation.size()},
      {"kappa", a.kappa},
      {"treated", a.allocation.treated_indices()},
      {"welfare_va", round6(a.welfare_va)},
      {"welfare_va_per_person", round6(a.welfare_va / n)},
      {"trace", trace},
  };
  if (a.welfare_mcmc) {
    j["welfare_mcmc"] = round6(a.welfare_mcmc->estimate * n);
    j["welfare_mcmc_per_person"] = round6(a.welfare_mcmc->estimate);
    j["welfare_mcmc_stderr"] = round6(a.welfare_mcmc->std_error);
  }
  return j;
}

/// One line of the validation table.
struct ValidationRow {
  GridPoint point;
  std::size_t replication = 0;
  std::string check;
  double value = 0.0;
  /// Threshold the value is compared against; absent for informational rows.
  std::optional<double> threshold;
  bool pass = true;
};

struct ValidationReport {
  std::vector<ValidationRow> rows;

  bool all_pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const ValidationRow& r) { return r.pass; });
  }

  void write_csv(std::ostream& os) const {
    os << "paramSet,density,n,replication,check,value,threshold,pass\n";
    for (const auto& r : rows) {
      os << r.point.param_set << ',' << fmt6(r.point.density) << ',' << r.point.n << ',' << r.replication << ','
         << r.check << ',' << fmt6(r.value) << ',' << (r.threshold ? fmt6(*r.threshold) : "NA") << ','
         << (r.threshold ? (r.pass ? "pass" : "fail") : "info") << '\n';
    }
  }
};

inline constexpr std::size_t kStationarityCap = 10;

/// Cross-checks the evaluators on simulated instances: VA against MCMC for the
/// greedy and no-treatment rules, and on small networks against the exact law
/// together with stationarity, the KL bound, Pinsker and the greedy guarantee.
inline ValidationReport validate(const ExperimentConfig& cfg) {
  cfg.validate();
  ValidationReport report;
  for (const GridPoint& g : grid(cfg)) {
    std::vector<std::vector<ValidationRow>> per_rep(cfg.replications);
    parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
      const std::uint64_t seed = replication_seed(cfg, g, r);
      const Instance inst = simulated_instance(cfg, g, seed);
      const std::size_t kappa = cfg.kappa_for(g.n);
      const double n = static_cast<double>(g.n);
      auto& rows = per_rep[r];
      auto add = [&](std::string check, double value, std::optional<double> threshold, bool pass) {
        rows.push_back({g, r, std::move(check), value, threshold, pass});
      };
      const auto g_res = greedy(inst, kappa, cfg.solver, derive_seed(seed, {7}));
      const bool small = g.n <= cfg.exact_cap;
      const std::pair<std::string, Allocation> rules[] = {{"greedy", g_res.allocation}, {"none", no_treatment(inst)}};
      for (std::size_t k = 0; k < 2; ++k) {
        const auto& [name, d] = rules[k];
        const auto sol = solve_mean_field(inst, d, cfg.solver, derive_seed(seed, {8, k}));
        const double va = sol.welfare() / n;
        const double mc =
            mcmc_welfare(inst, d, cfg.sampler.sweeps, cfg.sampler.burn_in, derive_seed(seed, {5, k})).estimate;
        add("va_mcmc_gap_" + name, std::abs(va - mc), cfg.tolerance, std::abs(va - mc) <= cfg.tolerance);
        if (!small) continue;
        const WeightSystem w = weights(inst, d);
        EnumerateOptions opt;
        opt.cap = cfg.exact_cap;
        opt.marginals = false;
        const auto exact = enumerate_gibbs(w, opt);
        const double ex = exact.expected_total / n;
        add("mcmc_exact_gap_" + name, std::abs(mc - ex), std::nullopt, true);
        const double kl = exact_kl(sol.mu, w, exact);
        const double kl_bound = kl_upper_bound(inst);
        add("kl_exact_" + name, kl, kl_bound, kl >= -1e-9 && kl <= kl_bound);
        // Pinsker on the per-person scale: |W − W̃|/N ≤ sqrt(2 KL)/N.
        const double pinsker = std::sqrt(2.0 * std::max(kl, 0.0)) / n;
        add("va_exact_gap_" + name, std::abs(va - ex), pinsker, std::abs(va - ex) <= pinsker + 1e-12);
        if (g.n <= kStationarityCap) {
          const double st = stationarity_check(w, kStationarityCap);
          add("stationarity_l1_" + name, st, 1e-12, st <= 1e-12);
        }
      }
      if (count_subsets_up_to(g.n, std::min(kappa, g.n)) <= cfg.bfva_cap) {
        const auto bv = bfva(inst, kappa, cfg.solver, derive_seed(seed, {6}), cfg.bfva_cap);
        const BoundsReport b = bounds_report(inst, bv.welfare);
        const double ratio = bv.welfare > 0.0 ? g_res.welfare() / bv.welfare : 1.0;
        add("greedy_guarantee_ratio", ratio, b.guarantee_factor, ratio >= b.guarantee_factor - 1e-12);
      }
    });
    for (auto& rows : per_rep) {
      for (auto& row : rows) report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace netalloc
