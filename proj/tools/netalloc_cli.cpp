#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "netalloc/netalloc.hpp"

namespace {

using netalloc::ConfigError;
using netalloc::ExperimentConfig;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

struct Overrides {
  std::string config;
  std::optional<std::size_t> n;
  std::optional<double> density;
  std::optional<int> param_set;
  std::optional<double> kappa_frac;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> evaluator;
  std::optional<std::string> mode;
  std::optional<std::string> network;
  std::optional<std::string> covariates;
  std::optional<std::string> method;
  std::optional<std::size_t> threads;
  bool mcmc_check = false;
};

void add_common_flags(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--config", o.config, "JSON configuration file");
  cmd.add_option("--n", o.n, "network size");
  cmd.add_option("--density", o.density, "Erdos-Renyi density");
  cmd.add_option("--param-set", o.param_set, "built-in parameter set")->check(CLI::IsMember({1, 2}));
  cmd.add_option("--kappa-frac", o.kappa_frac, "capacity as a fraction of N");
  cmd.add_option("--reps", o.reps, "replications");
  cmd.add_option("--seed", o.seed, "master seed");
  cmd.add_option("--out", o.out, "output directory");
  cmd.add_option("--evaluator", o.evaluator, "welfare evaluator")
      ->check(CLI::IsMember({"exact", "va", "mcmc"}));
  cmd.add_option("--mode", o.mode, "mean-field sweep order")->check(CLI::IsMember({"gauss-seidel", "jacobi"}));
  cmd.add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

ExperimentConfig resolve(const std::string& mode, const Overrides& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : netalloc::load_config(o.config);
  c.mode = mode;
  if (o.n) c.sizes = {*o.n};
  if (o.density) c.densities = {*o.density};
  if (o.param_set) c.param_sets = {*o.param_set};
  if (o.kappa_frac) {
    c.kappa_fraction = *o.kappa_frac;
    c.kappa.reset();
  }
  if (o.reps) c.replications = *o.reps;
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out_dir = *o.out;
  if (o.evaluator) c.evaluators = {netalloc::parse_evaluator(*o.evaluator)};
  if (o.mode) c.solver.mode = netalloc::parse_sweep_mode(*o.mode);
  if (o.network) c.network_path = *o.network;
  if (o.covariates) c.covariates_path = *o.covariates;
  if (o.method) c.allocate_method = netalloc::parse_method(*o.method);
  if (o.threads) c.threads = *o.threads;
  if (o.mcmc_check) c.mcmc_check = true;
  c.validate();
  return c;
}

std::ofstream open_output(const ExperimentConfig& c, const std::string& name) {
  std::filesystem::create_directories(c.out_dir);
  const auto path = std::filesystem::path(c.out_dir) / name;
  std::ofstream out(path);
  if (!out) throw netalloc::Error("cannot write " + path.string());
  return out;
}

int run_simulate(const ExperimentConfig& c) {
  const auto report = netalloc::simulate(c);
  auto table = open_output(c, "welfare.csv");
  report.write_csv(table);
  auto detail = open_output(c, "welfare_instances.csv");
  report.write_instances_csv(detail);
  report.write_csv(std::cout);
  return kExitOk;
}

netalloc::Instance load_instance(const ExperimentConfig& c) {
  try {
    return netalloc::instance_from_files(c);
  } catch (const ConfigError&) {
    throw;
  } catch (const netalloc::Error& e) {
    throw ConfigError(e.what());
  }
}

int run_allocate(const ExperimentConfig& c) {
  const auto inst = load_instance(c);
  const auto result = netalloc::run_allocation(inst, c);
  auto alloc = open_output(c, "allocation.json");
  alloc << netalloc::to_json(result).dump(2) << '\n';
  auto bounds = open_output(c, "bounds.json");
  bounds << netalloc::to_json(result.bounds).dump(2) << '\n';
  std::cout << netalloc::to_json(result).dump(2) << '\n';
  return kExitOk;
}

int run_validate(const ExperimentConfig& c) {
  const auto report = netalloc::validate(c);
  auto table = open_output(c, "validation.csv");
  report.write_csv(table);
  std::size_t failed = 0;
  for (const auto& r : report.rows) {
    if (!r.pass) {
      ++failed;
      std::cerr << "FAIL " << r.check << " n=" << r.point.n << " rep=" << r.replication
                << " value=" << netalloc::fmt6(r.value) << '\n';
    }
  }
  std::cout << report.rows.size() << " checks, " << failed << " failed\n";
  return failed == 0 ? kExitOk : kExitValidation;
}

int run_bounds(const ExperimentConfig& c) {
  nlohmann::json out;
  if (!c.network_path.empty()) {
    const auto inst = load_instance(c);
    out = netalloc::to_json(netalloc::bounds_for(inst, c.kappa_for(inst.size()), c, netalloc::derive_seed(c.seed, {3})));
  } else {
    out = nlohmann::json::array();
    for (const auto& g : netalloc::grid(c)) {
      for (std::size_t r = 0; r < c.replications; ++r) {
        const auto seed = netalloc::replication_seed(c, g, r);
        const auto inst = netalloc::simulated_instance(c, g, seed);
        auto j = netalloc::to_json(netalloc::bounds_for(inst, c.kappa_for(g.n), c, netalloc::derive_seed(seed, {6})));
        j["paramSet"] = g.param_set;
        j["density"] = netalloc::round6(g.density);
        j["n"] = g.n;
        j["replication"] = r;
        out.push_back(std::move(j));
      }
    }
  }
  auto file = open_output(c, "bounds.json");
  file << out.dump(2) << '\n';
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Treatment allocation on networks with equilibrium spillovers"};
  app.require_subcommand(1);

  Overrides sim_o, alloc_o, val_o, bounds_o;
  auto* sim = app.add_subcommand("simulate", "replicate the benchmark welfare tables");
  add_common_flags(*sim, sim_o);

  auto* alloc = app.add_subcommand("allocate", "compute an allocation for a network and covariates");
  add_common_flags(*alloc, alloc_o);
  alloc->add_option("--network", alloc_o.network, "edge-list file");
  alloc->add_option("--covariates", alloc_o.covariates, "covariate CSV");
  alloc->add_option("--method", alloc_o.method, "optimiser")
      ->check(CLI::IsMember({"greedy", "bfva", "brute", "random", "none"}));
  alloc->add_flag("--mcmc-check", alloc_o.mcmc_check, "cross-check the final welfare by MCMC");

  auto* val = app.add_subcommand("validate", "cross-check VA, MCMC and the exact law");
  add_common_flags(*val, val_o);

  auto* bnd = app.add_subcommand("bounds", "emit the closed-form bound report");
  add_common_flags(*bnd, bounds_o);
  bnd->add_option("--network", bounds_o.network, "edge-list file");
  bnd->add_option("--covariates", bounds_o.covariates, "covariate CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (sim->parsed()) return run_simulate(resolve("simulate", sim_o));
    if (alloc->parsed()) return run_allocate(resolve("allocate", alloc_o));
    if (val->parsed()) return run_validate(resolve("validate", val_o));
    if (bnd->parsed()) return run_bounds(resolve("bounds", bounds_o));
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
