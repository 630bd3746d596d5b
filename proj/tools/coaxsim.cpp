// Command-line front end for the coaxial bi-copter simulator.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "coaxsim/harness.hpp"

namespace {

using namespace coaxsim;

struct CommonOptions {
  std::string config;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  bool allow_divergence{false};
  bool parallel{false};
};

ExperimentConfig load_experiment(const CommonOptions& opt, ConfigFile* raw = nullptr) {
  const std::filesystem::path path(opt.config);
  ConfigFile cfg = ConfigFile::load(path);
  if (opt.seed) cfg.set("experiment.seed", static_cast<int>(*opt.seed));
  if (opt.dt) cfg.set("experiment.physics_dt", *opt.dt);
  if (!opt.output_dir.empty()) cfg.set("experiment.output_dir", std::filesystem::absolute(opt.output_dir).string());
  if (!cfg.has("experiment.name")) cfg.set("experiment.name", path.stem().string());
  if (raw) *raw = cfg;
  return experiment_from_config(cfg, path.parent_path());
}

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("config", opt.config, "Scenario configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--output-dir", opt.output_dir, "Directory for telemetry and metrics files");
  cmd->add_option("--seed", opt.seed, "Override the noise seed");
  cmd->add_option("--dt", opt.dt, "Override the physics step (s)");
  cmd->add_flag("--allow-divergence", opt.allow_divergence, "Exit with status 0 even when a run diverges");
}

int divergence_status(bool any_diverged, const CommonOptions& opt) {
  if (any_diverged && !opt.allow_divergence) {
    std::cerr << "coaxsim: at least one run diverged\n";
    return 2;
  }
  return 0;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) out.push_back(parse_double(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coaxial bi-copter swashplate simulator"};
  app.require_subcommand(1);

  CommonOptions opt;

  auto* run = app.add_subcommand("run", "Run one closed-loop experiment");
  add_common(run, opt);

  auto* compare = app.add_subcommand("compare", "Run one scenario under several swashplate configurations");
  add_common(compare, opt);
  std::string configs = "dual,single-upper,single-lower";
  compare->add_option("--configs", configs, "Comma-separated configurations");
  compare->add_flag("--parallel", opt.parallel, "Run configurations concurrently");

  auto* sweep_cmd = app.add_subcommand("sweep", "Repeat a scenario over a grid of one parameter");
  add_common(sweep_cmd, opt);
  std::string param, values_text;
  sweep_cmd->add_option("--param", param, "Parameter as section.key")->required();
  sweep_cmd->add_option("--values", values_text, "Comma-separated values")->required();
  sweep_cmd->add_flag("--parallel", opt.parallel, "Run grid points concurrently");

  auto* bench = app.add_subcommand("bench-torque", "Maximum cyclic torque versus thrust");
  add_common(bench, opt);
  std::vector<double> targets;
  bench->add_option("--calibrate", targets,
                    "Fit flap stiffness and lower flap gain to two fractional increases "
                    "(over single-upper, over single-lower) and print the [vehicle] keys")
      ->expected(2);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const ExperimentConfig e = load_experiment(opt);
      const ExperimentResult r = run_experiment(e);
      write_metrics(std::cout, r.metrics);
      if (!r.telemetry_path.empty()) std::cout << "telemetry = " << r.telemetry_path.string() << '\n';
      return divergence_status(!r.metrics.completed, opt);
    }
    if (compare->parsed()) {
      const ExperimentConfig e = load_experiment(opt);
      std::vector<SwashConfig> list;
      std::istringstream in(configs);
      for (std::string item; std::getline(in, item, ',');) list.push_back(parse_swash_config(item));
      const auto rows = compare_configs(e, list, opt.parallel);
      std::cout << format_comparison(rows);
      bool diverged = false;
      for (const auto& r : rows) diverged = diverged || !r.metrics.completed;
      return divergence_status(diverged, opt);
    }
    if (sweep_cmd->parsed()) {
      ConfigFile cfg;
      load_experiment(opt, &cfg);
      const std::vector<double> values = parse_values(values_text);
      const auto rows = sweep(cfg, std::filesystem::path(opt.config).parent_path(), param, values, opt.parallel);
      if (!opt.output_dir.empty()) {
        std::filesystem::create_directories(opt.output_dir);
        std::ofstream f(std::filesystem::path(opt.output_dir) / "sweep.csv");
        write_sweep_csv(f, param, rows);
      }
      write_sweep_csv(std::cout, param, rows);
      bool diverged = false;
      for (const auto& r : rows) diverged = diverged || !r.metrics.completed;
      return divergence_status(diverged, opt);
    }
    if (bench->parsed()) {
      ExperimentConfig e = load_experiment(opt);
      if (!targets.empty()) {
        e.vehicle = calibrate_cyclic_geometry(e.vehicle, targets[0], targets[1]);
        const RotorParams& dw = e.vehicle.rotor(RotorId::Lower);
        std::cout << "[vehicle]\n"
                  << "flap_stiffness = " << format_double(e.vehicle.flap_stiffness) << '\n'
                  << "flap_gain_ele_dw = " << format_double(dw.flap_gain_ele) << '\n'
                  << "flap_gain_ail_dw = " << format_double(dw.flap_gain_ail) << "\n\n";
      }
      const double levels[] = {0.2, 0.35, 0.5, 0.65, 0.8};
      std::cout << format_bench(bench_torque(e.vehicle, levels));
      return 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "coaxsim: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
