#include <cmath>
#include <fstream>
#include <future>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "coaxsim/harness.hpp"
#include "telemetry.hpp"

namespace coaxsim {

ExperimentConfig experiment_from_config(const ConfigFile& cfg, const std::filesystem::path& base_dir) {
  ExperimentConfig e;
  e.vehicle = vehicle_params_from_config(cfg);
  e.gains = controller_gains_from_config(cfg);
  e.swash = parse_swash_config(cfg.get_string("experiment.swash", "dual"));
  e.reference = reference_from_config(cfg, base_dir);
  e.duration = cfg.get_double("experiment.duration", e.duration);
  e.physics_dt = cfg.get_double("experiment.physics_dt", e.physics_dt);
  e.seed = static_cast<std::uint64_t>(cfg.get_int("experiment.seed", 1));
  e.noise.position_std = cfg.get_double("experiment.noise_position_std", 0.0);
  e.noise.velocity_std = cfg.get_double("experiment.noise_velocity_std", 0.0);
  e.noise.attitude_std = cfg.get_double("experiment.noise_attitude_std", 0.0);
  e.noise.rate_std = cfg.get_double("experiment.noise_rate_std", 0.0);
  e.divergence_threshold = cfg.get_double("experiment.divergence_threshold", e.divergence_threshold);
  e.saturation_enabled = cfg.get_bool("experiment.saturation", true);
  e.initial_offset = cfg.get_vec3("experiment.initial_offset", Eigen::Vector3d::Zero());
  e.name = cfg.get_string("experiment.name", e.name);
  const std::string out = cfg.get_string("experiment.output_dir", "");
  if (!out.empty()) {
    e.output_dir = out;
    if (e.output_dir.is_relative()) e.output_dir = base_dir / e.output_dir;
  }
  return e;
}

namespace {

class StateNoise {
 public:
  StateNoise(const NoiseSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {}

  RigidBodyState apply(const RigidBodyState& s) {
    if (!spec_.enabled()) return s;
    RigidBodyState m = s;
    m.position += draw(spec_.position_std);
    m.velocity += draw(spec_.velocity_std);
    const Eigen::Vector3d tilt = draw(spec_.attitude_std);
    if (tilt.norm() > 0.0) {
      m.attitude = (s.attitude * Eigen::Quaterniond(Eigen::AngleAxisd(tilt.norm(), tilt.normalized()))).normalized();
    }
    m.angular_rate += draw(spec_.rate_std);
    return m;
  }

 private:
  Eigen::Vector3d draw(double std) {
    if (std <= 0.0) return Eigen::Vector3d::Zero();
    std::normal_distribution<double> n(0.0, std);
    return {n(rng_), n(rng_), n(rng_)};
  }

  NoiseSpec spec_;
  std::mt19937_64 rng_;
};

int period_steps(double rate_hz, double dt) {
  return std::max(1, static_cast<int>(std::lround(1.0 / (rate_hz * dt))));
}

std::uint32_t flag_bits(const SaturationEvents& events) {
  std::uint32_t bits = 0;
  for (const auto& e : events) bits |= 1u << static_cast<int>(e.channel);
  return bits;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* telemetry) {
  require_valid(config.vehicle);
  if (!(config.duration > 0.0)) throw std::invalid_argument("experiment duration must be positive");
  if (!(config.physics_dt > 0.0)) throw std::invalid_argument("physics dt must be positive");
  if (auto err = check_gains(config.gains, config.physics_dt); !err.empty()) {
    throw std::invalid_argument(err);
  }

  const VehicleParams& params = config.vehicle;
  const double dt = config.physics_dt;
  const int pos_every = period_steps(config.gains.position_rate_hz, dt);
  const int att_every = period_steps(config.gains.attitude_rate_hz, dt);
  const auto steps = static_cast<long>(std::lround(config.duration / dt));
  const ActuatorLimits limits{config.saturation_enabled};

  ExperimentResult result;
  std::ofstream file;
  std::ostream* out = telemetry;
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    result.telemetry_path = config.output_dir / (config.name + "_telemetry.csv");
    result.metrics_path = config.output_dir / (config.name + "_metrics.txt");
    if (!out) {
      file.open(result.telemetry_path);
      if (!file) throw std::runtime_error("cannot write " + result.telemetry_path.string());
      out = &file;
    }
  }
  if (out) *out << telemetry_header() << '\n';

  CascadedController controller(config.gains, params, config.swash, config.saturation_enabled);
  StateNoise noise(config.noise, config.seed);

  const TrajectorySample start = sample(config.reference, 0.0);
  RigidBodyState state;
  state.position = start.position + config.initial_offset;
  state.velocity = start.velocity;
  state.attitude = Eigen::Quaterniond(Eigen::AngleAxisd(start.yaw, Eigen::Vector3d::UnitZ()));

  PlantInput input = controller.mixer_output().input;
  ActuatorState actuators = settled_actuators(input);

  RunLog log;
  log.mass_kg = params.mass;
  log.config = config.swash;
  log.window_start = settle_time(config.reference);
  log.divergence_threshold = config.divergence_threshold;
  log.samples.reserve(static_cast<std::size_t>(steps));

  SaturationEvents step_events;
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    step_events.clear();

    const RigidBodyState measured = noise.apply(state);
    if (k % pos_every == 0) {
      controller.update_position(measured, sample(config.reference, t), pos_every * dt);
    }
    if (k % att_every == 0) {
      const MixerOutput& mix = controller.update_attitude(measured, att_every * dt);
      input = mix.input;
      for (const auto& e : mix.saturation) {
        log.saturation.push_back({t, e.channel, e.requested, e.applied});
        step_events.push_back(e);
      }
    }
    actuators = actuator_step(actuators, input, dt, params, &step_events, limits);

    const double t_next = static_cast<double>(k + 1) * dt;
    bool finite = true;
    try {
      state = integrate_step(state, actuators, dt, params);
    } catch (const NonFiniteStateError&) {
      finite = false;
    }

    const TrajectorySample ref = sample(config.reference, t_next);
    double total_thrust = 0.0;
    for (RotorId id : kRotors) {
      total_thrust += rotor_thrust(actuators.rotor_speed[index(id)], params.rotor(id).thrust_coeff);
    }
    const double power = power_draw(total_thrust, params);

    LogSample s;
    s.time = t_next;
    s.position = state.position;
    s.reference = ref.position;
    s.cyclic_cmd = actuators.cyclic_cmd;
    s.power = power;
    s.finite = finite;
    log.samples.push_back(s);

    if (out) {
      detail::write_telemetry_row(*out, {t_next, &state, &ref, &actuators, &controller.command(), power,
                                         flag_bits(step_events)});
    }

    const double err = (state.position - ref.position).norm();
    if (!finite || !(err <= config.divergence_threshold)) {
      log.aborted = true;
      break;
    }
  }

  result.metrics = compute_metrics(log);
  if (!result.metrics_path.empty()) {
    std::ofstream m(result.metrics_path);
    write_metrics(m, result.metrics);
  }
  return result;
}

std::vector<ComparisonRow> compare_configs(const ExperimentConfig& base,
                                           std::span<const SwashConfig> configs, bool parallel) {
  if (configs.size() < 2) throw std::invalid_argument("compare needs at least two configurations");
  auto run_one = [&base](SwashConfig c, std::size_t slot) {
    ExperimentConfig e = base;
    e.swash = c;
    if (!e.output_dir.empty()) e.name = fmt::format("{}_{}_{}", base.name, slot, to_string(c));
    return ComparisonRow{c, run_experiment(e).metrics};
  };

  std::vector<ComparisonRow> rows;
  if (parallel) {
    std::vector<std::future<ComparisonRow>> jobs;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      jobs.push_back(std::async(std::launch::async, run_one, configs[i], i));
    }
    for (auto& j : jobs) rows.push_back(j.get());
  } else {
    for (std::size_t i = 0; i < configs.size(); ++i) rows.push_back(run_one(configs[i], i));
  }
  return rows;
}

std::string format_comparison(const std::vector<ComparisonRow>& rows) {
  std::string out = fmt::format("{:<14}{:>10}{:>10}{:>19}{:>19}{:>11}{:>11}{:>10}{:>11}{:>9}{:>9}{:>9}\n",
                                "config", "RMSE(m)", "MAE(m)", "roll min/max", "pitch min/max",
                                "avgP(W)", "maxP(W)", "eff(g/W)", "completed", "dRMSE%", "dMAE%",
                                "dAvgP%");
  if (rows.empty()) return out;
  const MetricsReport& ref = rows.front().metrics;
  auto delta = [](double v, double base) { return base != 0.0 ? 100.0 * (v - base) / base : 0.0; };
  for (const auto& row : rows) {
    const MetricsReport& m = row.metrics;
    out += fmt::format("{:<14}{:>10.4f}{:>10.4f}{:>19}{:>19}{:>11.2f}{:>11.2f}{:>10.4f}{:>11}{:>9.2f}{:>9.2f}{:>9.2f}\n",
                       to_string(row.config), m.rmse, m.mae,
                       fmt::format("{:.4f}/{:.4f}", m.roll_min, m.roll_max),
                       fmt::format("{:.4f}/{:.4f}", m.pitch_min, m.pitch_max), m.avg_power,
                       m.max_power, m.efficiency, m.completed ? "yes" : "no",
                       delta(m.rmse, ref.rmse), delta(m.mae, ref.mae), delta(m.avg_power, ref.avg_power));
  }
  return out;
}

std::vector<SweepRow> sweep(const ConfigFile& cfg, const std::filesystem::path& base_dir,
                            const std::string& path, std::span<const double> values, bool parallel) {
  if (values.empty()) throw SweepError("sweep grid is empty");
  if (path.find('.') == std::string::npos || !cfg.has(path)) {
    throw SweepError("sweep parameter does not resolve in config: " + path);
  }
  {
    std::istringstream probe(cfg.raw(path));
    std::string tok, extra;
    probe >> tok >> extra;
    try {
      parse_double(tok);
    } catch (const ConfigError&) {
      throw SweepError("sweep parameter is not numeric: " + path);
    }
    if (!extra.empty()) throw SweepError("sweep parameter is not a scalar: " + path);
  }

  // Build every configuration before running anything.
  std::vector<ExperimentConfig> runs;
  for (std::size_t i = 0; i < values.size(); ++i) {
    ConfigFile c = cfg;
    c.set(path, values[i]);
    ExperimentConfig e = experiment_from_config(c, base_dir);
    e.name = fmt::format("{}_sweep{}", e.name, i);
    runs.push_back(std::move(e));
  }

  auto run_one = [&](std::size_t i) {
    SweepRow row;
    row.value = values[i];
    row.metrics = run_experiment(runs[i]).metrics;
    row.max_cyclic_torque = max_cyclic_torque(runs[i].vehicle, runs[i].swash, runs[i].vehicle.weight());
    return row;
  };

  std::vector<SweepRow> rows;
  if (parallel) {
    std::vector<std::future<SweepRow>> jobs;
    for (std::size_t i = 0; i < runs.size(); ++i) jobs.push_back(std::async(std::launch::async, run_one, i));
    for (auto& j : jobs) rows.push_back(j.get());
  } else {
    for (std::size_t i = 0; i < runs.size(); ++i) rows.push_back(run_one(i));
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::string& path, const std::vector<SweepRow>& rows) {
  out << path
      << ",rmse_m,mae_m,roll_min,roll_max,pitch_min,pitch_max,avg_power_w,max_power_w,"
         "efficiency_g_per_w,completed,saturation_count,max_cyclic_torque_nm\n";
  for (const auto& r : rows) {
    const MetricsReport& m = r.metrics;
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.value, m.rmse, m.mae, m.roll_min,
                       m.roll_max, m.pitch_min, m.pitch_max, m.avg_power, m.max_power, m.efficiency,
                       m.completed ? 1 : 0, m.saturation_count, r.max_cyclic_torque);
  }
}

}  // namespace coaxsim
