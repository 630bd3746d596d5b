#pragma once

// Experiment orchestration: closed-loop runs, metrics, configuration
// comparisons, parameter sweeps and the cyclic-torque bench.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "coaxsim/config_file.hpp"
#include "coaxsim/controller.hpp"
#include "coaxsim/trajectory.hpp"

namespace coaxsim {

// ---------------------------------------------------------------------------
// Power

/// Electrical power P = a + b * T^1.5 for total rotor thrust T.
struct PowerModel {
  double idle{0.0};
  double thrust_coeff{0.0};

  double operator()(double total_thrust) const;
};

struct HoverPowerPoint {
  double mass_kg{0.0};
  double power_w{0.0};
};

/// Two-point fit of the power model through hover measurements.
PowerModel fit_power_model(const HoverPowerPoint& a, const HoverPowerPoint& b, double gravity);

double power_draw(double total_thrust, const VehicleParams& params);

/// Minutes of hover from `energy_wh` at constant `power_w`.
double hover_minutes(double energy_wh, double power_w);

// ---------------------------------------------------------------------------
// Logs and metrics

struct SaturationRecord {
  double time{0.0};
  SaturationChannel channel{SaturationChannel::EleUp};
  double requested{0.0};
  double applied{0.0};
};

struct LogSample {
  double time{0.0};
  Eigen::Vector3d position{Eigen::Vector3d::Zero()};
  Eigen::Vector3d reference{Eigen::Vector3d::Zero()};
  PerRotor<Cyclic> cyclic_cmd{};
  double power{0.0};
  bool finite{true};
};

struct RunLog {
  std::vector<LogSample> samples;
  std::vector<SaturationRecord> saturation;
  double mass_kg{0.0};
  SwashConfig config{SwashConfig::Dual};
  double window_start{0.0};
  double divergence_threshold{3.0};
  bool aborted{false};  // stopped early (divergence or non-finite state)
};

struct MetricsReport {
  double rmse{0.0};
  double mae{0.0};
  double roll_min{0.0};
  double roll_max{0.0};
  double pitch_min{0.0};
  double pitch_max{0.0};
  double avg_power{0.0};
  double max_power{0.0};
  double efficiency{0.0};  // g/W
  bool completed{true};
  std::size_t saturation_count{0};
  std::vector<SaturationRecord> saturation_events;  // first kMaxStoredEvents
  double window_start{0.0};
  double window_end{0.0};
  std::size_t window_samples{0};
  double mass_g{0.0};
  std::string config;

  static constexpr std::size_t kMaxStoredEvents = 1000;
};

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tracking errors over samples with time >= window_start (the whole log if
/// none qualify); cyclic extrema are the mixer's normalized commands on the
/// active swashplates, roll = aileron and pitch = elevator.
MetricsReport compute_metrics(const RunLog& log);

void write_metrics(std::ostream& out, const MetricsReport& report);

// ---------------------------------------------------------------------------
// Experiments

struct NoiseSpec {
  double position_std{0.0};
  double velocity_std{0.0};
  double attitude_std{0.0};
  double rate_std{0.0};

  bool enabled() const {
    return position_std > 0 || velocity_std > 0 || attitude_std > 0 || rate_std > 0;
  }
};

struct ExperimentConfig {
  VehicleParams vehicle;
  ControllerGains gains;
  SwashConfig swash{SwashConfig::Dual};
  Reference reference{HoverReference{}};
  double duration{10.0};
  double physics_dt{0.001};
  std::uint64_t seed{1};
  NoiseSpec noise;
  double divergence_threshold{3.0};
  bool saturation_enabled{true};
  Eigen::Vector3d initial_offset{Eigen::Vector3d::Zero()};
  std::string name{"run"};
  std::filesystem::path output_dir;  // empty: no files written
};

ExperimentConfig experiment_from_config(const ConfigFile& cfg, const std::filesystem::path& base_dir);

struct ExperimentResult {
  MetricsReport metrics;
  std::filesystem::path telemetry_path;
  std::filesystem::path metrics_path;
};

/// Deterministic closed-loop run. Writes `<name>_telemetry.csv` and
/// `<name>_metrics.txt` into output_dir when set, and streams telemetry to
/// `telemetry` when non-null.
ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* telemetry = nullptr);

/// Fixed telemetry CSV header.
const std::string& telemetry_header();

struct ComparisonRow {
  SwashConfig config;
  MetricsReport metrics;
};

std::vector<ComparisonRow> compare_configs(const ExperimentConfig& base,
                                           std::span<const SwashConfig> configs, bool parallel = false);

/// Table III-style text table with relative deltas against the first row.
std::string format_comparison(const std::vector<ComparisonRow>& rows);

struct SweepRow {
  double value{0.0};
  MetricsReport metrics;
  double max_cyclic_torque{0.0};  // bench torque at hover thrust for this row's config
};

class SweepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One run per value of `section.key` (a scalar entry of `cfg`). The path is
/// checked before any run starts.
std::vector<SweepRow> sweep(const ConfigFile& cfg, const std::filesystem::path& base_dir,
                            const std::string& path, std::span<const double> values,
                            bool parallel = false);

void write_sweep_csv(std::ostream& out, const std::string& path, const std::vector<SweepRow>& rows);

// ---------------------------------------------------------------------------
// Cyclic torque bench

/// Roll/pitch torque magnitude at full cyclic deflection with total thrust
/// `total_thrust` split for zero yaw moment. Averages both channels and
/// both deflection signs. Dual deflects both swashplates fully.
double max_cyclic_torque(const VehicleParams& params, SwashConfig config, double total_thrust);

double max_total_thrust(const VehicleParams& params);

struct LinearFit {
  double slope{0.0};
  double intercept{0.0};
  double r_squared{0.0};
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct BenchResult {
  std::vector<double> normalized_thrust;
  std::vector<double> dual;
  std::vector<double> single_upper;
  std::vector<double> single_lower;
  LinearFit dual_fit, upper_fit, lower_fit;
  double increase_over_upper{0.0};  // fractional, averaged over thrust levels
  double increase_over_lower{0.0};
};

BenchResult bench_torque(const VehicleParams& params, std::span<const double> normalized_thrust);

std::string format_bench(const BenchResult& result);

/// Chooses the flap stiffness and the lower rotor's flap gain (elevator and
/// aileron alike) so the bench's Dual torque exceeds SingleUpper and
/// SingleLower by the requested fractions. Hub positions and the upper gains
/// are kept. Throws if the solve does not converge.
VehicleParams calibrate_cyclic_geometry(const VehicleParams& params, double increase_over_upper,
                                        double increase_over_lower);

}  // namespace coaxsim
