#pragma once

// Cascaded flight controller: position P -> velocity PID -> flatness-based
// attitude/thrust extraction -> quaternion attitude P -> body-rate PID ->
// control-allocation mixer.

#include <optional>
#include <string>
#include <string_view>

#include "coaxsim/dynamics.hpp"
#include "coaxsim/vehicle_model.hpp"

namespace coaxsim {

class ConfigFile;

struct PidGains {
  Eigen::Vector3d kp{Eigen::Vector3d::Zero()};
  Eigen::Vector3d ki{Eigen::Vector3d::Zero()};
  Eigen::Vector3d kd{Eigen::Vector3d::Zero()};
  double integrator_limit{0.0};      // per component, output units
  double derivative_cutoff_hz{0.0};  // <= 0 disables the filter
};

/// Three-axis PID. The integrator is clamped to +/- integrator_limit and the
/// derivative acts on the measurement through a first-order low-pass.
class Pid {
 public:
  Pid() = default;
  explicit Pid(const PidGains& gains) : gains_(gains) {}

  Eigen::Vector3d update(const Eigen::Vector3d& error, const Eigen::Vector3d& measurement, double dt);
  void reset();

  const PidGains& gains() const { return gains_; }
  const Eigen::Vector3d& integral() const { return integral_; }

 private:
  PidGains gains_{};
  Eigen::Vector3d integral_{Eigen::Vector3d::Zero()};
  Eigen::Vector3d derivative_{Eigen::Vector3d::Zero()};
  Eigen::Vector3d last_measurement_{Eigen::Vector3d::Zero()};
  bool primed_{false};
};

struct ControllerGains {
  Eigen::Vector3d position_kp{Eigen::Vector3d::Zero()};
  PidGains velocity{};
  Eigen::Vector3d attitude_kp{Eigen::Vector3d::Zero()};
  PidGains rate{};
  double position_rate_hz{100.0};
  double attitude_rate_hz{500.0};
};

ControllerGains controller_gains_from_config(const ConfigFile& cfg);
void write_controller_gains(ConfigFile& cfg, const ControllerGains& gains);
/// Empty string when valid; otherwise a description of the first problem.
std::string check_gains(const ControllerGains& gains, double physics_dt);

enum class SwashConfig { Dual, SingleUpper, SingleLower };

const char* to_string(SwashConfig c);
/// Accepts "dual", "single-upper", "single-lower" (underscores also accepted).
SwashConfig parse_swash_config(std::string_view text);
bool is_active(SwashConfig config, RotorId rotor);

Eigen::Vector3d position_loop(const Eigen::Vector3d& desired_position,
                              const Eigen::Vector3d& desired_velocity,
                              const Eigen::Vector3d& position, const Eigen::Vector3d& kp);

/// a_d = feedforward + PID(v_d - v).
Eigen::Vector3d velocity_loop(Pid& pid, const Eigen::Vector3d& desired_velocity,
                              const Eigen::Vector3d& velocity,
                              const Eigen::Vector3d& feedforward_accel, double dt);

struct AttitudeTarget {
  Eigen::Quaterniond attitude{Eigen::Quaterniond::Identity()};
  double thrust{0.0};
};

/// Solves m a_d = m g + R_d T_d for the body thrust axis and magnitude, with
/// heading fixed by `yaw`. Returns nullopt when the demanded specific force
/// is too small to define a thrust direction.
std::optional<AttitudeTarget> accel_to_attitude(const Eigen::Vector3d& desired_accel, double yaw,
                                                double mass, double gravity);

/// Body-rate setpoint from the shortest-path quaternion error q^-1 * q_d.
Eigen::Vector3d attitude_loop(const Eigen::Quaterniond& desired, const Eigen::Quaterniond& current,
                              const Eigen::Vector3d& kp);

Eigen::Vector3d rate_loop(Pid& pid, const Eigen::Vector3d& desired_rate,
                          const Eigen::Vector3d& rate, double dt);

struct MixerOutput {
  PlantInput input;
  PerRotor<double> thrusts{0.0, 0.0};
  FlapState flaps{};
  SaturationEvents saturation;

  bool saturated() const { return !saturation.empty(); }
};

/// Linear map from per-rotor (sin alpha, sin beta) to roll/pitch moment for a
/// rotor carrying `thrust`; exact when hubs lie on the body z axis.
Eigen::Matrix2d cyclic_moment_matrix(const VehicleParams& params, RotorId rotor, double thrust);

/// Rotor speeds for total thrust `thrust` and yaw moment `yaw_moment`
/// before any clamping: returns squared speeds.
PerRotor<double> solve_speed_squares(const VehicleParams& params, double thrust, double yaw_moment);

MixerOutput mixer(const ControlCommand& command, SwashConfig config, const VehicleParams& params,
                  bool enforce_limits = true);

/// Plant input holding hover at the vehicle's weight.
PlantInput hover_input(const VehicleParams& params);

class CascadedController {
 public:
  CascadedController(const ControllerGains& gains, const VehicleParams& params, SwashConfig config,
                     bool enforce_limits = true);

  void reset();

  /// Outer loop: position P, velocity PID, thrust/attitude extraction.
  void update_position(const RigidBodyState& measured, const TrajectorySample& reference, double dt);

  /// Inner loop: attitude P, rate PID, mixer.
  const MixerOutput& update_attitude(const RigidBodyState& measured, double dt);

  const ControlCommand& command() const { return command_; }
  const AttitudeTarget& attitude_target() const { return target_; }
  const Eigen::Vector3d& desired_accel() const { return desired_accel_; }
  const MixerOutput& mixer_output() const { return mixer_output_; }
  bool thrust_direction_lost() const { return degenerate_; }
  SwashConfig config() const { return config_; }

 private:
  ControllerGains gains_;
  VehicleParams params_;
  SwashConfig config_;
  bool enforce_limits_;
  Pid velocity_pid_;
  Pid rate_pid_;
  AttitudeTarget target_{};
  Eigen::Vector3d desired_accel_{Eigen::Vector3d::Zero()};
  ControlCommand command_{};
  MixerOutput mixer_output_{};
  bool degenerate_{false};
};

}  // namespace coaxsim
