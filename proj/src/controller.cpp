#include "coaxsim/controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coaxsim/config_file.hpp"

namespace coaxsim {

Eigen::Vector3d Pid::update(const Eigen::Vector3d& error, const Eigen::Vector3d& measurement,
                            double dt) {
  const double limit = gains_.integrator_limit;
  integral_ = (integral_ + gains_.ki.cwiseProduct(error) * dt).cwiseMax(-limit).cwiseMin(limit);

  if (primed_) {
    const Eigen::Vector3d raw = -(measurement - last_measurement_) / dt;
    if (gains_.derivative_cutoff_hz > 0.0) {
      const double rc = 1.0 / (2.0 * kPi * gains_.derivative_cutoff_hz);
      derivative_ += (dt / (dt + rc)) * (raw - derivative_);
    } else {
      derivative_ = raw;
    }
  }
  last_measurement_ = measurement;
  primed_ = true;

  return gains_.kp.cwiseProduct(error) + integral_ + gains_.kd.cwiseProduct(derivative_);
}

void Pid::reset() {
  integral_.setZero();
  derivative_.setZero();
  last_measurement_.setZero();
  primed_ = false;
}

namespace {

PidGains pid_from_config(const ConfigFile& cfg, const std::string& prefix) {
  PidGains g;
  g.kp = cfg.get_vec3(prefix + "_kp");
  g.ki = cfg.get_vec3(prefix + "_ki");
  g.kd = cfg.get_vec3(prefix + "_kd");
  g.integrator_limit = cfg.get_double(prefix + "_integrator_limit");
  g.derivative_cutoff_hz = cfg.get_double(prefix + "_derivative_cutoff_hz", 0.0);
  return g;
}

void write_pid(ConfigFile& cfg, const std::string& prefix, const PidGains& g) {
  cfg.set(prefix + "_kp", g.kp);
  cfg.set(prefix + "_ki", g.ki);
  cfg.set(prefix + "_kd", g.kd);
  cfg.set(prefix + "_integrator_limit", g.integrator_limit);
  cfg.set(prefix + "_derivative_cutoff_hz", g.derivative_cutoff_hz);
}

bool nonnegative(const PidGains& g) {
  return (g.kp.array() >= 0).all() && (g.ki.array() >= 0).all() && (g.kd.array() >= 0).all() &&
         g.integrator_limit >= 0.0;
}

bool divides(double period, double dt) {
  const double ratio = period / dt;
  return ratio >= 1.0 - 1e-9 && std::abs(ratio - std::round(ratio)) < 1e-6;
}

}  // namespace

ControllerGains controller_gains_from_config(const ConfigFile& cfg) {
  ControllerGains g;
  g.position_kp = cfg.get_vec3("controller.position_kp");
  g.velocity = pid_from_config(cfg, "controller.velocity");
  g.attitude_kp = cfg.get_vec3("controller.attitude_kp");
  g.rate = pid_from_config(cfg, "controller.rate");
  g.position_rate_hz = cfg.get_double("controller.position_rate_hz", g.position_rate_hz);
  g.attitude_rate_hz = cfg.get_double("controller.attitude_rate_hz", g.attitude_rate_hz);
  return g;
}

void write_controller_gains(ConfigFile& cfg, const ControllerGains& g) {
  cfg.set("controller.position_kp", g.position_kp);
  write_pid(cfg, "controller.velocity", g.velocity);
  cfg.set("controller.attitude_kp", g.attitude_kp);
  write_pid(cfg, "controller.rate", g.rate);
  cfg.set("controller.position_rate_hz", g.position_rate_hz);
  cfg.set("controller.attitude_rate_hz", g.attitude_rate_hz);
}

std::string check_gains(const ControllerGains& g, double physics_dt) {
  if ((g.position_kp.array() < 0).any() || (g.attitude_kp.array() < 0).any() ||
      !nonnegative(g.velocity) || !nonnegative(g.rate)) {
    return "controller gains must be nonnegative";
  }
  if (!(g.position_rate_hz > 0) || !(g.attitude_rate_hz > 0)) return "loop rates must be positive";
  if (!divides(1.0 / g.position_rate_hz, physics_dt) || !divides(1.0 / g.attitude_rate_hz, physics_dt)) {
    return "controller periods must be integer multiples of the physics step";
  }
  return {};
}

const char* to_string(SwashConfig c) {
  switch (c) {
    case SwashConfig::Dual: return "dual";
    case SwashConfig::SingleUpper: return "single-upper";
    case SwashConfig::SingleLower: return "single-lower";
  }
  return "unknown";
}

SwashConfig parse_swash_config(std::string_view text) {
  std::string s(text);
  std::replace(s.begin(), s.end(), '_', '-');
  if (s == "dual") return SwashConfig::Dual;
  if (s == "single-upper") return SwashConfig::SingleUpper;
  if (s == "single-lower") return SwashConfig::SingleLower;
  throw std::invalid_argument("unknown swashplate configuration: " + std::string(text));
}

bool is_active(SwashConfig config, RotorId rotor) {
  switch (config) {
    case SwashConfig::Dual: return true;
    case SwashConfig::SingleUpper: return rotor == RotorId::Upper;
    case SwashConfig::SingleLower: return rotor == RotorId::Lower;
  }
  return false;
}

Eigen::Vector3d position_loop(const Eigen::Vector3d& desired_position,
                              const Eigen::Vector3d& desired_velocity,
                              const Eigen::Vector3d& position, const Eigen::Vector3d& kp) {
  return desired_velocity + kp.cwiseProduct(desired_position - position);
}

Eigen::Vector3d velocity_loop(Pid& pid, const Eigen::Vector3d& desired_velocity,
                              const Eigen::Vector3d& velocity,
                              const Eigen::Vector3d& feedforward_accel, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("velocity loop dt must be positive");
  return feedforward_accel + pid.update(desired_velocity - velocity, velocity, dt);
}

std::optional<AttitudeTarget> accel_to_attitude(const Eigen::Vector3d& desired_accel, double yaw,
                                                double mass, double gravity) {
  const Eigen::Vector3d specific = desired_accel - Eigen::Vector3d(0.0, 0.0, -gravity);
  const double norm = specific.norm();
  if (!(norm > 1e-6 * std::max(gravity, 1.0))) return std::nullopt;

  const Eigen::Vector3d z_b = specific / norm;
  const Eigen::Vector3d x_c(std::cos(yaw), std::sin(yaw), 0.0);
  Eigen::Vector3d y_b = z_b.cross(x_c);
  if (y_b.norm() < 1e-9) {
    // Thrust axis horizontal along the heading: fall back to the lateral axis.
    y_b = Eigen::Vector3d(-std::sin(yaw), std::cos(yaw), 0.0);
  }
  y_b.normalize();
  const Eigen::Vector3d x_b = y_b.cross(z_b);

  Eigen::Matrix3d R;
  R.col(0) = x_b;
  R.col(1) = y_b;
  R.col(2) = z_b;

  AttitudeTarget out;
  out.attitude = Eigen::Quaterniond(R).normalized();
  out.thrust = mass * norm;
  return out;
}

Eigen::Vector3d attitude_loop(const Eigen::Quaterniond& desired, const Eigen::Quaterniond& current,
                              const Eigen::Vector3d& kp) {
  Eigen::Quaterniond err = current.conjugate() * desired;
  if (err.w() < 0.0) err.coeffs() = -err.coeffs();
  return 2.0 * kp.cwiseProduct(err.vec());
}

Eigen::Vector3d rate_loop(Pid& pid, const Eigen::Vector3d& desired_rate,
                          const Eigen::Vector3d& rate, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("rate loop dt must be positive");
  return pid.update(desired_rate - rate, rate, dt);
}

CascadedController::CascadedController(const ControllerGains& gains, const VehicleParams& params,
                                       SwashConfig config, bool enforce_limits)
    : gains_(gains),
      params_(params),
      config_(config),
      enforce_limits_(enforce_limits),
      velocity_pid_(gains.velocity),
      rate_pid_(gains.rate) {
  require_valid(params_);
  reset();
}

void CascadedController::reset() {
  velocity_pid_.reset();
  rate_pid_.reset();
  target_ = AttitudeTarget{Eigen::Quaterniond::Identity(), params_.weight()};
  desired_accel_.setZero();
  command_ = ControlCommand{params_.weight(), Eigen::Vector3d::Zero()};
  mixer_output_ = mixer(command_, config_, params_, enforce_limits_);
  degenerate_ = false;
}

void CascadedController::update_position(const RigidBodyState& measured,
                                         const TrajectorySample& reference, double dt) {
  const Eigen::Vector3d v_d =
      position_loop(reference.position, reference.velocity, measured.position, gains_.position_kp);
  desired_accel_ = velocity_loop(velocity_pid_, v_d, measured.velocity, reference.acceleration, dt);

  if (auto target = accel_to_attitude(desired_accel_, reference.yaw, params_.mass, params_.gravity)) {
    target_ = *target;
    degenerate_ = false;
  } else {
    // Hold the previous attitude; project the demand on its thrust axis.
    const Eigen::Vector3d z_b = target_.attitude * Eigen::Vector3d::UnitZ();
    target_.thrust = std::max(0.0, params_.mass * (desired_accel_ - params_.gravity_vector()).dot(z_b));
    degenerate_ = true;
  }
  command_.thrust = target_.thrust;
}

const MixerOutput& CascadedController::update_attitude(const RigidBodyState& measured, double dt) {
  const Eigen::Vector3d rate_sp = attitude_loop(target_.attitude, measured.attitude, gains_.attitude_kp);
  command_.moment = rate_loop(rate_pid_, rate_sp, measured.angular_rate, dt);
  mixer_output_ = mixer(command_, config_, params_, enforce_limits_);
  return mixer_output_;
}

}  // namespace coaxsim
