#include "coaxsim/vehicle_model.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "coaxsim/config_file.hpp"

namespace coaxsim {

const char* to_string(RotorId r) { return r == RotorId::Upper ? "up" : "dw"; }

std::string ValidationReport::summary() const {
  if (ok()) return "ok";
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v;
  }
  return out;
}

ValidationReport validate_params(const VehicleParams& p) {
  ValidationReport report;
  auto check = [&report](bool cond, std::string what) {
    if (!cond) report.violations.push_back(std::move(what));
  };

  check(std::isfinite(p.mass) && p.mass > 0.0, "mass > 0");
  check(std::isfinite(p.gravity) && p.gravity > 0.0, "gravity > 0");

  const Eigen::Matrix3d& J = p.inertia;
  const bool finite_inertia = J.allFinite();
  check(finite_inertia, "inertia finite");
  if (finite_inertia) {
    const double scale = std::max(J.cwiseAbs().maxCoeff(), 1e-300);
    const bool symmetric = (J - J.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
    check(symmetric, "inertia symmetric");
    if (symmetric) {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(J, Eigen::EigenvaluesOnly);
      check(eig.eigenvalues().minCoeff() > 0.0, "inertia positive definite");
    }
  }

  check(p.servo_time_constant > 0.0, "servo_time_constant > 0");
  check(p.motor_time_constant > 0.0, "motor_time_constant > 0");
  check(p.servo_rate_limit > 0.0, "servo_rate_limit > 0");
  check(p.motor_speed_max > 0.0, "motor_speed_max > 0");
  check(p.flap_stiffness >= 0.0, "flap_stiffness >= 0");
  check(p.rotor_drag_linear >= 0.0, "rotor_drag_linear >= 0");
  check((p.body_drag_linear.array() >= 0.0).all(), "body_drag_linear >= 0");
  check(p.power_idle >= 0.0 && p.power_thrust_coeff >= 0.0, "power coefficients >= 0");

  for (RotorId id : kRotors) {
    const RotorParams& r = p.rotor(id);
    const std::string tag = to_string(id);
    check(r.flap_gain_ele >= 0.0 && r.flap_gain_ail >= 0.0, "flap gains " + tag + " >= 0");
    check(r.thrust_coeff > 0.0, "thrust_coeff_" + tag + " > 0");
    check(r.reaction_torque_coeff > 0.0, "reaction_torque_coeff_" + tag + " > 0");
    check(r.spin_sign == 1 || r.spin_sign == -1, "spin_sign_" + tag + " is +1 or -1");
    check(r.hub_offset.allFinite() && r.hub_offset.x() == 0.0 && r.hub_offset.y() == 0.0,
          "hub_offset_" + tag + " along body z");
  }
  check(p.rotors[0].spin_sign == -p.rotors[1].spin_sign, "rotors counter-rotating");
  return report;
}

void require_valid(const VehicleParams& params) {
  auto report = validate_params(params);
  if (!report.ok()) throw std::invalid_argument("invalid vehicle parameters: " + report.summary());
}

double hover_speed_for(double mass, double gravity, double thrust_coeff) {
  return std::sqrt(0.5 * mass * gravity / thrust_coeff);
}

double thrust_coeff_for_hover(double mass, double gravity, double hover_speed) {
  return 0.5 * mass * gravity / (hover_speed * hover_speed);
}

namespace {

Eigen::Matrix3d inertia_from_list(const std::vector<double>& v) {
  if (v.size() != 6) throw ConfigError("vehicle.inertia: expected 6 numbers (xx yy zz xy xz yz)");
  Eigen::Matrix3d J;
  J << v[0], v[3], v[4],
       v[3], v[1], v[5],
       v[4], v[5], v[2];
  return J;
}

}  // namespace

VehicleParams vehicle_params_from_config(const ConfigFile& cfg) {
  VehicleParams p;
  p.mass = cfg.get_double("vehicle.mass");
  p.inertia = inertia_from_list(cfg.get_list("vehicle.inertia"));
  p.gravity = cfg.get_double("vehicle.gravity", p.gravity);
  p.flap_stiffness = cfg.get_double("vehicle.flap_stiffness");
  for (RotorId id : kRotors) {
    const std::string s = to_string(id);
    RotorParams& r = p.rotor(id);
    r.hub_offset = cfg.get_vec3("vehicle.hub_offset_" + s);
    r.flap_gain_ele = cfg.get_double("vehicle.flap_gain_ele_" + s);
    r.flap_gain_ail = cfg.get_double("vehicle.flap_gain_ail_" + s);
    r.thrust_coeff = cfg.get_double("vehicle.thrust_coeff_" + s);
    r.reaction_torque_coeff = cfg.get_double("vehicle.reaction_torque_coeff_" + s);
    r.spin_sign = cfg.get_int("vehicle.spin_sign_" + s);
  }
  p.body_drag_linear = cfg.get_vec3("vehicle.body_drag_linear");
  p.rotor_drag_linear = cfg.get_double("vehicle.rotor_drag_linear");
  p.servo_time_constant = cfg.get_double("vehicle.servo_time_constant");
  p.servo_rate_limit = cfg.get_double("vehicle.servo_rate_limit");
  p.motor_time_constant = cfg.get_double("vehicle.motor_time_constant");
  p.motor_speed_max = cfg.get_double("vehicle.motor_speed_max");
  p.power_idle = cfg.get_double("vehicle.power_idle");
  p.power_thrust_coeff = cfg.get_double("vehicle.power_thrust_coeff");
  p.rotor_diameter = cfg.get_double("vehicle.rotor_diameter", p.rotor_diameter);
  p.rotor_separation = cfg.get_double("vehicle.rotor_separation", p.rotor_separation);
  return p;
}

void write_vehicle_params(ConfigFile& cfg, const VehicleParams& p) {
  const Eigen::Matrix3d& J = p.inertia;
  cfg.set("vehicle.mass", p.mass);
  cfg.set("vehicle.inertia", std::vector<double>{J(0, 0), J(1, 1), J(2, 2), J(0, 1), J(0, 2), J(1, 2)});
  cfg.set("vehicle.gravity", p.gravity);
  cfg.set("vehicle.flap_stiffness", p.flap_stiffness);
  for (RotorId id : kRotors) {
    const std::string s = to_string(id);
    const RotorParams& r = p.rotor(id);
    cfg.set("vehicle.hub_offset_" + s, r.hub_offset);
    cfg.set("vehicle.flap_gain_ele_" + s, r.flap_gain_ele);
    cfg.set("vehicle.flap_gain_ail_" + s, r.flap_gain_ail);
    cfg.set("vehicle.thrust_coeff_" + s, r.thrust_coeff);
    cfg.set("vehicle.reaction_torque_coeff_" + s, r.reaction_torque_coeff);
    cfg.set("vehicle.spin_sign_" + s, r.spin_sign);
  }
  cfg.set("vehicle.body_drag_linear", p.body_drag_linear);
  cfg.set("vehicle.rotor_drag_linear", p.rotor_drag_linear);
  cfg.set("vehicle.servo_time_constant", p.servo_time_constant);
  cfg.set("vehicle.servo_rate_limit", p.servo_rate_limit);
  cfg.set("vehicle.motor_time_constant", p.motor_time_constant);
  cfg.set("vehicle.motor_speed_max", p.motor_speed_max);
  cfg.set("vehicle.power_idle", p.power_idle);
  cfg.set("vehicle.power_thrust_coeff", p.power_thrust_coeff);
  cfg.set("vehicle.rotor_diameter", p.rotor_diameter);
  cfg.set("vehicle.rotor_separation", p.rotor_separation);
}

}  // namespace coaxsim
