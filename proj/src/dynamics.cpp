#include "coaxsim/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace coaxsim {

const char* to_string(SaturationChannel c) {
  switch (c) {
    case SaturationChannel::EleUp: return "ele_up";
    case SaturationChannel::AilUp: return "ail_up";
    case SaturationChannel::EleDw: return "ele_dw";
    case SaturationChannel::AilDw: return "ail_dw";
    case SaturationChannel::MotorUp: return "motor_up";
    case SaturationChannel::MotorDw: return "motor_dw";
    case SaturationChannel::Thrust: return "thrust";
    case SaturationChannel::CyclicAuthority: return "cyclic_authority";
  }
  return "unknown";
}

FlapResult servo_to_flap(double ele, double ail, double gain_ele, double gain_ail) {
  FlapResult out;
  const double e = std::clamp(ele, -1.0, 1.0);
  const double a = std::clamp(ail, -1.0, 1.0);
  out.clamped = (e != ele) || (a != ail);
  out.flap.alpha = gain_ele * e;
  out.flap.beta = gain_ail * a;
  return out;
}

FlapAngles flap_angles(const Cyclic& cyclic, const RotorParams& rotor) {
  return {rotor.flap_gain_ele * cyclic.ele, rotor.flap_gain_ail * cyclic.ail};
}

FlapState flap_state(const PerRotor<Cyclic>& cyclic, const VehicleParams& params) {
  FlapState out;
  for (RotorId id : kRotors) out[index(id)] = flap_angles(cyclic[index(id)], params.rotor(id));
  return out;
}

double rotor_thrust(double speed, double thrust_coeff) {
  if (speed < 0.0) throw std::invalid_argument("rotor speed must be nonnegative");
  return thrust_coeff * speed * speed;
}

Eigen::Vector3d thrust_vector(double thrust, double alpha, double beta) {
  return thrust * Eigen::Vector3d(-std::sin(alpha), std::sin(beta), -std::cos(alpha) * std::cos(beta));
}

Eigen::Vector3d combined_moment(const VehicleParams& params, const PerRotor<double>& thrusts,
                                const FlapState& flaps, const PerRotor<double>& rotor_speeds) {
  Eigen::Vector3d m = Eigen::Vector3d::Zero();
  for (RotorId id : kRotors) {
    const std::size_t i = index(id);
    const RotorParams& rotor = params.rotor(id);
    const FlapAngles& f = flaps[i];
    m += rotor.hub_offset.cross(thrust_vector(thrusts[i], f.alpha, f.beta));
    m += params.flap_stiffness * std::abs(thrusts[i]) *
         Eigen::Vector3d(std::sin(f.alpha), std::sin(f.beta), 0.0);
    const double w = rotor_speeds[i];
    m.z() += rotor.spin_sign * rotor.reaction_torque_coeff * w * w;
  }
  return m;
}

Wrench external_wrench(const Eigen::Vector3d& velocity_body, const VehicleParams& params) {
  Wrench w;
  const Eigen::Vector3d rotor_drag =
      -params.rotor_drag_linear * Eigen::Vector3d(velocity_body.x(), velocity_body.y(), 0.0);
  w.force = -params.body_drag_linear.cwiseProduct(velocity_body) + rotor_drag;
  for (RotorId id : kRotors) {
    w.torque += params.rotor(id).hub_offset.cross(0.5 * rotor_drag);
  }
  return w;
}

namespace {

double lag_fraction(double dt, double tau) { return -std::expm1(-dt / tau); }

}  // namespace

ActuatorState actuator_step(const ActuatorState& state, const PlantInput& input, double dt,
                            const VehicleParams& params, SaturationEvents* events,
                            ActuatorLimits limits) {
  ActuatorState next = state;
  const double motor_frac = lag_fraction(dt, params.motor_time_constant);
  const double servo_frac = lag_fraction(dt, params.servo_time_constant);
  const double max_step = params.servo_rate_limit * dt;

  auto record = [events](SaturationChannel ch, double requested, double applied) {
    if (events && requested != applied) events->push_back({ch, requested, applied});
  };

  auto servo = [&](double actual, double requested, SaturationChannel ch) {
    double cmd = requested;
    if (limits.enforce) {
      cmd = std::clamp(requested, -1.0, 1.0);
      record(ch, requested, cmd);
    }
    double step = servo_frac * (cmd - actual);
    if (limits.enforce) step = std::clamp(step, -max_step, max_step);
    double out = actual + step;
    if (limits.enforce) out = std::clamp(out, -1.0, 1.0);
    return std::pair{cmd, out};
  };

  for (RotorId id : kRotors) {
    const std::size_t i = index(id);
    double cmd = input.rotor_speed[i];
    if (limits.enforce) {
      cmd = std::clamp(cmd, 0.0, params.motor_speed_max);
      record(motor_channel(id), input.rotor_speed[i], cmd);
    } else {
      cmd = std::max(cmd, 0.0);
    }
    next.rotor_speed_cmd[i] = cmd;
    next.rotor_speed[i] = std::max(0.0, state.rotor_speed[i] + motor_frac * (cmd - state.rotor_speed[i]));

    auto [ele_cmd, ele] = servo(state.cyclic[i].ele, input.cyclic[i].ele, ele_channel(id));
    auto [ail_cmd, ail] = servo(state.cyclic[i].ail, input.cyclic[i].ail, ail_channel(id));
    next.cyclic_cmd[i] = {ele_cmd, ail_cmd};
    next.cyclic[i] = {ele, ail};
  }
  return next;
}

ActuatorState settled_actuators(const PlantInput& input) {
  ActuatorState s;
  s.rotor_speed_cmd = input.rotor_speed;
  s.rotor_speed = input.rotor_speed;
  s.cyclic_cmd = input.cyclic;
  s.cyclic = input.cyclic;
  return s;
}

RotorWrench rotor_wrench(const ActuatorState& actuators, const VehicleParams& params) {
  RotorWrench out;
  const FlapState flaps = flap_state(actuators.cyclic, params);
  for (RotorId id : kRotors) {
    const std::size_t i = index(id);
    out.thrusts[i] = rotor_thrust(actuators.rotor_speed[i], params.rotor(id).thrust_coeff);
    out.force += airframe_force(out.thrusts[i], flaps[i].alpha, flaps[i].beta);
  }
  out.moment = combined_moment(params, out.thrusts, flaps, actuators.rotor_speed);
  return out;
}

namespace {

StateDerivative derivative_with(const RigidBodyState& state, const RotorWrench& rotors,
                                const VehicleParams& params, const Eigen::Matrix3d& inertia_inv) {
  StateDerivative d;
  const Eigen::Matrix3d R = state.attitude.normalized().toRotationMatrix();
  const Eigen::Vector3d v_body = R.transpose() * state.velocity;
  const Wrench ext = external_wrench(v_body, params);

  d.position_dot = state.velocity;
  d.velocity_dot = params.gravity_vector() + R * (rotors.force + ext.force) / params.mass;

  const Eigen::Vector3d& w = state.angular_rate;
  d.angular_rate_dot =
      inertia_inv * (rotors.moment - w.cross(params.inertia * w) + ext.torque);

  const Eigen::Quaterniond& q = state.attitude;
  const Eigen::Quaterniond qdot = q * Eigen::Quaterniond(0.0, w.x(), w.y(), w.z());
  d.attitude_dot = 0.5 * Eigen::Vector4d(qdot.w(), qdot.x(), qdot.y(), qdot.z());
  return d;
}

RigidBodyState advance(const RigidBodyState& s, const StateDerivative& d, double h) {
  RigidBodyState out;
  out.position = s.position + h * d.position_dot;
  out.velocity = s.velocity + h * d.velocity_dot;
  out.attitude = Eigen::Quaterniond(s.attitude.w() + h * d.attitude_dot[0],
                                    s.attitude.x() + h * d.attitude_dot[1],
                                    s.attitude.y() + h * d.attitude_dot[2],
                                    s.attitude.z() + h * d.attitude_dot[3]);
  out.angular_rate = s.angular_rate + h * d.angular_rate_dot;
  return out;
}

}  // namespace

StateDerivative derivative(const RigidBodyState& state, const ActuatorState& actuators,
                           const VehicleParams& params) {
  return derivative_with(state, rotor_wrench(actuators, params), params, params.inertia.inverse());
}

RigidBodyState integrate_step(const RigidBodyState& state, const ActuatorState& actuators,
                              double dt, const VehicleParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("integration step must be positive");
  const RotorWrench rotors = rotor_wrench(actuators, params);
  const Eigen::Matrix3d inertia_inv = params.inertia.inverse();
  auto f = [&](const RigidBodyState& s) { return derivative_with(s, rotors, params, inertia_inv); };

  const StateDerivative k1 = f(state);
  const StateDerivative k2 = f(advance(state, k1, 0.5 * dt));
  const StateDerivative k3 = f(advance(state, k2, 0.5 * dt));
  const StateDerivative k4 = f(advance(state, k3, dt));

  StateDerivative sum;
  sum.position_dot = k1.position_dot + 2.0 * k2.position_dot + 2.0 * k3.position_dot + k4.position_dot;
  sum.velocity_dot = k1.velocity_dot + 2.0 * k2.velocity_dot + 2.0 * k3.velocity_dot + k4.velocity_dot;
  sum.attitude_dot = k1.attitude_dot + 2.0 * k2.attitude_dot + 2.0 * k3.attitude_dot + k4.attitude_dot;
  sum.angular_rate_dot =
      k1.angular_rate_dot + 2.0 * k2.angular_rate_dot + 2.0 * k3.angular_rate_dot + k4.angular_rate_dot;

  RigidBodyState next = advance(state, sum, dt / 6.0);
  next.attitude.normalize();

  const bool finite = next.position.allFinite() && next.velocity.allFinite() &&
                      next.attitude.coeffs().allFinite() && next.angular_rate.allFinite();
  if (!finite) {
    throw NonFiniteStateError("non-finite rigid-body state after integration step");
  }
  return next;
}

}  // namespace coaxsim
