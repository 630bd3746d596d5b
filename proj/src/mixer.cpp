#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "coaxsim/controller.hpp"

namespace coaxsim {

Eigen::Matrix2d cyclic_moment_matrix(const VehicleParams& params, RotorId rotor, double thrust) {
  // l x T with l = (0, 0, h) and T = thrust * (-sin a, sin b, .) gives
  // (-h T sin b, -h T sin a); the spring adds K T (sin a, sin b).
  const double k = params.flap_stiffness;
  const double h = params.rotor(rotor).hub_offset.z();
  Eigen::Matrix2d m;
  m << k, -h,
       -h, k;
  return std::abs(thrust) * m;
}

PerRotor<double> solve_speed_squares(const VehicleParams& params, double thrust, double yaw_moment) {
  const RotorParams& up = params.rotor(RotorId::Upper);
  const RotorParams& dw = params.rotor(RotorId::Lower);
  Eigen::Matrix2d a;
  a << up.thrust_coeff, dw.thrust_coeff,
       up.spin_sign * up.reaction_torque_coeff, dw.spin_sign * dw.reaction_torque_coeff;
  const Eigen::Vector2d sq = a.partialPivLu().solve(Eigen::Vector2d(thrust, yaw_moment));
  return {sq[0], sq[1]};
}

namespace {

// Largest normalized command whose flap angle stays on the monotone branch
// of sin().
double monotone_limit(double gain) { return gain > 0.0 ? 0.5 * kPi / gain : 0.0; }

// One rotor: invert the exact linear map on (sin a, sin b), then asin.
Eigen::Vector2d solve_single_command(const VehicleParams& params, RotorId id, double thrust,
                                     const Eigen::Vector2d& demand, bool& reachable) {
  const RotorParams& rotor = params.rotor(id);
  const Eigen::Matrix2d g = cyclic_moment_matrix(params, id, thrust);
  const double scale = std::max(g.cwiseAbs().maxCoeff(), 1e-300);
  if (!(std::abs(g.determinant()) > 1e-12 * scale * scale)) {
    reachable = demand.squaredNorm() == 0.0;
    return Eigen::Vector2d::Zero();
  }
  const Eigen::Vector2d sines = g.inverse() * demand;
  const double gains[2] = {rotor.flap_gain_ele, rotor.flap_gain_ail};
  Eigen::Vector2d cmd;
  for (int k = 0; k < 2; ++k) {
    if (std::abs(sines[k]) > 1.0) reachable = false;
    const double angle = std::asin(std::clamp(sines[k], -1.0, 1.0));
    if (gains[k] > 0.0) {
      cmd[k] = angle / gains[k];
    } else {
      if (angle != 0.0) reachable = false;
      cmd[k] = 0.0;
    }
  }
  return cmd;
}

// Both rotors receive the same normalized command u. The moment is
// sum_i G_i (sin(A_i u_ele), sin(B_i u_ail)), solved by Newton iteration from
// the small-angle solution.
Eigen::Vector2d solve_shared_command(const VehicleParams& params, const PerRotor<double>& thrusts,
                                     const Eigen::Vector2d& demand, bool& reachable) {
  PerRotor<Eigen::Matrix2d> g;
  Eigen::Matrix2d lin = Eigen::Matrix2d::Zero();
  Eigen::Vector2d bound(HUGE_VAL, HUGE_VAL);
  for (RotorId id : kRotors) {
    const RotorParams& r = params.rotor(id);
    g[index(id)] = cyclic_moment_matrix(params, id, thrusts[index(id)]);
    lin += g[index(id)] * Eigen::Vector2d(r.flap_gain_ele, r.flap_gain_ail).asDiagonal();
    bound[0] = std::min(bound[0], monotone_limit(r.flap_gain_ele));
    bound[1] = std::min(bound[1], monotone_limit(r.flap_gain_ail));
  }
  const double scale = std::max(lin.cwiseAbs().maxCoeff(), 1e-300);
  if (!(std::abs(lin.determinant()) > 1e-12 * scale * scale)) {
    reachable = demand.squaredNorm() == 0.0;
    return Eigen::Vector2d::Zero();
  }

  auto eval = [&](const Eigen::Vector2d& u, Eigen::Matrix2d* jac) {
    Eigen::Vector2d m = Eigen::Vector2d::Zero();
    if (jac) jac->setZero();
    for (RotorId id : kRotors) {
      const RotorParams& r = params.rotor(id);
      const std::size_t i = index(id);
      m += g[i] * Eigen::Vector2d(std::sin(r.flap_gain_ele * u[0]), std::sin(r.flap_gain_ail * u[1]));
      if (jac) {
        *jac += g[i] * Eigen::Vector2d(r.flap_gain_ele * std::cos(r.flap_gain_ele * u[0]),
                                       r.flap_gain_ail * std::cos(r.flap_gain_ail * u[1]))
                           .asDiagonal();
      }
    }
    return m;
  };
  auto keep_monotone = [&](Eigen::Vector2d u) {
    for (int k = 0; k < 2; ++k) u[k] = std::clamp(u[k], -bound[k], bound[k]);
    return u;
  };

  Eigen::Vector2d u = keep_monotone(lin.inverse() * demand);
  const double tol = 1e-14 * std::max(demand.norm(), scale);
  for (int iter = 0; iter < 50; ++iter) {
    Eigen::Matrix2d jac;
    const Eigen::Vector2d r = eval(u, &jac) - demand;
    if (r.norm() <= tol) return u;
    const Eigen::FullPivLU<Eigen::Matrix2d> lu(jac);
    if (!lu.isInvertible()) break;
    u = keep_monotone(u - lu.solve(r));
  }
  if ((eval(u, nullptr) - demand).norm() > 1e-9 * std::max(demand.norm(), scale)) reachable = false;
  return u;
}

}  // namespace

PlantInput hover_input(const VehicleParams& params) {
  const PerRotor<double> sq = solve_speed_squares(params, params.weight(), 0.0);
  PlantInput in;
  in.rotor_speed = {std::sqrt(std::max(sq[0], 0.0)), std::sqrt(std::max(sq[1], 0.0))};
  return in;
}

MixerOutput mixer(const ControlCommand& command, SwashConfig config, const VehicleParams& params,
                  bool enforce_limits) {
  MixerOutput out;
  auto flag = [&out](SaturationChannel ch, double requested, double applied) {
    out.saturation.push_back({ch, requested, applied});
  };

  // Collective and yaw through rotor speeds.
  double thrust = std::max(command.thrust, 0.0);
  const double speed_sq_max = params.motor_speed_max * params.motor_speed_max;
  if (enforce_limits) {
    const double thrust_max =
        (params.rotor(RotorId::Upper).thrust_coeff + params.rotor(RotorId::Lower).thrust_coeff) *
        speed_sq_max;
    if (thrust > thrust_max) {
      flag(SaturationChannel::Thrust, thrust, thrust_max);
      thrust = thrust_max;
    }
  }
  PerRotor<double> sq = solve_speed_squares(params, thrust, command.moment.z());
  for (RotorId id : kRotors) {
    double& s = sq[index(id)];
    const double requested = s;
    if (s < 0.0) s = 0.0;
    if (enforce_limits && s > speed_sq_max) s = speed_sq_max;
    if (s != requested) {
      flag(motor_channel(id), std::copysign(std::sqrt(std::abs(requested)), requested), std::sqrt(s));
    }
    out.input.rotor_speed[index(id)] = std::sqrt(s);
    out.thrusts[index(id)] = rotor_thrust(out.input.rotor_speed[index(id)], params.rotor(id).thrust_coeff);
  }

  // Roll and pitch through the active swashplates. Dual shares one
  // normalized command pair between both rotors; a single swashplate takes
  // the whole demand.
  const Eigen::Vector2d demand = command.moment.head<2>();
  Eigen::Vector2d cmd = Eigen::Vector2d::Zero();
  bool reachable = true;
  if (config == SwashConfig::Dual) {
    cmd = solve_shared_command(params, out.thrusts, demand, reachable);
  } else {
    const RotorId id = config == SwashConfig::SingleUpper ? RotorId::Upper : RotorId::Lower;
    cmd = solve_single_command(params, id, out.thrusts[index(id)], demand, reachable);
  }
  if (!reachable) flag(SaturationChannel::CyclicAuthority, demand.norm(), 0.0);

  for (RotorId id : kRotors) {
    const std::size_t i = index(id);
    if (!is_active(config, id)) {
      out.input.cyclic[i] = Cyclic{};
      out.flaps[i] = FlapAngles{};
      continue;
    }
    auto limit = [&](double requested, SaturationChannel ch) {
      const double applied = enforce_limits ? std::clamp(requested, -1.0, 1.0) : requested;
      if (applied != requested || std::abs(requested) > 1.0) flag(ch, requested, applied);
      return applied;
    };
    out.input.cyclic[i].ele = limit(cmd[0], ele_channel(id));
    out.input.cyclic[i].ail = limit(cmd[1], ail_channel(id));
    out.flaps[i] = flap_angles(out.input.cyclic[i], params.rotor(id));
  }
  return out;
}

}  // namespace coaxsim
