#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "coaxsim/config_file.hpp"
#include "coaxsim/controller.hpp"
#include "coaxsim/harness.hpp"

using namespace coaxsim;

namespace {

ConfigFile default_config() {
  return ConfigFile::load(std::filesystem::path(COAXSIM_SOURCE_DIR) / "config" / "default.ini");
}

VehicleParams default_params() { return vehicle_params_from_config(default_config()); }

// Scalar PID written independently of the library: clamped integrator,
// derivative of the negated measurement through a first-order low-pass.
struct ReferencePid {
  double kp, ki, kd, limit, cutoff_hz;
  double integ = 0.0, deriv = 0.0, last = 0.0;
  bool primed = false;

  double step(double error, double measurement, double dt) {
    integ += ki * error * dt;
    if (integ > limit) integ = limit;
    if (integ < -limit) integ = -limit;
    if (primed) {
      const double raw = (last - measurement) / dt;
      if (cutoff_hz > 0.0) {
        const double tau = 1.0 / (2.0 * 3.14159265358979323846 * cutoff_hz);
        const double a = dt / (dt + tau);
        deriv = deriv + a * (raw - deriv);
      } else {
        deriv = raw;
      }
    }
    primed = true;
    last = measurement;
    return kp * error + integ + kd * deriv;
  }
};

Eigen::Quaterniond random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized();
}

}  // namespace

// ---------------------------------------------------------------------------
// Gains and configuration

TEST(Gains, LoadAndCheck) {
  const ControllerGains g = controller_gains_from_config(default_config());
  EXPECT_EQ(check_gains(g, 1e-3), "");
  EXPECT_DOUBLE_EQ(g.position_rate_hz, 100.0);
  EXPECT_DOUBLE_EQ(g.attitude_rate_hz, 500.0);

  ControllerGains bad = g;
  bad.rate.kp.x() = -1.0;
  EXPECT_NE(check_gains(bad, 1e-3), "");
  bad = g;
  bad.attitude_rate_hz = 300.0;
  EXPECT_NE(check_gains(bad, 1e-3), "");
  EXPECT_NE(check_gains(g, 0.03), "");

  ConfigFile cfg;
  write_controller_gains(cfg, g);
  const ControllerGains back = controller_gains_from_config(ConfigFile::parse(cfg.dump()));
  EXPECT_EQ(back.velocity.kp, g.velocity.kp);
  EXPECT_EQ(back.rate.ki, g.rate.ki);
  EXPECT_EQ(back.rate.derivative_cutoff_hz, g.rate.derivative_cutoff_hz);
}

TEST(SwashConfigNames, ParseAndPrint) {
  for (SwashConfig c : {SwashConfig::Dual, SwashConfig::SingleUpper, SwashConfig::SingleLower}) {
    EXPECT_EQ(parse_swash_config(to_string(c)), c);
  }
  EXPECT_EQ(parse_swash_config("single_lower"), SwashConfig::SingleLower);
  EXPECT_THROW(parse_swash_config("triple"), std::invalid_argument);
  EXPECT_TRUE(is_active(SwashConfig::Dual, RotorId::Upper));
  EXPECT_FALSE(is_active(SwashConfig::SingleLower, RotorId::Upper));
  EXPECT_FALSE(is_active(SwashConfig::SingleUpper, RotorId::Lower));
}

// ---------------------------------------------------------------------------
// Outer loops

TEST(PositionLoop, ProportionalLaw) {
  const Eigen::Vector3d kp(2, 2, 1);
  const Eigen::Vector3d p(1, -2, 3);
  EXPECT_EQ(position_loop(p, Eigen::Vector3d::Zero(), p, kp), Eigen::Vector3d::Zero());
  const Eigen::Vector3d ff(0.3, -0.7, 0.1);
  EXPECT_EQ(position_loop(p, ff, p, kp), ff);
  const Eigen::Vector3d v = position_loop(p + Eigen::Vector3d(1, 0, 0), ff, p, kp);
  EXPECT_DOUBLE_EQ(v.x(), ff.x() + 2.0);
  EXPECT_DOUBLE_EQ(v.y(), ff.y());
}

TEST(VelocityLoop, ZeroErrorFreshIntegrator) {
  Pid pid(controller_gains_from_config(default_config()).velocity);
  const Eigen::Vector3d v(1, 2, 3);
  EXPECT_EQ(velocity_loop(pid, v, v, Eigen::Vector3d::Zero(), 0.01), Eigen::Vector3d::Zero());
  EXPECT_THROW(velocity_loop(pid, v, v, Eigen::Vector3d::Zero(), 0.0), std::invalid_argument);
}

TEST(VelocityLoop, IntegratorClampsAtLimit) {
  PidGains g;
  g.ki = Eigen::Vector3d::Constant(2.0);
  g.integrator_limit = 0.5;
  Pid pid(g);
  const Eigen::Vector3d e(1.0, -1.0, 0.1);
  double prev = 0.0;
  for (int k = 0; k < 100; ++k) {
    velocity_loop(pid, e, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), 0.01);
    EXPECT_GE(pid.integral().x(), prev);
    prev = pid.integral().x();
  }
  EXPECT_DOUBLE_EQ(pid.integral().x(), 0.5);
  EXPECT_DOUBLE_EQ(pid.integral().y(), -0.5);
  EXPECT_NEAR(pid.integral().z(), 0.2, 1e-12);
}

TEST(VelocityLoop, StepErrorWithoutIntegral) {
  PidGains g;
  g.kp = {2.0, 3.0, 4.0};
  g.kd = {0.5, 0.25, 0.1};
  Pid pid(g);
  const Eigen::Vector3d ff(0.1, 0.2, 0.3);
  const Eigen::Vector3d vd(1.0, 1.0, 1.0);
  const double dt = 0.01;
  // First sample primes the derivative.
  const Eigen::Vector3d a0 = velocity_loop(pid, vd, Eigen::Vector3d::Zero(), ff, dt);
  EXPECT_TRUE(a0.isApprox(ff + g.kp.cwiseProduct(vd), 1e-15));
  // Velocity moves by 0.2: de/dt = -20.
  const Eigen::Vector3d v1 = Eigen::Vector3d::Constant(0.2);
  const Eigen::Vector3d a1 = velocity_loop(pid, vd, v1, ff, dt);
  const Eigen::Vector3d e1 = vd - v1;
  const Eigen::Vector3d expected = ff + g.kp.cwiseProduct(e1) + g.kd * (-0.2 / dt);
  EXPECT_TRUE(a1.isApprox(expected, 1e-13)) << a1.transpose() << " vs " << expected.transpose();
}

TEST(RateLoop, MatchesReferencePidOnChirp) {
  const ControllerGains gains = controller_gains_from_config(default_config());
  Pid pid(gains.rate);
  ReferencePid ref[3];
  for (int i = 0; i < 3; ++i) {
    ref[i] = {gains.rate.kp[i], gains.rate.ki[i], gains.rate.kd[i], gains.rate.integrator_limit,
              gains.rate.derivative_cutoff_hz};
  }
  const double dt = 0.002;
  for (int k = 0; k < 5000; ++k) {
    const double t = k * dt;
    // Linear chirp 0.5 -> 40 Hz, different amplitude per axis.
    const double phase = 2 * kPi * (0.5 * t + 0.5 * 3.95 * t * t);
    const Eigen::Vector3d rate(0.8 * std::sin(phase), -1.3 * std::cos(phase), 0.4 * std::sin(2 * phase));
    const Eigen::Vector3d desired(0.5 * std::sin(0.3 * t), 0.0, 0.2);
    const Eigen::Vector3d m = rate_loop(pid, desired, rate, dt);
    for (int i = 0; i < 3; ++i) {
      const double r = ref[i].step(desired[i] - rate[i], rate[i], dt);
      ASSERT_NEAR(m[i], r, 1e-12 * std::max(1.0, std::abs(r))) << "k=" << k << " axis " << i;
    }
  }
}

TEST(RateLoop, ConstantErrorPAndClampedI) {
  PidGains g;
  g.kp = {0.2, 0.2, 0.1};
  g.ki = {1.0, 1.0, 1.0};
  g.integrator_limit = 0.3;
  Pid pid(g);
  const Eigen::Vector3d zero = Eigen::Vector3d::Zero();
  EXPECT_EQ(rate_loop(pid, zero, zero, 0.002), zero);
  const Eigen::Vector3d e(1.0, 2.0, -1.0);
  Eigen::Vector3d m;
  for (int k = 0; k < 1000; ++k) m = rate_loop(pid, e, zero, 0.002);
  EXPECT_NEAR(m.x(), 0.2 + 0.3, 1e-15);
  EXPECT_NEAR(m.y(), 0.4 + 0.3, 1e-15);
  EXPECT_NEAR(m.z(), -0.1 - 0.3, 1e-15);
  pid.reset();
  EXPECT_EQ(pid.integral(), zero);
}

// ---------------------------------------------------------------------------
// Flatness and attitude

TEST(AccelToAttitude, Hover) {
  const auto t = accel_to_attitude(Eigen::Vector3d::Zero(), 0.0, 1.25, 9.81);
  ASSERT_TRUE(t.has_value());
  EXPECT_TRUE(t->attitude.isApprox(Eigen::Quaterniond::Identity(), 1e-15));
  EXPECT_NEAR(t->thrust, 12.2625, 1e-12);
}

TEST(AccelToAttitude, FortyFiveDegreeTilt) {
  const auto t = accel_to_attitude(Eigen::Vector3d(9.81, 0, 0), 0.0, 1.25, 9.81);
  ASSERT_TRUE(t.has_value());
  EXPECT_NEAR(t->thrust, 1.25 * 9.81 * std::sqrt(2.0), 1e-12);
  const Eigen::Vector3d z_b = t->attitude * Eigen::Vector3d::UnitZ();
  EXPECT_TRUE(z_b.isApprox(Eigen::Vector3d(1, 0, 1) / std::sqrt(2.0), 1e-14));
  const Eigen::Quaterniond expected(Eigen::AngleAxisd(kPi / 4, Eigen::Vector3d::UnitY()));
  EXPECT_NEAR(t->attitude.angularDistance(expected), 0.0, 1e-7);
  // Heading stays along +x.
  const Eigen::Vector3d x_b = t->attitude * Eigen::Vector3d::UnitX();
  EXPECT_NEAR(x_b.y(), 0.0, 1e-15);
}

TEST(AccelToAttitude, YawAndForceBalance) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-6.0, 6.0), yaw(-3.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const Eigen::Vector3d a(u(rng), u(rng), u(rng));
    const double psi = yaw(rng);
    const auto t = accel_to_attitude(a, psi, 1.34, 9.81);
    ASSERT_TRUE(t.has_value());
    // m a = m g + R (0, 0, T)
    const Eigen::Vector3d lhs = 1.34 * a;
    const Eigen::Vector3d rhs = Eigen::Vector3d(0, 0, -1.34 * 9.81) + t->attitude * Eigen::Vector3d(0, 0, t->thrust);
    EXPECT_LT((lhs - rhs).norm(), 1e-12);
    // Body y is perpendicular to the heading direction; body x leans towards it.
    const Eigen::Vector3d heading(std::cos(psi), std::sin(psi), 0.0);
    const Eigen::Vector3d x_b = t->attitude * Eigen::Vector3d::UnitX();
    const Eigen::Vector3d y_b = t->attitude * Eigen::Vector3d::UnitY();
    EXPECT_NEAR(y_b.dot(heading), 0.0, 1e-12);
    EXPECT_GT(x_b.dot(heading), 0.0);
  }
}

TEST(AccelToAttitude, FreeFallIsDegenerate) {
  EXPECT_FALSE(accel_to_attitude(Eigen::Vector3d(0, 0, -9.81), 0.0, 1.25, 9.81).has_value());
}

TEST(AttitudeLoop, Examples) {
  const Eigen::Vector3d k = Eigen::Vector3d::Constant(6.0);
  const Eigen::Quaterniond q(Eigen::AngleAxisd(0.3, Eigen::Vector3d(1, 2, 3).normalized()));
  EXPECT_LT(attitude_loop(q, q, k).norm(), 1e-15);

  const double roll = 10.0 * kPi / 180.0;
  const Eigen::Quaterniond qd(Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()));
  const Eigen::Vector3d w = attitude_loop(qd, Eigen::Quaterniond::Identity(), k);
  EXPECT_NEAR(w.x(), 6.0 * 2.0 * std::sin(5.0 * kPi / 180.0), 1e-14);
  EXPECT_NEAR(w.y(), 0.0, 1e-15);
  EXPECT_NEAR(w.z(), 0.0, 1e-15);
}

TEST(AttitudeLoop, SignFlipInvariance) {
  std::mt19937_64 rng(4);
  const Eigen::Vector3d k(10, 10, 2);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Quaterniond a = random_unit(rng), b = random_unit(rng);
    Eigen::Quaterniond na = a, nb = b;
    na.coeffs() = -a.coeffs();
    nb.coeffs() = -b.coeffs();
    const Eigen::Vector3d w = attitude_loop(a, b, k);
    EXPECT_LT((attitude_loop(na, b, k) - w).norm(), 1e-14);
    EXPECT_LT((attitude_loop(a, nb, k) - w).norm(), 1e-14);
    EXPECT_LT((attitude_loop(na, nb, k) - w).norm(), 1e-14);
  }
}

// ---------------------------------------------------------------------------
// Mixer

TEST(Mixer, HoverAllocation) {
  const VehicleParams p = default_params();
  for (SwashConfig c : {SwashConfig::Dual, SwashConfig::SingleUpper, SwashConfig::SingleLower}) {
    const MixerOutput out = mixer({p.weight(), Eigen::Vector3d::Zero()}, c, p);
    EXPECT_FALSE(out.saturated());
    for (const Cyclic& cyc : out.input.cyclic) {
      EXPECT_EQ(cyc.ele, 0.0);
      EXPECT_EQ(cyc.ail, 0.0);
    }
    const double w_up = out.input.rotor_speed[0], w_dw = out.input.rotor_speed[1];
    const double yaw = p.rotor(RotorId::Upper).spin_sign * p.rotor(RotorId::Upper).reaction_torque_coeff * w_up * w_up +
                       p.rotor(RotorId::Lower).spin_sign * p.rotor(RotorId::Lower).reaction_torque_coeff * w_dw * w_dw;
    EXPECT_NEAR(yaw, 0.0, 1e-15);
    EXPECT_NEAR(out.thrusts[0] + out.thrusts[1], p.weight(), 1e-12);
  }
}

TEST(Mixer, SingleLowerNeedsLargerCyclicCommand) {
  const VehicleParams p = default_params();
  const RotorParams& dw = p.rotor(RotorId::Lower);
  for (double roll : {0.002, 0.01, 0.03, -0.05}) {
    const ControlCommand cmd{p.weight(), Eigen::Vector3d(roll, 0.0, 0.0)};
    const MixerOutput dual = mixer(cmd, SwashConfig::Dual, p);
    const MixerOutput single = mixer(cmd, SwashConfig::SingleLower, p);
    ASSERT_FALSE(single.saturated());
    // Roll is carried mostly by the elevator channel here: the flap spring maps sin(alpha) to M_x.
    const Eigen::Vector2d s_cmd(single.input.cyclic[1].ele, single.input.cyclic[1].ail);
    const Eigen::Vector2d d_cmd(dual.input.cyclic[1].ele, dual.input.cyclic[1].ail);
    EXPECT_GT(s_cmd.norm(), d_cmd.norm());
    EXPECT_GT(std::abs(single.input.cyclic[1].ele), std::abs(dual.input.cyclic[1].ele));

    // Single-lower oracle: invert the 2x2 (sin a, sin b) map by hand.
    const double t = single.thrusts[1], k = p.flap_stiffness, h = dw.hub_offset.z();
    const double a11 = t * k, a12 = -t * h;
    const double det = a11 * a11 - a12 * a12;
    const double sin_a = (a11 * roll) / det;  // pitch demand is zero
    const double sin_b = (-a12 * roll) / det;
    EXPECT_NEAR(single.input.cyclic[1].ail, std::asin(sin_b) / dw.flap_gain_ail, 1e-12);
    EXPECT_NEAR(single.input.cyclic[1].ele, std::asin(sin_a) / dw.flap_gain_ele, 1e-12);
  }
}

TEST(Mixer, DualSharesOneNormalizedCommand) {
  const VehicleParams p = default_params();
  const MixerOutput out = mixer({p.weight(), Eigen::Vector3d(0.02, -0.03, 0.0)}, SwashConfig::Dual, p);
  EXPECT_EQ(out.input.cyclic[0], out.input.cyclic[1]);
}

TEST(Mixer, InactiveSwashplateIsZero) {
  const VehicleParams p = default_params();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (int i = 0; i < 200; ++i) {
    const ControlCommand cmd{p.weight() * (1.0 + u(rng)), Eigen::Vector3d(u(rng), u(rng), 0.1 * u(rng))};
    const MixerOutput up = mixer(cmd, SwashConfig::SingleUpper, p);
    EXPECT_EQ(up.input.cyclic[1], Cyclic{});
    const MixerOutput dw = mixer(cmd, SwashConfig::SingleLower, p);
    EXPECT_EQ(dw.input.cyclic[0], Cyclic{});
  }
}

TEST(Mixer, RightInverseThroughDynamics) {
  const VehicleParams p = default_params();
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> u(-1.0, 1.0), thrust_scale(0.6, 1.6);
  for (SwashConfig c : {SwashConfig::Dual, SwashConfig::SingleUpper, SwashConfig::SingleLower}) {
    int accepted = 0, attempts = 0;
    while (accepted < 1000 && attempts < 10000) {
      ++attempts;
      const double t = thrust_scale(rng) * p.weight();
      const double reach = max_cyclic_torque(p, c, t);
      const ControlCommand cmd{t, Eigen::Vector3d(0.7 * reach * u(rng), 0.7 * reach * u(rng), 0.02 * u(rng))};
      const MixerOutput out = mixer(cmd, c, p);
      if (out.saturated()) continue;
      ++accepted;
      const RotorWrench w = rotor_wrench(settled_actuators(out.input), p);
      EXPECT_LE((w.moment - cmd.moment).norm(), 1e-6 * cmd.moment.norm()) << to_string(c);
      EXPECT_NEAR(w.thrusts[0] + w.thrusts[1], t, 1e-6 * t);
    }
    EXPECT_EQ(accepted, 1000) << to_string(c);
  }
}

TEST(Mixer, SaturationIsFlagged) {
  const VehicleParams p = default_params();
  const double reach = max_cyclic_torque(p, SwashConfig::SingleLower, p.weight());
  const MixerOutput out = mixer({p.weight(), Eigen::Vector3d(3.0 * reach, 0, 0)}, SwashConfig::SingleLower, p);
  ASSERT_TRUE(out.saturated());
  bool servo = false;
  for (const SaturationEvent& e : out.saturation) {
    servo |= e.channel == SaturationChannel::EleDw || e.channel == SaturationChannel::AilDw;
  }
  EXPECT_TRUE(servo);
  EXPECT_LE(std::abs(out.input.cyclic[1].ele), 1.0);
  EXPECT_LE(std::abs(out.input.cyclic[1].ail), 1.0);

  // Beyond what any flap angle can produce.
  const MixerOutput far = mixer({p.weight(), Eigen::Vector3d(1e3 * reach, 0, 0)}, SwashConfig::SingleLower, p);
  bool authority = false;
  for (const SaturationEvent& e : far.saturation) authority |= e.channel == SaturationChannel::CyclicAuthority;
  EXPECT_TRUE(authority);

  const MixerOutput thrust = mixer({10.0 * max_total_thrust(p), Eigen::Vector3d::Zero()}, SwashConfig::Dual, p);
  ASSERT_FALSE(thrust.saturation.empty());
  EXPECT_EQ(thrust.saturation.front().channel, SaturationChannel::Thrust);
  EXPECT_LE(thrust.input.rotor_speed[0], p.motor_speed_max * (1 + 1e-12));

  const MixerOutput yaw = mixer({p.weight(), Eigen::Vector3d(0, 0, 5.0)}, SwashConfig::Dual, p);
  bool motor = false;
  for (const SaturationEvent& e : yaw.saturation) {
    motor |= e.channel == SaturationChannel::MotorDw || e.channel == SaturationChannel::MotorUp;
  }
  EXPECT_TRUE(motor);
  EXPECT_GE(yaw.input.rotor_speed[0], 0.0);
  EXPECT_GE(yaw.input.rotor_speed[1], 0.0);
}

// ---------------------------------------------------------------------------
// Cascade

TEST(CascadedController, HoldsHoverAtReference) {
  const ConfigFile cfg = default_config();
  const VehicleParams p = vehicle_params_from_config(cfg);
  CascadedController ctl(controller_gains_from_config(cfg), p, SwashConfig::Dual);
  RigidBodyState s;
  s.position = {0, 0, 1.5};
  TrajectorySample ref;
  ref.position = s.position;
  ctl.update_position(s, ref, 0.01);
  const MixerOutput& out = ctl.update_attitude(s, 0.002);
  EXPECT_NEAR(ctl.command().thrust, p.weight(), 1e-12);
  EXPECT_LT(ctl.command().moment.norm(), 1e-15);
  EXPECT_FALSE(out.saturated());
  EXPECT_FALSE(ctl.thrust_direction_lost());
}

TEST(CascadedController, FreeFallDemandHoldsAttitude) {
  const ConfigFile cfg = default_config();
  const VehicleParams p = vehicle_params_from_config(cfg);
  ControllerGains g = controller_gains_from_config(cfg);
  g.position_kp.setZero();
  g.velocity = PidGains{};
  CascadedController ctl(g, p, SwashConfig::Dual);
  TrajectorySample ref;
  ref.acceleration = {0, 0, -p.gravity};
  ctl.update_position(RigidBodyState{}, ref, 0.01);
  EXPECT_TRUE(ctl.thrust_direction_lost());
  EXPECT_TRUE(ctl.attitude_target().attitude.isApprox(Eigen::Quaterniond::Identity()));
  EXPECT_NEAR(ctl.command().thrust, 0.0, 1e-12);
}
