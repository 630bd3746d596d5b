#pragma once

// Continuous-time plant of the coaxial bi-copter.
//
// Rotor forces: `thrust_vector` is the tip-path-plane thrust vector of one
// rotor, pointing along -z_B when untilted. The airframe is pushed by its
// negation (`airframe_force`). `combined_moment` uses the unmodified vector
// in the lever-arm term l_i x T_i, together with the flap-spring term and the
// counter-rotating reaction torque about z_B.

#include <stdexcept>
#include <vector>

#include "coaxsim/vehicle_model.hpp"

namespace coaxsim {

/// Commanded actuator values fed to the plant.
struct PlantInput {
  PerRotor<double> rotor_speed{0.0, 0.0};
  PerRotor<Cyclic> cyclic{};
};

enum class SaturationChannel : int {
  EleUp = 0, AilUp, EleDw, AilDw, MotorUp, MotorDw, Thrust, CyclicAuthority
};
const char* to_string(SaturationChannel c);

inline SaturationChannel ele_channel(RotorId r) {
  return r == RotorId::Upper ? SaturationChannel::EleUp : SaturationChannel::EleDw;
}
inline SaturationChannel ail_channel(RotorId r) {
  return r == RotorId::Upper ? SaturationChannel::AilUp : SaturationChannel::AilDw;
}
inline SaturationChannel motor_channel(RotorId r) {
  return r == RotorId::Upper ? SaturationChannel::MotorUp : SaturationChannel::MotorDw;
}

struct SaturationEvent {
  SaturationChannel channel;
  double requested;  // value before clamping
  double applied;    // value after clamping
};

using SaturationEvents = std::vector<SaturationEvent>;

class NonFiniteStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FlapResult {
  FlapAngles flap;
  bool clamped{false};
};

/// Linear servo-to-tip-path-plane map; inputs outside [-1, 1] are clamped.
FlapResult servo_to_flap(double ele, double ail, double gain_ele, double gain_ail);
FlapAngles flap_angles(const Cyclic& cyclic, const RotorParams& rotor);
FlapState flap_state(const PerRotor<Cyclic>& cyclic, const VehicleParams& params);

/// T = k_f * speed^2. Throws std::invalid_argument for negative speed.
double rotor_thrust(double speed, double thrust_coeff);

Eigen::Vector3d thrust_vector(double thrust, double alpha, double beta);
inline Eigen::Vector3d airframe_force(double thrust, double alpha, double beta) {
  return -thrust_vector(thrust, alpha, beta);
}

Eigen::Vector3d combined_moment(const VehicleParams& params, const PerRotor<double>& thrusts,
                                const FlapState& flaps, const PerRotor<double>& rotor_speeds);

struct Wrench {
  Eigen::Vector3d force{Eigen::Vector3d::Zero()};
  Eigen::Vector3d torque{Eigen::Vector3d::Zero()};
};

/// Linear fuselage and rotor drag for body-frame velocity `velocity_body`.
Wrench external_wrench(const Eigen::Vector3d& velocity_body, const VehicleParams& params);

struct ActuatorLimits {
  bool enforce{true};  // false: no clamping and no rate limit
};

/// Advances servo and motor lags by `dt`. Appends clamp events to `events`
/// when it is non-null.
ActuatorState actuator_step(const ActuatorState& state, const PlantInput& input, double dt,
                            const VehicleParams& params, SaturationEvents* events = nullptr,
                            ActuatorLimits limits = {});

/// Actuator state resting at `input`.
ActuatorState settled_actuators(const PlantInput& input);

struct StateDerivative {
  Eigen::Vector3d position_dot{Eigen::Vector3d::Zero()};
  Eigen::Vector3d velocity_dot{Eigen::Vector3d::Zero()};
  Eigen::Vector4d attitude_dot{Eigen::Vector4d::Zero()};  // (w, x, y, z)
  Eigen::Vector3d angular_rate_dot{Eigen::Vector3d::Zero()};
};

/// Rotor thrusts, airframe force and body moment produced by the actual actuator state.
struct RotorWrench {
  PerRotor<double> thrusts{0.0, 0.0};
  Eigen::Vector3d force{Eigen::Vector3d::Zero()};
  Eigen::Vector3d moment{Eigen::Vector3d::Zero()};
};
RotorWrench rotor_wrench(const ActuatorState& actuators, const VehicleParams& params);

StateDerivative derivative(const RigidBodyState& state, const ActuatorState& actuators,
                           const VehicleParams& params);

/// One classical RK4 step with actuators held; renormalizes the quaternion.
/// Throws NonFiniteStateError if the result is not finite.
RigidBodyState integrate_step(const RigidBodyState& state, const ActuatorState& actuators,
                              double dt, const VehicleParams& params);

}  // namespace coaxsim
