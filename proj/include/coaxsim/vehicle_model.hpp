#pragma once

// Shared domain types for the coaxial bi-copter simulator.
//
// Frames
// ------
// Inertial frame I: z points up, gravity is (0, 0, -g).
// Body frame B: origin at the centre of gravity, z along the rotor shaft
// pointing up, x forward. The attitude quaternion maps B -> I.
//
// Rotor thrust sign convention (the only place it is decided):
// `thrust_vector()` returns the tip-path-plane thrust vector exactly as
//     T * (-sin a, sin b, -cos a cos b)
// which points along -z_B for an untilted rotor. The force the rotor exerts
// on the airframe is the negation of that vector, so an untilted rotor lifts
// the vehicle along +z_B. The moment map uses the unmodified vector in its
// lever-arm term. See dynamics.hpp.

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace coaxsim {

inline constexpr double kPi = 3.14159265358979323846;

enum class RotorId : int { Upper = 0, Lower = 1 };
inline constexpr std::array<RotorId, 2> kRotors{RotorId::Upper, RotorId::Lower};

inline constexpr std::size_t index(RotorId r) { return static_cast<std::size_t>(r); }
const char* to_string(RotorId r);

template <typename T>
using PerRotor = std::array<T, 2>;

struct RotorParams {
  Eigen::Vector3d hub_offset{Eigen::Vector3d::Zero()};  // m, CoG -> hub
  double flap_gain_ele{0.0};          // rad per unit normalized elevator
  double flap_gain_ail{0.0};          // rad per unit normalized aileron
  double thrust_coeff{0.0};           // N / (rad/s)^2
  double reaction_torque_coeff{0.0};  // N*m / (rad/s)^2
  int spin_sign{1};                   // sign of the reaction torque about +z_B

  bool operator==(const RotorParams&) const = default;
};

struct VehicleParams {
  double mass{1.25};
  Eigen::Matrix3d inertia{Eigen::Matrix3d::Identity()};
  double gravity{9.81};
  PerRotor<RotorParams> rotors{};
  double flap_stiffness{0.0};  // K_beta, N*m per (sin(flap) * N)
  Eigen::Vector3d body_drag_linear{Eigen::Vector3d::Zero()};  // N/(m/s), body axes
  double rotor_drag_linear{0.0};                              // N/(m/s), body xy
  double servo_time_constant{0.02};
  double servo_rate_limit{10.0};  // normalized units per second
  double motor_time_constant{0.04};
  double motor_speed_max{700.0};  // rad/s
  double power_idle{0.0};         // W
  double power_thrust_coeff{0.0}; // W / N^1.5
  double rotor_diameter{0.465};   // m, metadata
  double rotor_separation{0.079}; // m, metadata

  const RotorParams& rotor(RotorId r) const { return rotors[index(r)]; }
  RotorParams& rotor(RotorId r) { return rotors[index(r)]; }

  double weight() const { return mass * gravity; }
  Eigen::Vector3d gravity_vector() const { return {0.0, 0.0, -gravity}; }

  bool operator==(const VehicleParams&) const = default;
};

struct RigidBodyState {
  Eigen::Vector3d position{Eigen::Vector3d::Zero()};
  Eigen::Vector3d velocity{Eigen::Vector3d::Zero()};
  Eigen::Quaterniond attitude{Eigen::Quaterniond::Identity()};
  Eigen::Vector3d angular_rate{Eigen::Vector3d::Zero()};
};

/// Normalized swashplate deflection for one rotor, each in [-1, 1].
struct Cyclic {
  double ele{0.0};
  double ail{0.0};

  bool operator==(const Cyclic&) const = default;
};

struct ActuatorState {
  PerRotor<double> rotor_speed_cmd{0.0, 0.0};
  PerRotor<double> rotor_speed{0.0, 0.0};
  PerRotor<Cyclic> cyclic_cmd{};
  PerRotor<Cyclic> cyclic{};
};

struct ControlCommand {
  double thrust{0.0};
  Eigen::Vector3d moment{Eigen::Vector3d::Zero()};
};

struct FlapAngles {
  double alpha{0.0};  // longitudinal, rad
  double beta{0.0};   // lateral, rad
};
using FlapState = PerRotor<FlapAngles>;

struct TrajectorySample {
  double time{0.0};
  Eigen::Vector3d position{Eigen::Vector3d::Zero()};
  Eigen::Vector3d velocity{Eigen::Vector3d::Zero()};
  Eigen::Vector3d acceleration{Eigen::Vector3d::Zero()};
  double yaw{0.0};
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

ValidationReport validate_params(const VehicleParams& params);

/// Throws std::invalid_argument listing every violation when `params` is invalid.
void require_valid(const VehicleParams& params);

/// Rotor speed at which a single rotor carries half the weight.
double hover_speed_for(double mass, double gravity, double thrust_coeff);

/// Thrust coefficient that makes `hover_speed` the per-rotor hover speed.
double thrust_coeff_for_hover(double mass, double gravity, double hover_speed);

class ConfigFile;
VehicleParams vehicle_params_from_config(const ConfigFile& cfg);
void write_vehicle_params(ConfigFile& cfg, const VehicleParams& params);

}  // namespace coaxsim
