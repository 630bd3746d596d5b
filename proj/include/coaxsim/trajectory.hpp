#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "coaxsim/vehicle_model.hpp"

namespace coaxsim {

class ConfigFile;

class TrajectoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Closed planar curves flown at a capped arc-length speed.

enum class Shape { Circle, FigureEight };

struct ParametricSpec {
  Shape shape{Shape::Circle};
  double diameter{5.0};  // circle
  double width{10.0};    // figure-eight extent along x
  double height{5.0};    // figure-eight extent along y
  double v_max{3.0};
  double ramp_duration{2.0};
  Eigen::Vector3d center{0.0, 0.0, 1.5};
  double yaw{0.0};
};

/// Circle or lemniscate of Gerono (x = W/2 sin u, y = H/2 sin 2u), flown
/// with speed rising along a quintic smoothstep from 0 to v_max over the ramp
/// and constant afterwards. Arc length is inverted from a 1 cm table with a
/// cubic Hermite guess polished by Newton iterations, so the returned
/// derivatives are consistent with the returned positions.
class ParametricTrajectory {
 public:
  explicit ParametricTrajectory(const ParametricSpec& spec);

  TrajectorySample sample(double t) const;

  double lap_length() const { return table_s_.back(); }
  const ParametricSpec& spec() const { return spec_; }

  /// Arc length travelled and its first two time derivatives.
  std::array<double, 3> arc_length(double t) const;

  /// Curve parameter at arc length s within one lap, 0 <= s <= lap_length().
  double parameter_at(double s) const;

 private:
  Eigen::Vector3d curve(double u) const;
  Eigen::Vector3d curve_d1(double u) const;
  Eigen::Vector3d curve_d2(double u) const;
  double speed_u(double u) const { return curve_d1(u).norm(); }
  double arc_between(double u0, double u1) const;

  ParametricSpec spec_;
  std::vector<double> table_u_;
  std::vector<double> table_s_;
};

// ---------------------------------------------------------------------------
// Piecewise degree-7 polynomials.

struct Waypoint {
  Eigen::Vector3d position{Eigen::Vector3d::Zero()};
  std::optional<double> yaw;  // rad
};

using SegmentCoeffs = Eigen::Matrix<double, 8, 1>;

/// One polynomial segment per axis, in normalized time tau = t / duration
/// with ascending powers.
struct PolySegment {
  double duration{1.0};
  std::array<SegmentCoeffs, 3> coeffs{};

  /// d^order p / dt^order at local time t in [0, duration].
  Eigen::Vector3d derivative(double t, int order) const;
  double snap_cost() const;
};

/// Boundary derivatives (position, velocity, acceleration, jerk) per axis.
using BoundaryDerivatives = std::array<Eigen::Vector3d, 4>;

/// The unique degree-7 segment matching position..jerk at both ends.
PolySegment hermite_segment(double duration, const BoundaryDerivatives& start,
                            const BoundaryDerivatives& end);

class PolySegmentTrajectory {
 public:
  PolySegmentTrajectory(std::vector<PolySegment> segments, std::vector<Waypoint> waypoints,
                        int continuity_order = 3);

  double total_duration() const { return total_duration_; }
  const std::vector<PolySegment>& segments() const { return segments_; }
  const std::vector<Waypoint>& waypoints() const { return waypoints_; }
  int continuity_order() const { return continuity_order_; }

  /// Samples position, derivatives and yaw. Times outside [0, total] are
  /// clamped to the nearest endpoint and `clamped` is set when non-null.
  TrajectorySample sample(double t, bool* clamped = nullptr) const;
  Eigen::Vector3d derivative(double t, int order) const;
  double yaw(double t) const;

  /// Integrated squared snap summed over axes.
  double snap_cost() const;

 private:
  std::pair<std::size_t, double> locate(double t) const;

  std::vector<PolySegment> segments_;
  std::vector<Waypoint> waypoints_;
  std::vector<double> start_times_;
  double total_duration_{0.0};
  int continuity_order_{3};
};

/// Minimum integrated squared snap through `waypoints`, rest to rest, with
/// continuity through jerk, solved as one dense equality-constrained QP per axis.
PolySegmentTrajectory min_snap(std::span<const Waypoint> waypoints, std::span<const double> durations);

/// One waypoint per line: `x y z [yaw_deg]`; '#' starts a comment.
std::vector<Waypoint> parse_waypoints(const std::string& text);
std::vector<Waypoint> load_waypoints(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

struct HoverReference {
  Eigen::Vector3d point{0.0, 0.0, 1.5};
  double yaw{0.0};
};

using Reference = std::variant<HoverReference, ParametricTrajectory, PolySegmentTrajectory>;

TrajectorySample sample(const Reference& ref, double t);

/// Start of the steady part of the reference (end of the speed ramp).
double settle_time(const Reference& ref);

/// Builds the reference described by the [trajectory] section. Relative
/// waypoint paths resolve against `base_dir`.
Reference reference_from_config(const ConfigFile& cfg, const std::filesystem::path& base_dir);

}  // namespace coaxsim
