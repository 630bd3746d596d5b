#include "coaxsim/config_file.hpp"
#include "coaxsim/trajectory.hpp"

namespace coaxsim {

TrajectorySample sample(const Reference& ref, double t) {
  struct Visitor {
    double t;
    TrajectorySample operator()(const HoverReference& h) const {
      TrajectorySample s;
      s.time = t;
      s.position = h.point;
      s.yaw = h.yaw;
      return s;
    }
    TrajectorySample operator()(const ParametricTrajectory& p) const { return p.sample(t); }
    TrajectorySample operator()(const PolySegmentTrajectory& p) const { return p.sample(t); }
  };
  return std::visit(Visitor{t}, ref);
}

double settle_time(const Reference& ref) {
  if (const auto* p = std::get_if<ParametricTrajectory>(&ref)) return p->spec().ramp_duration;
  return 0.0;
}

Reference reference_from_config(const ConfigFile& cfg, const std::filesystem::path& base_dir) {
  const std::string type = cfg.get_string("trajectory.type", "hover");
  const double yaw = cfg.get_double("trajectory.yaw_deg", 0.0) * kPi / 180.0;
  const Eigen::Vector3d center = cfg.get_vec3("trajectory.center", Eigen::Vector3d(0.0, 0.0, 1.5));

  if (type == "hover") return HoverReference{center, yaw};

  if (type == "circle" || type == "figure8" || type == "figure-eight") {
    ParametricSpec spec;
    spec.shape = type == "circle" ? Shape::Circle : Shape::FigureEight;
    spec.center = center;
    spec.yaw = yaw;
    spec.v_max = cfg.get_double("trajectory.v_max");
    spec.ramp_duration = cfg.get_double("trajectory.ramp_duration", spec.ramp_duration);
    spec.diameter = cfg.get_double("trajectory.diameter", spec.diameter);
    spec.width = cfg.get_double("trajectory.width", spec.width);
    spec.height = cfg.get_double("trajectory.height", spec.height);
    return ParametricTrajectory(spec);
  }

  if (type == "waypoints") {
    std::filesystem::path file = cfg.raw("trajectory.waypoints_file");
    if (file.is_relative()) file = base_dir / file;
    const auto waypoints = load_waypoints(file);
    const auto durations = cfg.get_list("trajectory.durations");
    return min_snap(waypoints, durations);
  }

  throw ConfigError("trajectory.type: unknown trajectory type '" + type + "'");
}

}  // namespace coaxsim
