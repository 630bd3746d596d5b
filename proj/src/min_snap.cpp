#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/LU>

#include "coaxsim/config_file.hpp"
#include "coaxsim/trajectory.hpp"

namespace coaxsim {

namespace {

constexpr int kCoeffs = 8;
constexpr int kSnapOrder = 4;

// d^k/dtau^k tau^j = falling(j, k) tau^(j-k).
double falling(int j, int k) {
  double out = 1.0;
  for (int i = 0; i < k; ++i) out *= static_cast<double>(j - i);
  return out;
}

// Row giving d^k p / dt^k at normalized time tau for a segment of `duration`.
Eigen::Matrix<double, 1, kCoeffs> derivative_row(double tau, int k, double duration) {
  Eigen::Matrix<double, 1, kCoeffs> row = Eigen::Matrix<double, 1, kCoeffs>::Zero();
  const double scale = std::pow(duration, -k);
  for (int j = k; j < kCoeffs; ++j) {
    row(j) = scale * falling(j, k) * (j == k ? 1.0 : std::pow(tau, j - k));
  }
  return row;
}

// Integral over tau in [0, 1] of (d^4 p/dtau^4)^2, as a quadratic form.
const Eigen::Matrix<double, kCoeffs, kCoeffs>& snap_hessian_unit() {
  static const Eigen::Matrix<double, kCoeffs, kCoeffs> q = [] {
    Eigen::Matrix<double, kCoeffs, kCoeffs> m = Eigen::Matrix<double, kCoeffs, kCoeffs>::Zero();
    for (int i = kSnapOrder; i < kCoeffs; ++i) {
      for (int j = kSnapOrder; j < kCoeffs; ++j) {
        m(i, j) = falling(i, kSnapOrder) * falling(j, kSnapOrder) / (i + j - 2 * kSnapOrder + 1);
      }
    }
    return m;
  }();
  return q;
}

double segment_axis_cost(const SegmentCoeffs& c, double duration) {
  return std::pow(duration, -7) * c.dot(snap_hessian_unit() * c);
}

}  // namespace

Eigen::Vector3d PolySegment::derivative(double t, int order) const {
  const double tau = t / duration;
  Eigen::Vector3d out;
  for (int axis = 0; axis < 3; ++axis) {
    const SegmentCoeffs& c = coeffs[axis];
    // Horner on the differentiated polynomial.
    double acc = 0.0;
    for (int j = kCoeffs - 1; j >= order; --j) acc = acc * tau + falling(j, order) * c(j);
    out[axis] = acc * std::pow(duration, -order);
  }
  return out;
}

double PolySegment::snap_cost() const {
  double sum = 0.0;
  for (const auto& c : coeffs) sum += segment_axis_cost(c, duration);
  return sum;
}

PolySegment hermite_segment(double duration, const BoundaryDerivatives& start,
                            const BoundaryDerivatives& end) {
  if (!(duration > 0.0)) throw TrajectoryError("segment duration must be positive");
  Eigen::Matrix<double, kCoeffs, kCoeffs> a;
  for (int k = 0; k < 4; ++k) {
    a.row(k) = derivative_row(0.0, k, duration);
    a.row(4 + k) = derivative_row(1.0, k, duration);
  }
  const auto lu = a.fullPivLu();
  PolySegment seg;
  seg.duration = duration;
  for (int axis = 0; axis < 3; ++axis) {
    SegmentCoeffs rhs;
    for (int k = 0; k < 4; ++k) {
      rhs(k) = start[k][axis];
      rhs(4 + k) = end[k][axis];
    }
    seg.coeffs[axis] = lu.solve(rhs);
  }
  return seg;
}

PolySegmentTrajectory::PolySegmentTrajectory(std::vector<PolySegment> segments,
                                             std::vector<Waypoint> waypoints, int continuity_order)
    : segments_(std::move(segments)),
      waypoints_(std::move(waypoints)),
      continuity_order_(continuity_order) {
  if (segments_.empty()) throw TrajectoryError("trajectory needs at least one segment");
  start_times_.reserve(segments_.size());
  for (const auto& s : segments_) {
    if (!(s.duration > 0.0)) throw TrajectoryError("segment duration must be positive");
    start_times_.push_back(total_duration_);
    total_duration_ += s.duration;
  }
}

std::pair<std::size_t, double> PolySegmentTrajectory::locate(double t) const {
  auto it = std::upper_bound(start_times_.begin(), start_times_.end(), t);
  std::size_t i = (it == start_times_.begin()) ? 0 : static_cast<std::size_t>(it - start_times_.begin()) - 1;
  i = std::min(i, segments_.size() - 1);
  return {i, std::min(t - start_times_[i], segments_[i].duration)};
}

Eigen::Vector3d PolySegmentTrajectory::derivative(double t, int order) const {
  t = std::clamp(t, 0.0, total_duration_);
  auto [i, local] = locate(t);
  return segments_[i].derivative(local, order);
}

double PolySegmentTrajectory::yaw(double t) const {
  const bool any = std::any_of(waypoints_.begin(), waypoints_.end(),
                               [](const Waypoint& w) { return w.yaw.has_value(); });
  if (!any || waypoints_.size() != segments_.size() + 1) return 0.0;

  std::vector<double> yaws(waypoints_.size(), 0.0);
  for (std::size_t k = 0; k < waypoints_.size(); ++k) {
    yaws[k] = waypoints_[k].yaw.value_or(k > 0 ? yaws[k - 1] : 0.0);
  }
  t = std::clamp(t, 0.0, total_duration_);
  auto [i, local] = locate(t);
  const double x = local / segments_[i].duration;
  return yaws[i] + x * (yaws[i + 1] - yaws[i]);
}

TrajectorySample PolySegmentTrajectory::sample(double t, bool* clamped) const {
  const double tc = std::clamp(t, 0.0, total_duration_);
  if (clamped) *clamped = (tc != t);
  auto [i, local] = locate(tc);
  const PolySegment& seg = segments_[i];
  TrajectorySample out;
  out.time = t;
  out.position = seg.derivative(local, 0);
  out.velocity = seg.derivative(local, 1);
  out.acceleration = seg.derivative(local, 2);
  out.yaw = yaw(tc);
  return out;
}

double PolySegmentTrajectory::snap_cost() const {
  double sum = 0.0;
  for (const auto& s : segments_) sum += s.snap_cost();
  return sum;
}

PolySegmentTrajectory min_snap(std::span<const Waypoint> waypoints, std::span<const double> durations) {
  const std::size_t n_wp = waypoints.size();
  if (n_wp < 2) throw TrajectoryError("min_snap needs at least two waypoints");
  if (durations.size() != n_wp - 1) throw TrajectoryError("min_snap needs one duration per segment");
  for (double d : durations) {
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw TrajectoryError("singular constraint system: segment durations must be positive");
    }
  }

  const int n_seg = static_cast<int>(n_wp - 1);
  const int n_var = kCoeffs * n_seg;
  const int n_con = 8 + 5 * (n_seg - 1);
  const int n = n_var + n_con;

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < n_seg; ++s) {
    const double d = durations[static_cast<std::size_t>(s)];
    kkt.block<kCoeffs, kCoeffs>(kCoeffs * s, kCoeffs * s) = 2.0 * std::pow(d, -7) * snap_hessian_unit();
  }

  // Constraint rows; `targets` records which waypoint (or -1 for zero) each row matches.
  std::vector<int> targets;
  int row = n_var;
  auto add_row = [&](int seg, double tau, int k, double sign) {
    const Eigen::Matrix<double, 1, kCoeffs> r =
        sign * derivative_row(tau, k, durations[static_cast<std::size_t>(seg)]);
    kkt.block<1, kCoeffs>(row, kCoeffs * seg) += r;
    kkt.block<kCoeffs, 1>(kCoeffs * seg, row) += r.transpose();
  };

  for (int k = 0; k < 4; ++k) {
    add_row(0, 0.0, k, 1.0);
    targets.push_back(k == 0 ? 0 : -1);
    ++row;
  }
  for (int j = 1; j < n_seg; ++j) {
    add_row(j - 1, 1.0, 0, 1.0);
    targets.push_back(j);
    ++row;
    add_row(j, 0.0, 0, 1.0);
    targets.push_back(j);
    ++row;
    for (int k = 1; k <= 3; ++k) {
      add_row(j - 1, 1.0, k, 1.0);
      add_row(j, 0.0, k, -1.0);
      targets.push_back(-1);
      ++row;
    }
  }
  for (int k = 0; k < 4; ++k) {
    add_row(n_seg - 1, 1.0, k, 1.0);
    targets.push_back(k == 0 ? n_seg : -1);
    ++row;
  }

  const auto lu = kkt.fullPivLu();
  if (lu.rank() < n) throw TrajectoryError("singular constraint system in min_snap");

  std::vector<PolySegment> segments(static_cast<std::size_t>(n_seg));
  for (int s = 0; s < n_seg; ++s) segments[static_cast<std::size_t>(s)].duration = durations[static_cast<std::size_t>(s)];

  for (int axis = 0; axis < 3; ++axis) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < n_con; ++c) {
      const int wp = targets[static_cast<std::size_t>(c)];
      if (wp >= 0) rhs(n_var + c) = waypoints[static_cast<std::size_t>(wp)].position[axis];
    }
    const Eigen::VectorXd sol = lu.solve(rhs);
    for (int s = 0; s < n_seg; ++s) {
      segments[static_cast<std::size_t>(s)].coeffs[axis] = sol.segment<kCoeffs>(kCoeffs * s);
    }
  }
  return PolySegmentTrajectory(std::move(segments), std::vector<Waypoint>(waypoints.begin(), waypoints.end()));
}

std::vector<Waypoint> parse_waypoints(const std::string& text) {
  std::vector<Waypoint> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<double> values;
    std::string tok;
    try {
      while (fields >> tok) values.push_back(parse_double(tok));
    } catch (const ConfigError& e) {
      throw TrajectoryError("waypoint line " + std::to_string(line_no) + ": " + e.what());
    }
    if (values.empty()) continue;
    if (values.size() != 3 && values.size() != 4) {
      throw TrajectoryError("waypoint line " + std::to_string(line_no) + ": expected x y z [yaw_deg]");
    }
    Waypoint w;
    w.position = {values[0], values[1], values[2]};
    if (values.size() == 4) w.yaw = values[3] * kPi / 180.0;
    out.push_back(w);
  }
  return out;
}

std::vector<Waypoint> load_waypoints(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TrajectoryError("cannot open waypoint file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_waypoints(ss.str());
}

}  // namespace coaxsim
