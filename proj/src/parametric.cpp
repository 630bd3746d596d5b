#include <algorithm>
#include <cmath>

#include "coaxsim/trajectory.hpp"

namespace coaxsim {

namespace {

constexpr double kTwoPi = 2.0 * kPi;
constexpr double kTableSpacing = 0.01;  // m of arc per table interval

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGaussX{-0.9061798459386640, -0.5384693101056831, 0.0,
                                        0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGaussW{0.2369268850561891, 0.4786286704993665,
                                        0.5688888888888889, 0.4786286704993665,
                                        0.2369268850561891};

// Quintic smoothstep 6x^5 - 15x^4 + 10x^3, its integral and derivative.
double smoothstep(double x) { return x * x * x * (x * (6.0 * x - 15.0) + 10.0); }
double smoothstep_integral(double x) { return x * x * x * x * (x * (x - 3.0) + 2.5); }
double smoothstep_rate(double x) { return 30.0 * x * x * (x - 1.0) * (x - 1.0); }

}  // namespace

ParametricTrajectory::ParametricTrajectory(const ParametricSpec& spec) : spec_(spec) {
  if (!(spec.v_max > 0.0)) throw TrajectoryError("v_max must be positive");
  if (!(spec.ramp_duration >= 0.0)) throw TrajectoryError("ramp duration must be nonnegative");
  if (spec.shape == Shape::Circle && !(spec.diameter > 0.0)) {
    throw TrajectoryError("circle diameter must be positive");
  }
  if (spec.shape == Shape::FigureEight && !(spec.width > 0.0 && spec.height > 0.0)) {
    throw TrajectoryError("figure-eight extents must be positive");
  }

  double max_rate = 0.0;
  if (spec.shape == Shape::Circle) {
    max_rate = 0.5 * spec.diameter;
  } else {
    max_rate = std::hypot(0.5 * spec.width, spec.height);
  }
  const auto n = static_cast<std::size_t>(std::ceil(kTwoPi * max_rate / kTableSpacing));
  table_u_.resize(n + 1);
  table_s_.resize(n + 1);
  table_s_[0] = 0.0;
  for (std::size_t i = 0; i <= n; ++i) table_u_[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
  for (std::size_t i = 1; i <= n; ++i) {
    table_s_[i] = table_s_[i - 1] + arc_between(table_u_[i - 1], table_u_[i]);
  }
}

Eigen::Vector3d ParametricTrajectory::curve(double u) const {
  if (spec_.shape == Shape::Circle) {
    const double r = 0.5 * spec_.diameter;
    return spec_.center + Eigen::Vector3d(r * std::cos(u), r * std::sin(u), 0.0);
  }
  return spec_.center +
         Eigen::Vector3d(0.5 * spec_.width * std::sin(u), 0.5 * spec_.height * std::sin(2.0 * u), 0.0);
}

Eigen::Vector3d ParametricTrajectory::curve_d1(double u) const {
  if (spec_.shape == Shape::Circle) {
    const double r = 0.5 * spec_.diameter;
    return {-r * std::sin(u), r * std::cos(u), 0.0};
  }
  return {0.5 * spec_.width * std::cos(u), spec_.height * std::cos(2.0 * u), 0.0};
}

Eigen::Vector3d ParametricTrajectory::curve_d2(double u) const {
  if (spec_.shape == Shape::Circle) {
    const double r = 0.5 * spec_.diameter;
    return {-r * std::cos(u), -r * std::sin(u), 0.0};
  }
  return {-0.5 * spec_.width * std::sin(u), -2.0 * spec_.height * std::sin(2.0 * u), 0.0};
}

double ParametricTrajectory::arc_between(double u0, double u1) const {
  const double half = 0.5 * (u1 - u0);
  const double mid = 0.5 * (u1 + u0);
  double sum = 0.0;
  for (std::size_t k = 0; k < kGaussX.size(); ++k) sum += kGaussW[k] * speed_u(mid + half * kGaussX[k]);
  return half * sum;
}

double ParametricTrajectory::parameter_at(double s) const {
  s = std::clamp(s, 0.0, lap_length());
  auto it = std::upper_bound(table_s_.begin(), table_s_.end(), s);
  std::size_t i = (it == table_s_.begin()) ? 0 : static_cast<std::size_t>(it - table_s_.begin()) - 1;
  i = std::min(i, table_s_.size() - 2);

  // Cubic Hermite guess for u(s) on [s_i, s_{i+1}] using du/ds = 1/|r'(u)|.
  const double s0 = table_s_[i], s1 = table_s_[i + 1];
  const double u0 = table_u_[i], u1 = table_u_[i + 1];
  const double h = s1 - s0;
  const double x = h > 0.0 ? (s - s0) / h : 0.0;
  const double m0 = h / speed_u(u0), m1 = h / speed_u(u1);
  const double x2 = x * x, x3 = x2 * x;
  double u = (2 * x3 - 3 * x2 + 1) * u0 + (x3 - 2 * x2 + x) * m0 + (-2 * x3 + 3 * x2) * u1 +
             (x3 - x2) * m1;

  for (int iter = 0; iter < 8; ++iter) {
    const double f = s0 + arc_between(u0, u) - s;
    const double du = f / speed_u(u);
    u -= du;
    if (std::abs(du) < 1e-15) break;
  }
  return u;
}

std::array<double, 3> ParametricTrajectory::arc_length(double t) const {
  const double v = spec_.v_max;
  const double tr = spec_.ramp_duration;
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (tr > 0.0 && t < tr) {
    const double x = t / tr;
    return {v * tr * smoothstep_integral(x), v * smoothstep(x), v / tr * smoothstep_rate(x)};
  }
  return {v * tr * 0.5 + v * (t - tr), v, 0.0};
}

TrajectorySample ParametricTrajectory::sample(double t) const {
  const auto [s, s_dot, s_ddot] = arc_length(t);
  const double lap = lap_length();
  const double s_lap = s - lap * std::floor(s / lap);
  const double u = parameter_at(s_lap);

  const Eigen::Vector3d d1 = curve_d1(u);
  const Eigen::Vector3d d2 = curve_d2(u);
  const double speed = d1.norm();
  const Eigen::Vector3d tangent = d1 / speed;
  const Eigen::Vector3d curvature = (d2 - d2.dot(tangent) * tangent) / (speed * speed);

  TrajectorySample out;
  out.time = t;
  out.position = curve(u);
  out.velocity = tangent * s_dot;
  out.acceleration = curvature * s_dot * s_dot + tangent * s_ddot;
  out.yaw = spec_.yaw;
  return out;
}

}  // namespace coaxsim
