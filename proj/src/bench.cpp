#include <cmath>
#include <stdexcept>

#include <Eigen/LU>
#include <fmt/format.h>

#include "coaxsim/harness.hpp"

namespace coaxsim {

namespace {

double deflected_torque(const VehicleParams& params, SwashConfig config, const PerRotor<double>& thrusts,
                        const PerRotor<double>& speeds, const Cyclic& deflection) {
  FlapState flaps{};
  for (RotorId id : kRotors) {
    if (is_active(config, id)) flaps[index(id)] = flap_angles(deflection, params.rotor(id));
  }
  return combined_moment(params, thrusts, flaps, speeds).head<2>().norm();
}

}  // namespace

double max_cyclic_torque(const VehicleParams& params, SwashConfig config, double total_thrust) {
  if (!(total_thrust >= 0.0)) throw std::invalid_argument("bench thrust must be nonnegative");
  const PerRotor<double> sq = solve_speed_squares(params, total_thrust, 0.0);
  PerRotor<double> thrusts{}, speeds{};
  for (RotorId id : kRotors) {
    const std::size_t i = index(id);
    if (sq[i] < 0.0) throw std::invalid_argument("thrust cannot be split for zero yaw moment");
    speeds[i] = std::sqrt(sq[i]);
    thrusts[i] = rotor_thrust(speeds[i], params.rotor(id).thrust_coeff);
  }
  const Cyclic deflections[] = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
  double sum = 0.0;
  for (const Cyclic& d : deflections) sum += deflected_torque(params, config, thrusts, speeds, d);
  return sum / 4.0;
}

double max_total_thrust(const VehicleParams& params) {
  const double w = params.motor_speed_max;
  return (params.rotor(RotorId::Upper).thrust_coeff + params.rotor(RotorId::Lower).thrust_coeff) * w * w;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("line fit needs two or more points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("line fit needs distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
  }
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

BenchResult bench_torque(const VehicleParams& params, std::span<const double> normalized_thrust) {
  if (normalized_thrust.size() < 2) throw std::invalid_argument("bench needs at least two thrust levels");
  BenchResult r;
  const double t_max = max_total_thrust(params);
  double up_sum = 0.0, dw_sum = 0.0;
  for (double n : normalized_thrust) {
    const double t = n * t_max;
    r.normalized_thrust.push_back(n);
    r.dual.push_back(max_cyclic_torque(params, SwashConfig::Dual, t));
    r.single_upper.push_back(max_cyclic_torque(params, SwashConfig::SingleUpper, t));
    r.single_lower.push_back(max_cyclic_torque(params, SwashConfig::SingleLower, t));
    if (r.single_upper.back() > 0.0) up_sum += r.dual.back() / r.single_upper.back() - 1.0;
    if (r.single_lower.back() > 0.0) dw_sum += r.dual.back() / r.single_lower.back() - 1.0;
  }
  const double n = static_cast<double>(normalized_thrust.size());
  r.increase_over_upper = up_sum / n;
  r.increase_over_lower = dw_sum / n;
  r.dual_fit = fit_line(r.normalized_thrust, r.dual);
  r.upper_fit = fit_line(r.normalized_thrust, r.single_upper);
  r.lower_fit = fit_line(r.normalized_thrust, r.single_lower);
  return r;
}

std::string format_bench(const BenchResult& r) {
  std::string out = fmt::format("{:>10}{:>14}{:>14}{:>14}\n", "thrust", "dual(Nm)", "upper(Nm)", "lower(Nm)");
  for (std::size_t i = 0; i < r.normalized_thrust.size(); ++i) {
    out += fmt::format("{:>10.3f}{:>14.5f}{:>14.5f}{:>14.5f}\n", r.normalized_thrust[i], r.dual[i],
                       r.single_upper[i], r.single_lower[i]);
  }
  auto fit = [](const char* name, const LinearFit& f) {
    return fmt::format("{:<6} slope {:.5f} Nm  intercept {:.5f} Nm  R^2 {:.6f}\n", name, f.slope,
                       f.intercept, f.r_squared);
  };
  out += fit("dual", r.dual_fit);
  out += fit("upper", r.upper_fit);
  out += fit("lower", r.lower_fit);
  out += fmt::format("dual vs single-upper: {:+.2f}%\n", 100.0 * r.increase_over_upper);
  out += fmt::format("dual vs single-lower: {:+.2f}%\n", 100.0 * r.increase_over_lower);
  return out;
}

VehicleParams calibrate_cyclic_geometry(const VehicleParams& params, double increase_over_upper,
                                        double increase_over_lower) {
  const double thrust = params.weight();
  // Unknowns are log(K) and log(lower gain), which keeps both positive.
  auto with = [&](const Eigen::Vector2d& y) {
    VehicleParams p = params;
    p.flap_stiffness = std::exp(y[0]);
    p.rotor(RotorId::Lower).flap_gain_ele = std::exp(y[1]);
    p.rotor(RotorId::Lower).flap_gain_ail = std::exp(y[1]);
    return p;
  };
  auto residual = [&](const Eigen::Vector2d& y) {
    const VehicleParams p = with(y);
    const double dual = max_cyclic_torque(p, SwashConfig::Dual, thrust);
    const double up = max_cyclic_torque(p, SwashConfig::SingleUpper, thrust);
    const double dw = max_cyclic_torque(p, SwashConfig::SingleLower, thrust);
    return Eigen::Vector2d(dual / up - 1.0 - increase_over_upper, dual / dw - 1.0 - increase_over_lower);
  };

  const RotorParams& up = params.rotor(RotorId::Upper);
  Eigen::Vector2d y(std::log(std::max(params.flap_stiffness, 0.05)),
                    std::log(0.5 * (up.flap_gain_ele + up.flap_gain_ail)));
  Eigen::Vector2d r = residual(y);
  for (int iter = 0; iter < 200; ++iter) {
    if (r.cwiseAbs().maxCoeff() < 1e-12) {
      VehicleParams out = with(y);
      require_valid(out);
      return out;
    }
    Eigen::Matrix2d jac;
    for (int j = 0; j < 2; ++j) {
      const double step = 1e-6;
      Eigen::Vector2d yp = y, ym = y;
      yp[j] += step;
      ym[j] -= step;
      jac.col(j) = (residual(yp) - residual(ym)) / (2.0 * step);
    }
    const Eigen::Vector2d dy = jac.fullPivLu().solve(-r);
    if (!dy.allFinite()) break;
    // Backtrack until the residual shrinks.
    double lambda = 1.0;
    Eigen::Vector2d y_next = y + dy, r_next = residual(y_next);
    while (!(r_next.norm() < r.norm()) && lambda > 1e-8) {
      lambda *= 0.5;
      y_next = y + lambda * dy;
      r_next = residual(y_next);
    }
    if (!(r_next.norm() < r.norm())) break;
    y = y_next;
    r = r_next;
  }
  throw std::runtime_error("cyclic geometry calibration did not converge");
}

}  // namespace coaxsim
