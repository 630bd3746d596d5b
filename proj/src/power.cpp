#include <cmath>
#include <stdexcept>

#include "coaxsim/harness.hpp"

namespace coaxsim {

double PowerModel::operator()(double total_thrust) const {
  if (total_thrust < 0.0) throw std::invalid_argument("thrust must be nonnegative");
  return idle + thrust_coeff * total_thrust * std::sqrt(total_thrust);
}

PowerModel fit_power_model(const HoverPowerPoint& a, const HoverPowerPoint& b, double gravity) {
  const double ta = a.mass_kg * gravity;
  const double tb = b.mass_kg * gravity;
  const double xa = ta * std::sqrt(ta);
  const double xb = tb * std::sqrt(tb);
  if (xa == xb) throw std::invalid_argument("power fit needs two distinct thrust levels");
  PowerModel m;
  m.thrust_coeff = (b.power_w - a.power_w) / (xb - xa);
  m.idle = a.power_w - m.thrust_coeff * xa;
  return m;
}

double power_draw(double total_thrust, const VehicleParams& params) {
  return PowerModel{params.power_idle, params.power_thrust_coeff}(total_thrust);
}

double hover_minutes(double energy_wh, double power_w) { return 60.0 * energy_wh / power_w; }

}  // namespace coaxsim
