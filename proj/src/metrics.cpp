#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "coaxsim/harness.hpp"

namespace coaxsim {

MetricsReport compute_metrics(const RunLog& log) {
  if (log.samples.empty()) throw MetricsError("cannot compute metrics of an empty log");

  MetricsReport r;
  r.config = to_string(log.config);
  r.mass_g = 1000.0 * log.mass_kg;
  r.completed = !log.aborted;

  auto first = std::find_if(log.samples.begin(), log.samples.end(),
                            [&](const LogSample& s) { return s.time >= log.window_start; });
  if (first == log.samples.end()) first = log.samples.begin();

  double sum_sq = 0.0;
  double sum_power = 0.0;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double roll_min = kInf, roll_max = -kInf, pitch_min = kInf, pitch_max = -kInf;
  r.max_power = -kInf;

  for (auto it = first; it != log.samples.end(); ++it) {
    const LogSample& s = *it;
    const double err = (s.position - s.reference).norm();
    if (!s.finite || !std::isfinite(err) || err > log.divergence_threshold) r.completed = false;
    if (std::isfinite(err)) {
      sum_sq += err * err;
      r.mae = std::max(r.mae, err);
    }
    sum_power += s.power;
    r.max_power = std::max(r.max_power, s.power);
    for (RotorId id : kRotors) {
      if (!is_active(log.config, id)) continue;
      const Cyclic& c = s.cyclic_cmd[index(id)];
      roll_min = std::min(roll_min, c.ail);
      roll_max = std::max(roll_max, c.ail);
      pitch_min = std::min(pitch_min, c.ele);
      pitch_max = std::max(pitch_max, c.ele);
    }
    ++r.window_samples;
  }
  // Samples before the window still count toward divergence.
  for (auto it = log.samples.begin(); it != first; ++it) {
    if (!it->finite || (it->position - it->reference).norm() > log.divergence_threshold) r.completed = false;
  }

  const double n = static_cast<double>(r.window_samples);
  r.rmse = std::sqrt(sum_sq / n);
  r.avg_power = sum_power / n;
  r.efficiency = r.avg_power > 0.0 ? r.mass_g / r.avg_power : 0.0;
  r.roll_min = roll_min;
  r.roll_max = roll_max;
  r.pitch_min = pitch_min;
  r.pitch_max = pitch_max;
  r.window_start = first->time;
  r.window_end = log.samples.back().time;

  r.saturation_count = log.saturation.size();
  const std::size_t keep = std::min(log.saturation.size(), MetricsReport::kMaxStoredEvents);
  r.saturation_events.assign(log.saturation.begin(), log.saturation.begin() + static_cast<std::ptrdiff_t>(keep));
  return r;
}

void write_metrics(std::ostream& out, const MetricsReport& r) {
  out << fmt::format("config = {}\n", r.config);
  out << fmt::format("completed = {}\n", r.completed ? "true" : "false");
  out << fmt::format("rmse_m = {}\n", r.rmse);
  out << fmt::format("mae_m = {}\n", r.mae);
  out << fmt::format("roll_control_min = {}\n", r.roll_min);
  out << fmt::format("roll_control_max = {}\n", r.roll_max);
  out << fmt::format("pitch_control_min = {}\n", r.pitch_min);
  out << fmt::format("pitch_control_max = {}\n", r.pitch_max);
  out << fmt::format("avg_power_w = {}\n", r.avg_power);
  out << fmt::format("max_power_w = {}\n", r.max_power);
  out << fmt::format("efficiency_g_per_w = {}\n", r.efficiency);
  out << fmt::format("mass_g = {}\n", r.mass_g);
  out << fmt::format("window_start_s = {}\n", r.window_start);
  out << fmt::format("window_end_s = {}\n", r.window_end);
  out << fmt::format("window_samples = {}\n", r.window_samples);
  out << fmt::format("saturation_count = {}\n", r.saturation_count);
  if (!r.saturation_events.empty()) {
    const SaturationRecord& e = r.saturation_events.front();
    out << fmt::format("first_saturation_time_s = {}\n", e.time);
    out << fmt::format("first_saturation_channel = {}\n", to_string(e.channel));
  }
}

}  // namespace coaxsim
