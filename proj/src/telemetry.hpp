#pragma once

#include <cstdint>
#include <ostream>

#include "coaxsim/harness.hpp"

namespace coaxsim::detail {

struct TelemetryRow {
  double time;
  const RigidBodyState* state;
  const TrajectorySample* reference;
  const ActuatorState* actuators;
  const ControlCommand* command;
  double power;
  std::uint32_t saturation_flags;
};

void write_telemetry_row(std::ostream& out, const TelemetryRow& row);

}  // namespace coaxsim::detail
