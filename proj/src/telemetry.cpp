#include "telemetry.hpp"

#include <charconv>

namespace coaxsim {

const std::string& telemetry_header() {
  static const std::string header =
      "t,px,py,pz,vx,vy,vz,qw,qx,qy,qz,wx,wy,wz,"
      "pdx,pdy,pdz,vdx,vdy,vdz,"
      "omega_up,omega_dw,ele_up,ail_up,ele_dw,ail_dw,"
      "cmd_ele_up,cmd_ail_up,cmd_ele_dw,cmd_ail_dw,"
      "thrust_cmd,mx_cmd,my_cmd,mz_cmd,power,sat_flags";
  return header;
}

namespace detail {

namespace {

class RowBuffer {
 public:
  void add(double v) {
    if (len_ != 0) buf_[len_++] = ',';
    auto res = std::to_chars(buf_ + len_, buf_ + sizeof(buf_), v);
    len_ = static_cast<std::size_t>(res.ptr - buf_);
  }
  void add(const Eigen::Vector3d& v) {
    add(v.x());
    add(v.y());
    add(v.z());
  }
  void add_flags(std::uint32_t flags) {
    buf_[len_++] = ',';
    auto res = std::to_chars(buf_ + len_, buf_ + sizeof(buf_), flags);
    len_ = static_cast<std::size_t>(res.ptr - buf_);
  }
  void flush(std::ostream& out) {
    buf_[len_++] = '\n';
    out.write(buf_, static_cast<std::streamsize>(len_));
  }

 private:
  char buf_[2048];
  std::size_t len_{0};
};

}  // namespace

void write_telemetry_row(std::ostream& out, const TelemetryRow& row) {
  RowBuffer b;
  b.add(row.time);
  b.add(row.state->position);
  b.add(row.state->velocity);
  const Eigen::Quaterniond& q = row.state->attitude;
  b.add(q.w());
  b.add(q.x());
  b.add(q.y());
  b.add(q.z());
  b.add(row.state->angular_rate);
  b.add(row.reference->position);
  b.add(row.reference->velocity);
  for (double w : row.actuators->rotor_speed) b.add(w);
  for (const Cyclic& c : row.actuators->cyclic) {
    b.add(c.ele);
    b.add(c.ail);
  }
  for (const Cyclic& c : row.actuators->cyclic_cmd) {
    b.add(c.ele);
    b.add(c.ail);
  }
  b.add(row.command->thrust);
  b.add(row.command->moment);
  b.add(row.power);
  b.add_flags(row.saturation_flags);
  b.flush(out);
}

}  // namespace detail
}  // namespace coaxsim
