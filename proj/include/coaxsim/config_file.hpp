#pragma once

// Sectioned `key = value` text configuration.
//
//   ; comment
//   base = other.ini        ; optional, top of file: load `other.ini` first
//   [vehicle]
//   mass = 1.25
//   inertia = 0.03 0.03 0.01 0 0 0
//
// Keys are addressed as "section.key". Numbers are written in the shortest
// form that parses back to the identical double, so a write/read cycle is
// bit-exact.

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace coaxsim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigFile {
 public:
  ConfigFile() = default;

  static ConfigFile parse(const std::string& text);
  /// Loads `path`, resolving a top-level `base = ...` include relative to it.
  static ConfigFile load(const std::filesystem::path& path);

  std::string dump() const;
  void save(const std::filesystem::path& path) const;

  bool has(const std::string& path) const;
  const std::string& raw(const std::string& path) const;
  void set_raw(const std::string& path, std::string value);

  double get_double(const std::string& path) const;
  double get_double(const std::string& path, double fallback) const;
  int get_int(const std::string& path) const;
  int get_int(const std::string& path, int fallback) const;
  bool get_bool(const std::string& path, bool fallback) const;
  std::string get_string(const std::string& path, const std::string& fallback) const;
  std::vector<double> get_list(const std::string& path) const;
  Eigen::Vector3d get_vec3(const std::string& path) const;
  Eigen::Vector3d get_vec3(const std::string& path, const Eigen::Vector3d& fallback) const;

  void set(const std::string& path, double value);
  void set(const std::string& path, int value);
  void set(const std::string& path, const std::string& value);
  void set(const std::string& path, const std::vector<double>& values);
  void set(const std::string& path, const Eigen::Vector3d& v);

  /// Copies every entry of `other` over this one.
  void merge(const ConfigFile& other);

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  static std::pair<std::string, std::string> split(const std::string& path);

  std::map<std::string, std::map<std::string, std::string>> sections_;
};

std::string format_double(double v);
double parse_double(const std::string& text);

}  // namespace coaxsim
