#include "coaxsim/config_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace coaxsim {

namespace pt = boost::property_tree;

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw ConfigError("cannot format number");
  return std::string(buf, end);
}

double parse_double(const std::string& text) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t')) --last;
  if (first < last && *first == '+') ++first;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw ConfigError("not a number: '" + text + "'");
  }
  return v;
}

std::pair<std::string, std::string> ConfigFile::split(const std::string& path) {
  auto dot = path.find('.');
  if (dot == std::string::npos) return {"", path};
  return {path.substr(0, dot), path.substr(dot + 1)};
}

ConfigFile ConfigFile::parse(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ConfigFile cfg;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      cfg.sections_[""][name] = node.data();
      continue;
    }
    auto& section = cfg.sections_[name];
    for (const auto& [key, value] : node) section[key] = value.data();
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  ConfigFile own = parse(ss.str());

  if (!own.has("base")) return own;
  std::filesystem::path base = own.raw("base");
  if (base.is_relative()) base = path.parent_path() / base;
  ConfigFile merged = load(base);
  own.sections_[""].erase("base");
  if (own.sections_[""].empty()) own.sections_.erase("");
  merged.merge(own);
  return merged;
}

std::string ConfigFile::dump() const {
  pt::ptree tree;
  if (auto it = sections_.find(""); it != sections_.end()) {
    for (const auto& [key, value] : it->second) tree.put(pt::ptree::path_type(key, '\0'), value);
  }
  for (const auto& [name, section] : sections_) {
    if (name.empty()) continue;
    pt::ptree node;
    for (const auto& [key, value] : section) node.put(pt::ptree::path_type(key, '\0'), value);
    tree.add_child(pt::ptree::path_type(name, '\0'), node);
  }
  std::ostringstream out;
  pt::write_ini(out, tree);
  return out.str();
}

void ConfigFile::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file: " + path.string());
  out << dump();
}

bool ConfigFile::has(const std::string& path) const {
  auto [section, key] = split(path);
  auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) > 0;
}

const std::string& ConfigFile::raw(const std::string& path) const {
  auto [section, key] = split(path);
  auto it = sections_.find(section);
  if (it == sections_.end()) throw ConfigError("missing config key: " + path);
  auto kv = it->second.find(key);
  if (kv == it->second.end()) throw ConfigError("missing config key: " + path);
  return kv->second;
}

void ConfigFile::set_raw(const std::string& path, std::string value) {
  auto [section, key] = split(path);
  sections_[section][key] = std::move(value);
}

double ConfigFile::get_double(const std::string& path) const {
  try {
    return parse_double(raw(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

double ConfigFile::get_double(const std::string& path, double fallback) const {
  return has(path) ? get_double(path) : fallback;
}

int ConfigFile::get_int(const std::string& path) const {
  const std::string& text = raw(path);
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(path + ": not an integer: '" + text + "'");
  }
  return v;
}

int ConfigFile::get_int(const std::string& path, int fallback) const {
  return has(path) ? get_int(path) : fallback;
}

bool ConfigFile::get_bool(const std::string& path, bool fallback) const {
  if (!has(path)) return fallback;
  const std::string& v = raw(path);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(path + ": not a boolean: '" + v + "'");
}

std::string ConfigFile::get_string(const std::string& path, const std::string& fallback) const {
  return has(path) ? raw(path) : fallback;
}

std::vector<double> ConfigFile::get_list(const std::string& path) const {
  std::istringstream in(raw(path));
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      out.push_back(parse_double(tok));
    } catch (const ConfigError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  return out;
}

Eigen::Vector3d ConfigFile::get_vec3(const std::string& path) const {
  auto v = get_list(path);
  if (v.size() != 3) throw ConfigError(path + ": expected 3 numbers");
  return {v[0], v[1], v[2]};
}

Eigen::Vector3d ConfigFile::get_vec3(const std::string& path,
                                     const Eigen::Vector3d& fallback) const {
  return has(path) ? get_vec3(path) : fallback;
}

void ConfigFile::set(const std::string& path, double value) { set_raw(path, format_double(value)); }

void ConfigFile::set(const std::string& path, int value) { set_raw(path, std::to_string(value)); }

void ConfigFile::set(const std::string& path, const std::string& value) { set_raw(path, value); }

void ConfigFile::set(const std::string& path, const std::vector<double>& values) {
  std::string text;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) text += ' ';
    text += format_double(values[i]);
  }
  set_raw(path, std::move(text));
}

void ConfigFile::set(const std::string& path, const Eigen::Vector3d& v) {
  set(path, std::vector<double>{v.x(), v.y(), v.z()});
}

void ConfigFile::merge(const ConfigFile& other) {
  for (const auto& [name, section] : other.sections_) {
    for (const auto& [key, value] : section) sections_[name][key] = value;
  }
}

}  // namespace coaxsim
