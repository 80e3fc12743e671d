#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace ebgevrey {

/// Where the Kelvin-Voigt viscosity acts. `localized` is the physical model
/// (viscosity only on (ell0, ell1)); `global` spreads it over the whole beam
/// and exists as the analytic-semigroup reference case.
enum class ViscousExtent { localized, global };

/// Geometry, material and damping data of the clamped five-segment beam.
struct BeamConfig {
  double ell = 1.0;
  double ell0 = 0.4;
  double ell1 = 0.7;
  double xi1 = 0.2;
  double xi2 = 0.55;
  double rho1 = 1.0;
  double rho2 = 1.0;
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double alpha0 = 0.1;
  double gamma1 = 0.5;
  double gamma2 = 0.5;
  double gamma3 = 0.5;
  ViscousExtent extent = ViscousExtent::localized;

  bool undamped() const {
    return alpha0 == 0.0 && gamma1 == 0.0 && gamma2 == 0.0 && gamma3 == 0.0;
  }
  bool uniform() const { return rho1 == rho2 && alpha1 == alpha2; }
};

inline const std::array<const char*, 13>& config_keys() {
  static const std::array<const char*, 13> keys = {
      "ell",    "ell0",   "ell1",   "xi1",    "xi2",    "rho1",  "rho2",
      "alpha1", "alpha2", "alpha0", "gamma1", "gamma2", "gamma3"};
  return keys;
}

/// Reference instance used throughout the tests and the CLI defaults.
inline BeamConfig default_config() { return BeamConfig{}; }

/// Conservative limit: no viscosity, no point dampers.
inline BeamConfig undamped_config(BeamConfig c = default_config()) {
  c.alpha0 = c.gamma1 = c.gamma2 = c.gamma3 = 0.0;
  return c;
}

using RawConfig = std::map<std::string, double>;

struct ConfigIssue {
  ErrorCode code;
  std::string message;
};

/// Thrown by validation; lists every violated invariant, not only the first.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues)
      : Error(issues.empty() ? ErrorCode::invalid_argument : issues.front().code,
              summarize(issues)),
        issues_(std::move(issues)) {}

  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  static std::string summarize(const std::vector<ConfigIssue>& issues) {
    std::string out;
    for (const auto& i : issues) {
      if (!out.empty()) out += "; ";
      out += std::string(to_string(i.code)) + " (" + i.message + ")";
    }
    return out;
  }
  std::vector<ConfigIssue> issues_;
};

/// `strict` is the model as posed (all damping gains > 0). `allow_zero_damping`
/// admits alpha0 = 0 and gamma_i = 0 for the conservative and reference cases.
enum class DampingPolicy { strict, allow_zero_damping };

inline RawConfig to_raw(const BeamConfig& c) {
  return {{"ell", c.ell},       {"ell0", c.ell0},     {"ell1", c.ell1},
          {"xi1", c.xi1},       {"xi2", c.xi2},       {"rho1", c.rho1},
          {"rho2", c.rho2},     {"alpha1", c.alpha1}, {"alpha2", c.alpha2},
          {"alpha0", c.alpha0}, {"gamma1", c.gamma1}, {"gamma2", c.gamma2},
          {"gamma3", c.gamma3}};
}

inline BeamConfig validate_config(const RawConfig& raw,
                                  DampingPolicy policy = DampingPolicy::strict) {
  std::vector<ConfigIssue> issues;
  for (const char* key : config_keys()) {
    if (!raw.count(key)) issues.push_back({ErrorCode::missing_key, std::string("missing key ") + key});
  }
  for (const auto& [key, value] : raw) {
    bool known = false;
    for (const char* k : config_keys()) known = known || key == k;
    if (!known) issues.push_back({ErrorCode::unknown_key, "unknown key " + key});
    if (!std::isfinite(value)) issues.push_back({ErrorCode::invalid_argument, key + " is not finite"});
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));

  BeamConfig c;
  c.ell = raw.at("ell");
  c.ell0 = raw.at("ell0");
  c.ell1 = raw.at("ell1");
  c.xi1 = raw.at("xi1");
  c.xi2 = raw.at("xi2");
  c.rho1 = raw.at("rho1");
  c.rho2 = raw.at("rho2");
  c.alpha1 = raw.at("alpha1");
  c.alpha2 = raw.at("alpha2");
  c.alpha0 = raw.at("alpha0");
  c.gamma1 = raw.at("gamma1");
  c.gamma2 = raw.at("gamma2");
  c.gamma3 = raw.at("gamma3");

  for (auto [name, v] : {std::pair{"rho1", c.rho1}, {"rho2", c.rho2},
                         {"alpha1", c.alpha1}, {"alpha2", c.alpha2}, {"ell", c.ell}}) {
    if (!(v > 0.0))
      issues.push_back({ErrorCode::non_positive_coefficient, std::string(name) + " must be > 0"});
  }
  for (auto [name, v] : {std::pair{"alpha0", c.alpha0}, {"gamma1", c.gamma1},
                         {"gamma2", c.gamma2}, {"gamma3", c.gamma3}}) {
    const bool ok = policy == DampingPolicy::strict ? v > 0.0 : v >= 0.0;
    if (!ok) {
      issues.push_back({ErrorCode::non_positive_coefficient,
                        std::string(name) + (policy == DampingPolicy::strict ? " must be > 0" : " must be >= 0")});
    }
  }

  const double tol = 1e-12 * std::abs(c.ell);
  for (auto [name, xi] : {std::pair{"xi1", c.xi1}, {"xi2", c.xi2}}) {
    for (auto [iname, at] : {std::pair{"0", 0.0}, {"ell0", c.ell0}, {"ell1", c.ell1}, {"ell", c.ell}}) {
      if (std::abs(xi - at) <= tol)
        issues.push_back({ErrorCode::point_on_interface, std::string(name) + " coincides with " + iname});
    }
  }
  const std::array<std::pair<const char*, double>, 6> chain = {
      std::pair{"0", 0.0}, {"xi1", c.xi1}, {"ell0", c.ell0}, {"xi2", c.xi2}, {"ell1", c.ell1}, {"ell", c.ell}};
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    if (!(chain[i].second < chain[i + 1].second) && std::abs(chain[i].second - chain[i + 1].second) > tol) {
      issues.push_back({ErrorCode::ordering_violation,
                        std::string(chain[i].first) + " < " + chain[i + 1].first + " violated"});
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

inline BeamConfig validate_config(const BeamConfig& c, DampingPolicy policy = DampingPolicy::strict) {
  BeamConfig out = validate_config(to_raw(c), policy);
  out.extent = c.extent;
  return out;
}

/// Parses the flat `key = value` format (one assignment per line, `#` comments).
inline RawConfig parse_config_text(const std::string& text) {
  RawConfig raw;
  std::vector<ConfigIssue> issues;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      issues.push_back({ErrorCode::malformed_line, "line " + std::to_string(lineno) + ": expected key = value"});
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(val, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (key.empty() || val.empty() || used != val.size()) {
      issues.push_back({ErrorCode::malformed_line, "line " + std::to_string(lineno) + ": bad assignment"});
      continue;
    }
    if (raw.count(key)) {
      issues.push_back({ErrorCode::malformed_line, "line " + std::to_string(lineno) + ": duplicate key " + key});
      continue;
    }
    raw[key] = v;
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return raw;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::io_error, "read failed for " + path);
  return ss.str();
}

inline BeamConfig load_config(const std::string& path, DampingPolicy policy = DampingPolicy::strict) {
  return validate_config(parse_config_text(read_text_file(path)), policy);
}

struct Coefficients {
  double rho;
  double alpha;
  double kappa;
};

/// One of the five open intervals of the partition (0,xi1,ell0,xi2,ell1,ell).
struct Segment {
  double a;
  double b;
  double rho;
  double alpha;
  double kappa;

  double length() const { return b - a; }
  bool viscous() const { return kappa != 0.0; }
};

inline bool in_viscous_part(const BeamConfig& c, double x) { return x > c.ell0 && x < c.ell1; }

inline Coefficients coeff_at(const BeamConfig& c, double x) {
  const double tol = 1e-12 * c.ell;
  if (x < -tol || x > c.ell + tol) throw Error(ErrorCode::out_of_domain, "x outside [0, ell]");
  if (std::abs(x - c.ell0) <= tol || std::abs(x - c.ell1) <= tol)
    throw Error(ErrorCode::on_discontinuity, "x is a material interface; take one-sided values");
  const bool inner = in_viscous_part(c, x);
  const double kappa = (inner || c.extent == ViscousExtent::global) ? c.alpha0 : 0.0;
  return inner ? Coefficients{c.rho2, c.alpha2, kappa} : Coefficients{c.rho1, c.alpha1, kappa};
}

inline std::array<double, 6> breakpoints(const BeamConfig& c) {
  return {0.0, c.xi1, c.ell0, c.xi2, c.ell1, c.ell};
}

inline std::array<Segment, 5> segments(const BeamConfig& c) {
  const auto bp = breakpoints(c);
  std::array<Segment, 5> out{};
  for (std::size_t s = 0; s < 5; ++s) {
    const auto co = coeff_at(c, 0.5 * (bp[s] + bp[s + 1]));
    out[s] = Segment{bp[s], bp[s + 1], co.rho, co.alpha, co.kappa};
  }
  return out;
}

}  // namespace ebgevrey
