#include "dipsim/params.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dipsim {

Boundary boundary_from_string(const std::string& s) {
  if (s == "periodic") return Boundary::periodic;
  if (s == "open") return Boundary::open;
  if (s == "harmonic") return Boundary::harmonic;
  throw std::invalid_argument("unknown boundary: " + s);
}

std::string to_string(Boundary b) {
  switch (b) {
    case Boundary::periodic: return "periodic";
    case Boundary::open: return "open";
    case Boundary::harmonic: return "harmonic";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

KeyValues parse_config_text(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected `key = value`");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": empty key or value");
    kv[key] = value;
  }
  return kv;
}

KeyValues parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void ModelParams::validate() const {
  if (!(r_d > 0.0)) throw std::invalid_argument("r_d must be > 0");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  if (epsilon >= 0.5)
    throw std::invalid_argument(
        "epsilon >= 0.5 leaves the crystal stability regime (require delta_mu << mu_0)");
  if (!(b_over_a > 0.0)) throw std::invalid_argument("b_over_a must be > 0");
  if (omega_perp && !(*omega_perp > 0.0))
    throw std::invalid_argument("omega_perp must be > 0");
  if (omega_long && !(*omega_long > 0.0))
    throw std::invalid_argument("omega_long must be > 0");
  if (n_molecules < 2) throw std::invalid_argument("n_molecules must be >= 2");
  if (!(delta_u_bar > 0.0 && delta_u_bar < 1.0))
    throw std::invalid_argument("delta_u_bar must lie in (0,1)");
}

void ModelParams::require_crystalline() const {
  validate();
  if (!(r_d > 1.0))
    throw std::invalid_argument("crystal scenarios require r_d > 1 (crystalline phase)");
}

namespace {

double parse_double(const KeyValues& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  size_t pos = 0;
  const double v = std::stod(it->second, &pos);
  if (pos != it->second.size())
    throw std::invalid_argument("bad numeric value for " + key + ": " + it->second);
  return v;
}

int parse_int(const KeyValues& kv, const std::string& key, int fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  size_t pos = 0;
  const int v = std::stoi(it->second, &pos);
  if (pos != it->second.size())
    throw std::invalid_argument("bad integer value for " + key + ": " + it->second);
  return v;
}

}  // namespace

ModelParams ModelParams::from_config(const KeyValues& kv) {
  ModelParams p;
  p.r_d = parse_double(kv, "r_d", p.r_d);
  p.epsilon = parse_double(kv, "epsilon", p.epsilon);
  p.b_over_a = parse_double(kv, "b_over_a", p.b_over_a);
  if (kv.count("omega_perp")) p.omega_perp = parse_double(kv, "omega_perp", 0.0);
  if (kv.count("omega_long")) p.omega_long = parse_double(kv, "omega_long", 0.0);
  p.n_molecules = parse_int(kv, "n_molecules", p.n_molecules);
  if (auto it = kv.find("boundary"); it != kv.end())
    p.boundary = boundary_from_string(it->second);
  p.delta_u_bar = parse_double(kv, "delta_u_bar", p.delta_u_bar);
  p.validate();
  return p;
}

KeyValues ModelParams::to_config() const {
  KeyValues kv;
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  kv["r_d"] = num(r_d);
  kv["epsilon"] = num(epsilon);
  kv["b_over_a"] = num(b_over_a);
  if (omega_perp) kv["omega_perp"] = num(*omega_perp);
  if (omega_long) kv["omega_long"] = num(*omega_long);
  kv["n_molecules"] = std::to_string(n_molecules);
  kv["boundary"] = to_string(boundary);
  kv["delta_u_bar"] = num(delta_u_bar);
  return kv;
}

}  // namespace dipsim
