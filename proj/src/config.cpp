#include "stochdyn/config.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace stochdyn {

const char* const kVersion = "1.0.0";

namespace {

using nlohmann::json;

std::vector<long long> coeff_list(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) throw Error(ErrorCode::ParseError, std::string("map needs integer list '") + key + "'");
  std::vector<long long> out;
  for (const auto& c : j[key]) {
    if (!c.is_number_integer()) throw Error(ErrorCode::ParseError, std::string("non-integer coefficient in '") + key + "'");
    out.push_back(c.get<long long>());
  }
  return out;
}

IntPoly to_poly(const std::vector<long long>& c) {
  std::vector<BigInt> v;
  for (long long x : c) v.emplace_back(static_cast<long>(x));
  return IntPoly(std::move(v));
}

}  // namespace

SystemConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!j.is_object() || !j.contains("maps") || !j["maps"].is_array())
    throw Error(ErrorCode::ParseError, "config needs a 'maps' array");
  SystemConfig c;
  for (const auto& m : j["maps"]) {
    if (!m.is_object()) throw Error(ErrorCode::ParseError, "each map must be an object");
    MapConfig mc;
    mc.num_coeffs = coeff_list(m, "num_coeffs");
    mc.den_coeffs = coeff_list(m, "den_coeffs");
    if (!m.contains("prob") || !m["prob"].is_string()) throw Error(ErrorCode::ParseError, "map needs a string 'prob'");
    mc.prob = m["prob"].get<std::string>();
    c.maps.push_back(std::move(mc));
  }
  try {
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("depth")) c.depth = j["depth"].get<int>();
    if (j.contains("samples")) c.samples = j["samples"].get<std::size_t>();
    if (j.contains("tol")) c.tol = j["tol"].get<double>();
    if (j.contains("precision")) c.precision = j["precision"].get<int>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return c;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

StochasticSystem SystemConfig::system() const {
  std::vector<RationalMap> ms;
  std::vector<BigRat> ps;
  for (const auto& m : maps) {
    ms.push_back(make_map(to_poly(m.num_coeffs), to_poly(m.den_coeffs)));
    ps.push_back(parse_rational(m.prob));
  }
  return StochasticSystem(std::move(ms), std::move(ps));
}

std::string SystemConfig::canonical_json() const {
  json j;
  j["maps"] = json::array();
  for (const auto& m : maps) j["maps"].push_back({{"num_coeffs", m.num_coeffs}, {"den_coeffs", m.den_coeffs}, {"prob", m.prob}});
  j["seed"] = seed;
  j["depth"] = depth;
  j["samples"] = samples;
  j["tol"] = tol;
  j["precision"] = precision;
  return j.dump();
}

std::string config_hash(const SystemConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : c.canonical_json()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace stochdyn
