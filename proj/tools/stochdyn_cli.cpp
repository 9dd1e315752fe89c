// stochdyn: command-line driver.
//
// Exit codes: 0 ok, 1 an acceptance criterion failed, 2 unreadable or
// malformed input, 3 invalid system or computation error, 4 exceptional
// starting point.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <set>

#include "stochdyn/acceptance.hpp"
#include "stochdyn/archpotential.hpp"
#include "stochdyn/config.hpp"
#include "stochdyn/heights.hpp"
#include "stochdyn/padicmodel.hpp"
#include "stochdyn/stochheight.hpp"

using nlohmann::json;
using namespace stochdyn;

namespace {

struct Flags {
  std::string config;
  std::string alpha = "1";
  std::string place = "arch";
  std::string out;
  std::string z = "0";
  std::optional<std::uint64_t> seed;
  std::optional<int> depth;
  std::optional<std::size_t> samples;
  std::optional<double> tol;
  unsigned workers = 0;
};

struct Loaded {
  SystemConfig cfg;
  StochasticSystem sys;
  std::string hash;
};

Loaded load(const Flags& f) {
  SystemConfig c = load_config(f.config);
  const std::string hash = config_hash(c);
  if (f.seed) c.seed = *f.seed;
  if (f.depth) c.depth = *f.depth;
  if (f.samples) c.samples = *f.samples;
  if (f.tol) c.tol = *f.tol;
  if (c.precision > 15) throw Error(ErrorCode::InvalidArgument, "precision above 15 digits is not supported");
  return Loaded{c, c.system(), hash};
}

json record(const Loaded& l, const std::string& command) {
  return json{{"command", command}, {"config_hash", l.hash}, {"seed", l.cfg.seed}, {"version", kVersion}};
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

void write_out(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  std::ofstream o(path, std::ios::binary);
  if (!o) throw Error(ErrorCode::ParseError, "cannot write " + path);
  o << text;
}

std::string rat(const BigRat& q) { return q.get_str(); }

int cmd_validate(const Flags& f) {
  Loaded l = load(f);
  json j = record(l, "validate");
  std::set<BigInt> bad;
  bool complete = true;
  json maps = json::array();
  for (std::size_t i = 0; i < l.sys.size(); ++i) {
    const auto& phi = l.sys.map(i);
    BadPrimes bp = bad_primes(phi);
    complete = complete && bp.complete;
    json primes = json::array();
    for (const auto& p : bp.primes) {
      primes.push_back(p.get_str());
      bad.insert(p);
    }
    maps.push_back({{"map", phi.str()}, {"prob", rat(l.sys.prob(i))}, {"degree", phi.degree()},
                    {"resultant", phi.res().get_str()}, {"bad_primes", primes}, {"factored", bp.complete}});
  }
  j["maps"] = maps;
  json all = json::array();
  for (const auto& p : bad) all.push_back(p.get_str());
  j["bad_primes"] = all;
  j["bad_primes_complete"] = complete;
  j["delta_S"] = rat(stochastic_degree(l.sys));
  L1Control c = l1_height_control_total(l.sys);
  j["int_C_S"] = c.total;
  json per = json::array();
  for (const auto& [v, x] : c.per_place) per.push_back({{"place", v.str()}, {"value", x}});
  j["int_C_S_by_place"] = per;
  ExceptionalSet ex = exceptional_set(l.sys);
  json pts = json::array();
  for (const auto& p : ex.points) pts.push_back(p.str());
  j["exceptional_set"] = pts;
  json cands = json::array();
  for (const auto& q : ex.irrational_candidates) cands.push_back(q.str());
  j["untested_irrational_candidates"] = cands;
  j["valid"] = true;
  emit(j);
  return 0;
}

int cmd_height(const Flags& f) {
  const ProjPoint a = parse_point(f.alpha);
  json j{{"command", "height"}, {"alpha", a.str()}, {"weil_height", weil_height(a)}, {"version", kVersion}};
  if (!f.config.empty()) {
    Loaded l = load(f);
    j = record(l, "height");
    j["alpha"] = a.str();
    j["weil_height"] = weil_height(a);
  }
  emit(j);
  return 0;
}

int cmd_stoch_height(const Flags& f) {
  Loaded l = load(f);
  const ProjPoint a = parse_point(f.alpha);
  StochHeightOptions o;
  o.workers = f.workers;
  StochHeightEstimate e = stoch_height(l.sys, a, l.cfg.tol, o, l.cfg.seed);
  json j = record(l, "stoch-height");
  j["alpha"] = a.str();
  j["value"] = e.value;
  j["stderr"] = e.stderr_;
  j["tail_bound"] = e.tail_bound;
  j["depth"] = e.depth;
  j["mode"] = std::string(to_string(e.mode));
  j["samples"] = e.samples;
  emit(j);
  return 0;
}

int cmd_orbit_sample(const Flags& f) {
  Loaded l = load(f);
  const ProjPoint a = parse_point(f.alpha);
  OrbitSampleBatch b = backward_sample(l.sys, a, l.cfg.depth, l.cfg.samples, l.cfg.seed, f.workers);
  write_out(f.out, samples_csv(b));
  json j = record(l, "orbit-sample");
  j["alpha"] = a.str();
  j["depth"] = b.depth;
  j["samples"] = b.samples;
  if (!f.out.empty()) j["csv"] = f.out;
  emit(j);
  return 0;
}

int cmd_equidist(const Flags& f) {
  Loaded l = load(f);
  const ProjPoint a = parse_point(f.alpha);
  json j = record(l, "equidist");
  j["alpha"] = a.str();
  j["place"] = f.place;
  j["depth"] = l.cfg.depth;
  j["samples"] = l.cfg.samples;
  if (f.place == "arch") {
    ArchEquidistOptions eo;
    eo.workers = f.workers;
    ArchEquidist r = equidist_test_arch(l.sys, a, l.cfg.depth, l.cfg.samples, l.cfg.seed, eo);
    j["ks_radial"] = r.ks_radial;
    j["ks_angular"] = r.ks_angular;
    j["potential_residual"] = r.potential_residual;
    j["closed_form_reference"] = r.closed_form_reference;
    j["point_mass_reference"] = r.point_mass_reference;
    write_out(f.out, radial_cdf_csv(r));
  } else {
    BigInt p;
    try {
      p = BigInt(f.place);
    } catch (const std::invalid_argument&) {
      throw Error(ErrorCode::ParseError, "--place must be 'arch' or a prime, got '" + f.place + "'");
    }
    PadicEquidist r = equidist_test_padic(l.sys, p, a, l.cfg.depth, l.cfg.samples, l.cfg.seed, f.workers);
    j["ks"] = r.ks;
    j["place_kind"] = std::string(to_string(r.kind));
    j["point_mass_reference"] = r.point_mass_reference;
    j["segment"] = {r.reference.v_lo(), r.reference.v_hi()};
    write_out(f.out, valuation_cdf_csv(r));
  }
  if (!f.out.empty()) j["csv"] = f.out;
  emit(j);
  return 0;
}

ComplexVal parse_complex(const std::string& text) {
  const auto comma = text.find(',');
  try {
    if (comma == std::string::npos) return {std::stod(text), 0.0};
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "expected 're' or 're,im', got '" + text + "'");
  }
}

int cmd_green_eval(const Flags& f) {
  Loaded l = load(f);
  GreenConfig g;
  g.tol = l.cfg.tol;
  g.seed = l.cfg.seed;
  g.workers = f.workers;
  g.precision = l.cfg.precision;
  const ComplexVal z = parse_complex(f.z);
  GreenValue v = gS_eval(l.sys, z, g);
  json j = record(l, "green-eval");
  j["z"] = {z.real(), z.imag()};
  j["value"] = v.value;
  j["stderr"] = v.stderr_;
  j["tail_bound"] = v.tail_bound;
  j["depth"] = v.depth;
  j["mode"] = std::string(to_string(v.mode));
  j["samples"] = v.samples;
  emit(j);
  return 0;
}

int cmd_radii(const Flags& f) {
  Loaded l = load(f);
  RadiiOptions o;
  o.green.seed = l.cfg.seed;
  o.green.workers = f.workers;
  Radii r = radii(l.sys, o);
  json j = record(l, "radii");
  j["r_in"] = r.r_in;
  j["r_out"] = r.r_out;
  j["self_energy"] = r.self_energy;
  j["self_energy_stderr"] = r.self_energy_stderr;
  j["g_min"] = r.g_min;
  j["g_max"] = r.g_max;
  emit(j);
  return 0;
}

int cmd_suite(const Flags& f) {
  Loaded l = load(f);
  AcceptanceOptions o;
  if (f.seed) o.seed = *f.seed;
  o.workers = f.workers;
  int failed = 0;
  for (int id = 1; id <= kCriteriaCount; ++id) {
    CriterionResult r = run_criterion(id, o);
    std::cout << format_result(r) << std::endl;
    if (!r.pass) ++failed;
  }
  std::cout << "config " << l.hash << ", version " << kVersion << ": " << kCriteriaCount - failed << "/"
            << kCriteriaCount << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::ParseError:
    case ErrorCode::InvalidArgument:
      return 2;
    case ErrorCode::ExceptionalStart:
      return 4;
    default:
      return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic arithmetic dynamics on P^1(Q)"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Flags f;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", f.config, "JSON system configuration");
    if (needs_config) opt->required();
    sub->add_option("--seed", f.seed, "override the configured seed");
    sub->add_option("--depth", f.depth, "override the configured depth");
    sub->add_option("--samples", f.samples, "override the configured sample count");
    sub->add_option("--tol", f.tol, "override the configured tolerance");
    sub->add_option("--workers", f.workers, "worker threads (0: all cores)");
  };

  std::vector<std::pair<CLI::App*, std::function<int(const Flags&)>>> cmds;
  auto add = [&](const char* name, const char* help, bool needs_config, std::function<int(const Flags&)> run) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, needs_config);
    cmds.emplace_back(sub, std::move(run));
    return sub;
  };

  add("validate", "check a configuration and print its invariants", true, cmd_validate);
  add("height", "absolute Weil height of a rational point", false, cmd_height)->add_option("alpha", f.alpha)->required();
  add("stoch-height", "stochastic canonical height of a rational point", true, cmd_stoch_height)
      ->add_option("alpha", f.alpha)
      ->required();
  auto* orbit = add("orbit-sample", "sample backward orbits; CSV log_abs,arg via --out", true, cmd_orbit_sample);
  orbit->add_option("alpha", f.alpha)->required();
  orbit->add_option("--out", f.out, "CSV output path");
  auto* eq = add("equidist", "equidistribution statistics; CDF dump via --out", true, cmd_equidist);
  eq->add_option("alpha", f.alpha)->required();
  eq->add_option("--place", f.place, "'arch' or a prime");
  eq->add_option("--out", f.out, "CSV output path");
  add("green-eval", "normalized Green's function at a complex point", true, cmd_green_eval)
      ->add_option("z", f.z, "'re' or 're,im'")
      ->required();
  add("radii", "inner and outer radii of the canonical measure", true, cmd_radii);
  add("suite", "validate the configuration and run the acceptance battery", true, cmd_suite);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (auto& [sub, run] : cmds)
      if (sub->parsed()) return run(f);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
