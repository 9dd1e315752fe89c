#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "stochdyn/config.hpp"

using namespace stochdyn;
namespace fs = std::filesystem;

namespace {

const std::string kCli = STOCHDYN_CLI;
const std::string kConfigs = STOCHDYN_CONFIGS;

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const fs::path tmp = fs::temp_directory_path() / ("stochdyn_cli_" + std::to_string(::getpid()) + ".out");
  const std::string cmd = kCli + " " + args + " > " + tmp.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(tmp);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  fs::remove(tmp);
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string example() { return "--config " + kConfigs + "/example.json"; }

}  // namespace

TEST_CASE("config parsing keeps rationals exact and rejects malformed input") {
  SystemConfig c = load_config(kConfigs + "/example.json");
  REQUIRE(c.maps.size() == 2);
  CHECK(c.maps[1].prob == "1/2");
  CHECK(c.seed == 20240601u);
  CHECK(c.system().prob(0) == BigRat(1, 2));
  CHECK(config_hash(c) == config_hash(parse_config(c.canonical_json())));
  CHECK(config_hash(c).size() == 16);

  SystemConfig other = c;
  other.seed = 1;
  CHECK(config_hash(other) != config_hash(c));

  auto code_of = [](const std::string& text) {
    try {
      parse_config(text).system();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ZeroPoint;
  };
  CHECK(code_of("{") == ErrorCode::ParseError);
  CHECK(code_of(R"({"maps": 3})") == ErrorCode::ParseError);
  CHECK(code_of(R"({"maps": [{"num_coeffs": [0, 0, 1], "den_coeffs": [1], "prob": 1}]})") == ErrorCode::ParseError);
  CHECK(code_of(R"({"maps": [{"num_coeffs": [0, 0.5], "den_coeffs": [1], "prob": "1"}]})") == ErrorCode::ParseError);
  CHECK(code_of(R"({"maps": [{"num_coeffs": [0, 0, 1], "den_coeffs": [1], "prob": "9/10"}]})") ==
        ErrorCode::InvalidSystem);
  CHECK(code_of(R"({"maps": [{"num_coeffs": [0, 1], "den_coeffs": [1], "prob": "1"}]})") == ErrorCode::DegreeTooLow);
}

TEST_CASE("validate reports invariants and maps failures to exit codes") {
  Run ok = run("validate " + example());
  REQUIRE(ok.code == 0);
  auto j = nlohmann::json::parse(ok.out);
  CHECK(j["delta_S"] == "2");
  CHECK(j["bad_primes"] == nlohmann::json::array({"2"}));
  CHECK(j["exceptional_set"] == nlohmann::json::array({"0", "inf"}));
  CHECK(j["int_C_S"].get<double>() == doctest::Approx(std::log(2.0) / 2).epsilon(1e-12));
  CHECK(j.contains("config_hash"));
  CHECK(j["version"] == kVersion);

  CHECK(run("validate --config " + kConfigs + "/bad_probs.json").code == 3);
  CHECK(run("validate --config " + kConfigs + "/degree_one.json").code == 3);
  CHECK(run("validate --config /nonexistent/config.json").code == 2);
  CHECK(run("validate").code == 2);
}

TEST_CASE("stoch-height values") {
  auto value = [](const std::string& alpha) {
    Run r = run("stoch-height " + example() + " " + alpha);
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["seed"] == 20240601u);
    return j["value"].get<double>();
  };
  const double ln2 = std::log(2.0);
  CHECK(std::fabs(value("1") - ln2 / 2) <= 1e-4);
  CHECK(value("0") == 0.0);
  CHECK(std::fabs(value("2") - 1.5 * ln2) <= 1e-4);
  CHECK(run("stoch-height " + example() + " 1/0").code == 2);
}

TEST_CASE("equidist statistics, exceptional start and byte-identical reruns") {
  const fs::path dir = fs::temp_directory_path();
  const std::string csv1 = (dir / "stochdyn_eq1.csv").string(), csv2 = (dir / "stochdyn_eq2.csv").string();
  Run a = run("equidist " + example() + " 1 --workers 1 --out " + csv1);
  Run b = run("equidist " + example() + " 1 --workers 3 --out " + csv2);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  auto ja = nlohmann::json::parse(a.out), jb = nlohmann::json::parse(b.out);
  CHECK(ja["ks_radial"].get<double>() <= 0.02);
  CHECK(ja["ks_angular"].get<double>() <= 0.02);
  ja.erase("csv");
  jb.erase("csv");
  CHECK(ja.dump() == jb.dump());
  CHECK(slurp(csv1) == slurp(csv2));
  CHECK(slurp(csv1).rfind("r,empirical_cdf,reference_cdf\n", 0) == 0);
  fs::remove(csv1);
  fs::remove(csv2);

  Run p = run("equidist " + example() + " 1 --place 2");
  REQUIRE(p.code == 0);
  CHECK(nlohmann::json::parse(p.out)["ks"].get<double>() <= 0.02);

  CHECK(run("equidist " + example() + " 0").code == 4);
  CHECK(run("equidist " + example() + " inf").code == 4);
  CHECK(run("equidist " + example() + " 1 --place x").code == 2);
}

TEST_CASE("green-eval, radii, height and orbit-sample") {
  Run g = run("green-eval " + example() + " 0");
  REQUIRE(g.code == 0);
  CHECK(nlohmann::json::parse(g.out)["value"].get<double>() == doctest::Approx(-std::log(2.0) / 2).epsilon(1e-3));

  Run r = run("radii " + example());
  REQUIRE(r.code == 0);
  auto jr = nlohmann::json::parse(r.out);
  CHECK(jr["r_in"].get<double>() == doctest::Approx(std::pow(2.0, -1.0 / 6)).epsilon(0.01));
  CHECK(jr["r_out"].get<double>() == doctest::Approx(std::pow(2.0, 1.0 / 3)).epsilon(0.01));

  Run h = run("height 3/4");
  REQUIRE(h.code == 0);
  CHECK(nlohmann::json::parse(h.out)["weil_height"].get<double>() == doctest::Approx(std::log(4.0)));

  const std::string csv = (fs::temp_directory_path() / "stochdyn_orbit.csv").string();
  Run o = run("orbit-sample " + example() + " 1 --samples 10 --depth 5 --out " + csv);
  REQUIRE(o.code == 0);
  std::ifstream in(csv);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 11);
  fs::remove(csv);
}

TEST_CASE("suite rejects bad configurations before running") {
  CHECK(run("suite --config " + kConfigs + "/bad_probs.json").code == 3);
  CHECK(run("suite --config /nonexistent/config.json").code == 2);
}
