#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ionsim/config.hpp"
#include "ionsim/csv.hpp"
#include "ionsim/runner.hpp"

using namespace ionsim;
namespace fs = std::filesystem;

namespace {

const std::string two_ion_text =
    "[trap]\n"
    "n_ions = 2\n"
    "omega_z_hz = 0.616e6\n"
    "omega_x_hz = 3.5838e6\n"
    "\n"
    "[drive]\n"
    "mu_hz = 3.557e6\n"
    "rabi_hz = 190e3\n"
    "\n"
    "[experiment]\n"
    "name = scan-time\n"
    "tau_min_s = 0\n"
    "tau_max_s = 80e-6\n"
    "tau_points = 41\n";

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string message_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const config_error& e) {
    return e.what();
  }
  return "";
}

int run_cli(const std::string& args) {
  const std::string command = std::string(IONSIM_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("paper two-ion config parses and round-trips byte-identically") {
  const RunConfig cfg = parse_config(two_ion_text);
  CHECK(cfg.trap.n_ions == 2);
  CHECK(cfg.trap.omega_z == doctest::Approx(constants::two_pi * 0.616e6));
  CHECK(cfg.mu.value() == doctest::Approx(constants::two_pi * 3.557e6));
  CHECK(cfg.rabi == doctest::Approx(constants::two_pi * 190e3));
  CHECK(cfg.experiment == "scan-time");
  CHECK(cfg.tau_points == 41);
  CHECK(cfg.serialize() == two_ion_text);
}

TEST_CASE("shipped configs are canonical and parse cleanly") {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(IONSIM_CONFIG_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    ++seen;
    const std::string text = slurp(entry.path().string());
    const RunConfig cfg = parse_config(text);
    CHECK(cfg.serialize() == text);
  }
  CHECK(seen >= 5);
}

TEST_CASE("parse errors carry line numbers and context") {
  CHECK(message_of("[trap]\nn_ions = 2\nbogus_key = 1\n").find("line 3") != std::string::npos);
  CHECK(message_of("[orbit]\n").find("unknown section") != std::string::npos);
  CHECK(message_of("[trap]\nn_ions = 2\nn_ions = 3\n").find("duplicate key") != std::string::npos);
  CHECK(message_of("[trap]\nn_ions = two\n").find("line 2") != std::string::npos);
  CHECK(message_of("n_ions = 2\n").find("outside") != std::string::npos);
  CHECK(message_of("[trap\n").find("line 1") != std::string::npos);

  // structural requirements
  CHECK(message_of("[drive]\nmu_hz = 1e6\n").find("[trap]") != std::string::npos);
  const std::string both =
      "[trap]\nn_ions = 2\nomega_z_hz = 1e6\nomega_x_hz = 4e6\n"
      "[drive]\nmu_hz = 1e6\nrule = bisect 1 2\nrabi_hz = 1e3\ntau_s = 1e-6\n"
      "[experiment]\nname = oracle-check\n";
  CHECK(message_of(both).find("not both") != std::string::npos);
  const std::string bad_name =
      "[trap]\nn_ions = 2\nomega_z_hz = 1e6\nomega_x_hz = 4e6\n[experiment]\nname = dance\n";
  CHECK(message_of(bad_name).find("unknown experiment") != std::string::npos);
}

TEST_CASE("rule parsing and nbar broadcast") {
  const std::string text =
      "[trap]\nn_ions = 3\nomega_z_hz = 1.484e6\nomega_x_hz = 3.952e6\n"
      "[drive]\nrule = offset 1 9.4e3\nrabi_hz = calibrate\n"
      "[motion]\nnbar = 0.5\n"
      "[experiment]\nname = gate\n";
  const RunConfig cfg = parse_config(text);
  REQUIRE(cfg.rule.has_value());
  CHECK(cfg.rule->rule == GateSpec::DetuningRule::offset);
  CHECK(cfg.rule->mode_a == 0);
  CHECK(cfg.rule->offset == doctest::Approx(constants::two_pi * 9.4e3));
  CHECK(cfg.calibrate_rabi);
  REQUIRE(cfg.nbar.size() == 3);
  for (int m = 0; m < 3; ++m) CHECK(cfg.nbar(m) == 0.5);
}

TEST_CASE("modes experiment reproduces crystal frequencies through the runner") {
  const std::string text =
      "[trap]\nn_ions = 3\nomega_z_hz = 1.484e6\nomega_x_hz = 3.952e6\n"
      "[experiment]\nname = modes\n";
  const RunConfig cfg = parse_config(text);
  const fs::path dir = fs::temp_directory_path() / "ionsim_modes_test";
  fs::remove_all(dir);
  std::ostringstream log;
  run_experiment(cfg, dir.string(), log);

  const std::string csv = slurp((dir / "modes.csv").string());
  CHECK(csv.find("# column: frequency (Hz)") != std::string::npos);
  CHECK(csv.find("3952000") != std::string::npos);
  CHECK(csv.find("3662792.377") != std::string::npos);
  CHECK(csv.find("3214481.233") != std::string::npos);
  CHECK(log.str().find("cm_frequency_hz") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("csv serialization: 17 significant digits, LF, round trip") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");

  ScanResult scan;
  scan.x_name = "tau";
  scan.x_unit = "s";
  scan.grid = Eigen::Vector3d(0.0, 1e-6, 2e-6);
  scan.column_names = {"P_0"};
  scan.column_units = {"1"};
  scan.values = Eigen::Vector3d(1.0, 1.0 / 3.0, 0.25);

  const std::string rendered = render_csv(scan);
  CHECK(rendered.find('\r') == std::string::npos);
  CHECK(rendered.find("0.33333333333333331") != std::string::npos);
  CHECK(render_csv(scan) == rendered);  // deterministic

  const fs::path path = fs::temp_directory_path() / "ionsim_csv_test.csv";
  emit_csv(scan, path.string());
  const auto [xs, ys] = read_series_csv(path.string());
  REQUIRE(xs.size() == 3);
  CHECK(xs(1) == 1e-6);
  CHECK(ys(1) == 1.0 / 3.0);
  fs::remove(path.string());
}

TEST_CASE("cli exit codes") {
  const std::string config_dir = IONSIM_CONFIG_DIR;
  const fs::path out = fs::temp_directory_path() / "ionsim_cli_test";
  fs::remove_all(out);

  CHECK(run_cli("modes --config " + config_dir + "/three_ion_modes.ini --out " + out.string()) == 0);
  CHECK(fs::exists(out / "modes.json"));
  CHECK(fs::exists(out / "modes.csv"));

  // subcommand and config experiment disagree
  CHECK(run_cli("gate --config " + config_dir + "/three_ion_modes.ini --out " + out.string()) != 0);
  // missing config file
  CHECK(run_cli("modes --config /nonexistent.ini") != 0);
  // unknown subcommand
  CHECK(run_cli("render --config " + config_dir + "/three_ion_modes.ini") != 0);

  // failure emits a machine-readable error object on stderr
  const fs::path errfile = fs::temp_directory_path() / "ionsim_cli_err.json";
  const std::string command = std::string(IONSIM_BIN) + " gate --config " + config_dir +
                              "/three_ion_modes.ini 2> " + errfile.string() + " > /dev/null";
  CHECK(WEXITSTATUS(std::system(command.c_str())) != 0);
  const std::string err = slurp(errfile.string());
  CHECK(err.find("{\"error\":") != std::string::npos);
  fs::remove(errfile.string());
  fs::remove_all(out);
}
