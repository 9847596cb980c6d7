#include "ionsim/config.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace ionsim {

namespace {

std::string trim(const std::string& s) {
  std::size_t lo = s.find_first_not_of(" \t\r");
  if (lo == std::string::npos) return "";
  std::size_t hi = s.find_last_not_of(" \t\r");
  return s.substr(lo, hi - lo + 1);
}

[[noreturn]] void fail(int line, const std::string& message) {
  throw config_error("config line " + std::to_string(line) + ": " + message);
}

double parse_double(const std::string& value, int line) {
  try {
    std::size_t used = 0;
    const double parsed = std::stod(value, &used);
    if (used != value.size()) fail(line, "malformed number '" + value + "'");
    return parsed;
  } catch (const config_error&) {
    throw;
  } catch (...) {
    fail(line, "malformed number '" + value + "'");
  }
}

int parse_int(const std::string& value, int line) {
  try {
    std::size_t used = 0;
    const int parsed = std::stoi(value, &used);
    if (used != value.size()) fail(line, "malformed integer '" + value + "'");
    return parsed;
  } catch (const config_error&) {
    throw;
  } catch (...) {
    fail(line, "malformed integer '" + value + "'");
  }
}

const std::set<std::string> known_sections = {"trap", "drive", "motion", "experiment"};

const std::set<std::string> trap_keys = {"n_ions",       "omega_z_hz",  "omega_x_hz",
                                         "mass_u",       "wavelength_m", "geometry_factor"};
const std::set<std::string> drive_keys = {"mu_hz", "rule", "rabi_hz", "tau_s", "chi_target"};
const std::set<std::string> motion_keys = {"nbar"};
const std::set<std::string> experiment_keys = {
    "name",      "tau_min_s", "tau_max_s", "tau_points", "mu_min_hz", "mu_max_hz",
    "mu_points", "phi_points", "input_csv", "n_max",     "dt_s"};

const std::set<std::string> experiment_names = {"modes",         "gate",      "scan-time",
                                                "scan-detuning", "extract-j", "oracle-check"};

} // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream stream(text);
  std::string raw;
  int line_no = 0;
  std::string section;
  std::vector<int> section_lines;
  std::vector<std::pair<std::string, int>> entries;  // key line numbers per section order

  // First pass: structure.
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> parsed;
  std::vector<std::vector<int>> lines_per_section;
  while (std::getline(stream, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!known_sections.count(section)) fail(line_no, "unknown section [" + section + "]");
      for (const auto& existing : parsed)
        if (existing.first == section) fail(line_no, "duplicate section [" + section + "]");
      parsed.push_back({section, {}});
      lines_per_section.push_back({});
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected 'key = value'");
    if (section.empty()) fail(line_no, "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) fail(line_no, "expected 'key = value'");
    const std::set<std::string>* allowed =
        section == "trap"    ? &trap_keys
        : section == "drive" ? &drive_keys
        : section == "motion" ? &motion_keys
                              : &experiment_keys;
    if (!allowed->count(key)) fail(line_no, "unknown key '" + key + "' in [" + section + "]");
    for (const auto& [existing_key, existing_value] : parsed.back().second)
      if (existing_key == key) fail(line_no, "duplicate key '" + key + "'");
    parsed.back().second.push_back({key, value});
    lines_per_section.back().push_back(line_no);
  }
  cfg.sections = parsed;

  auto find_section = [&](const std::string& name) -> const RunConfig::Section* {
    for (const auto& [section_name, body] : parsed)
      if (section_name == name) return &body;
    return nullptr;
  };
  auto key_line = [&](const std::string& section_name, const std::string& key) {
    for (std::size_t s = 0; s < parsed.size(); ++s)
      if (parsed[s].first == section_name)
        for (std::size_t k = 0; k < parsed[s].second.size(); ++k)
          if (parsed[s].second[k].first == key) return lines_per_section[s][k];
    return 0;
  };

  const RunConfig::Section* trap = find_section("trap");
  if (!trap) throw config_error("missing required section [trap]");
  {
    double f_z = 0.0, f_x = 0.0;
    int n_ions = 0;
    double mass_u = 171.0, wavelength = 369.75e-9, geometry = 1.4142135623730951;
    bool have_z = false, have_x = false, have_n = false;
    for (const auto& [key, value] : *trap) {
      const int ln = key_line("trap", key);
      if (key == "n_ions") {
        n_ions = parse_int(value, ln);
        have_n = true;
      } else if (key == "omega_z_hz") {
        f_z = parse_double(value, ln);
        have_z = true;
      } else if (key == "omega_x_hz") {
        f_x = parse_double(value, ln);
        have_x = true;
      } else if (key == "mass_u") {
        mass_u = parse_double(value, ln);
      } else if (key == "wavelength_m") {
        wavelength = parse_double(value, ln);
      } else if (key == "geometry_factor") {
        geometry = parse_double(value, ln);
      }
    }
    if (!have_n) throw config_error("[trap] requires n_ions");
    if (!have_z || !have_x) throw config_error("[trap] requires omega_z_hz and omega_x_hz");
    if (f_z <= 0.0 || f_x <= 0.0) throw config_error("[trap] frequencies must be positive");
    cfg.trap = TrapConfig::from_hz(n_ions, f_z, f_x);
    cfg.trap.ion_mass = mass_u * constants::atomic_mass_unit;
    cfg.trap.raman_wavelength = wavelength;
    cfg.trap.wavevector_geometry = geometry;
  }

  if (const RunConfig::Section* drive = find_section("drive")) {
    for (const auto& [key, value] : *drive) {
      const int ln = key_line("drive", key);
      if (key == "mu_hz") {
        const double f = parse_double(value, ln);
        if (f <= 0.0) fail(ln, "mu_hz must be positive");
        cfg.mu = constants::two_pi * f;
      } else if (key == "rule") {
        std::istringstream rule_stream(value);
        std::string kind;
        rule_stream >> kind;
        GateSpec spec;
        spec.chi_target = cfg.chi_target;
        if (kind == "bisect") {
          int a = 0, b = 0;
          if (!(rule_stream >> a >> b) || a < 1 || b < 1)
            fail(ln, "expected 'bisect <mode_a> <mode_b>' with 1-based modes");
          spec.rule = GateSpec::DetuningRule::bisect;
          spec.mode_a = a - 1;
          spec.mode_b = b - 1;
        } else if (kind == "offset") {
          int ref = 0;
          double delta_hz = 0.0;
          if (!(rule_stream >> ref >> delta_hz) || ref < 1)
            fail(ln, "expected 'offset <mode> <delta_hz>'");
          spec.rule = GateSpec::DetuningRule::offset;
          spec.mode_a = ref - 1;
          spec.offset = constants::two_pi * delta_hz;
        } else {
          fail(ln, "unknown detuning rule '" + kind + "'");
        }
        std::string leftover;
        if (rule_stream >> leftover) fail(ln, "trailing tokens after detuning rule");
        cfg.rule = spec;
      } else if (key == "rabi_hz") {
        if (value == "calibrate")
          cfg.calibrate_rabi = true;
        else {
          const double f = parse_double(value, ln);
          if (f < 0.0) fail(ln, "rabi_hz must be non-negative");
          cfg.rabi = constants::two_pi * f;
        }
      } else if (key == "tau_s") {
        cfg.tau = parse_double(value, ln);
        if (cfg.tau < 0.0) fail(ln, "tau_s must be non-negative");
      } else if (key == "chi_target") {
        cfg.chi_target = parse_double(value, ln);
        if (cfg.rule) cfg.rule->chi_target = cfg.chi_target;
      }
    }
    if (cfg.mu && cfg.rule)
      throw config_error("[drive] must set either mu_hz or rule, not both");
  }

  if (const RunConfig::Section* motion = find_section("motion")) {
    for (const auto& [key, value] : *motion) {
      const int ln = key_line("motion", key);
      std::vector<double> entries_parsed;
      std::istringstream list(value);
      std::string item;
      while (std::getline(list, item, ',')) {
        const double n = parse_double(trim(item), ln);
        if (n < 0.0) fail(ln, "nbar must be non-negative");
        entries_parsed.push_back(n);
      }
      if (entries_parsed.empty()) fail(ln, "nbar list is empty");
      cfg.nbar = Eigen::Map<Eigen::VectorXd>(entries_parsed.data(), entries_parsed.size());
    }
  }
  if (cfg.nbar.size() == 0) cfg.nbar = Eigen::VectorXd::Zero(1);
  if (cfg.nbar.size() == 1) cfg.nbar = Eigen::VectorXd::Constant(cfg.trap.n_ions, cfg.nbar(0));
  if (static_cast<int>(cfg.nbar.size()) != cfg.trap.n_ions)
    throw config_error("[motion] nbar needs one entry per mode (or a single value)");

  const RunConfig::Section* experiment = find_section("experiment");
  if (!experiment) throw config_error("missing required section [experiment]");
  for (const auto& [key, value] : *experiment) {
    const int ln = key_line("experiment", key);
    if (key == "name") {
      if (!experiment_names.count(value)) fail(ln, "unknown experiment '" + value + "'");
      cfg.experiment = value;
    } else if (key == "tau_min_s") {
      cfg.tau_min = parse_double(value, ln);
    } else if (key == "tau_max_s") {
      cfg.tau_max = parse_double(value, ln);
    } else if (key == "tau_points") {
      cfg.tau_points = parse_int(value, ln);
    } else if (key == "mu_min_hz") {
      cfg.mu_min = constants::two_pi * parse_double(value, ln);
    } else if (key == "mu_max_hz") {
      cfg.mu_max = constants::two_pi * parse_double(value, ln);
    } else if (key == "mu_points") {
      cfg.mu_points = parse_int(value, ln);
    } else if (key == "phi_points") {
      cfg.phi_points = parse_int(value, ln);
      if (cfg.phi_points < 8) fail(ln, "phi_points must be at least 8");
    } else if (key == "input_csv") {
      cfg.input_csv = value;
    } else if (key == "n_max") {
      cfg.n_max = parse_int(value, ln);
      if (cfg.n_max < 1) fail(ln, "n_max must be >= 1");
    } else if (key == "dt_s") {
      cfg.oracle_dt = parse_double(value, ln);
      if (cfg.oracle_dt <= 0.0) fail(ln, "dt_s must be positive");
    }
  }
  if (cfg.experiment.empty()) throw config_error("[experiment] requires name");

  // Per-experiment requirements.
  const std::string& name = cfg.experiment;
  const bool needs_drive = name != "modes" && name != "extract-j" && name != "scan-detuning";
  if (needs_drive && !cfg.mu && !cfg.rule)
    throw config_error("experiment '" + name + "' needs [drive] mu_hz or rule");
  if (needs_drive && !cfg.calibrate_rabi && cfg.rabi == 0.0)
    throw config_error("experiment '" + name + "' needs [drive] rabi_hz (or 'calibrate')");
  if (cfg.calibrate_rabi && !cfg.rule)
    throw config_error("rabi_hz = calibrate requires a detuning rule");
  if (name == "scan-time" || name == "gate") {
    if (name == "scan-time" && (cfg.tau_points < 2 || cfg.tau_max <= cfg.tau_min))
      throw config_error("scan-time needs tau_min_s < tau_max_s and tau_points >= 2");
  }
  if (name == "scan-detuning") {
    if (cfg.rabi <= 0.0)
      throw config_error("scan-detuning needs an explicit [drive] rabi_hz");
    if (cfg.mu_points < 2 || cfg.mu_max <= cfg.mu_min)
      throw config_error("scan-detuning needs mu_min_hz < mu_max_hz and mu_points >= 2");
  }
  if (name == "extract-j" && cfg.input_csv.empty())
    throw config_error("extract-j needs [experiment] input_csv");
  if (name == "oracle-check" && cfg.tau <= 0.0 && !cfg.rule)
    throw config_error("oracle-check needs [drive] tau_s or a detuning rule");
  return cfg;
}

std::string RunConfig::serialize() const {
  std::string out;
  bool first = true;
  for (const auto& [name, body] : sections) {
    if (!first) out += "\n";
    first = false;
    out += "[" + name + "]\n";
    for (const auto& [key, value] : body) out += key + " = " + value + "\n";
  }
  return out;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

} // namespace ionsim
