#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ionsim/config.hpp"
#include "ionsim/runner.hpp"

namespace {

int run(const std::string& subcommand, const std::string& config_path,
        const std::string& out_dir) {
  const ionsim::RunConfig cfg = ionsim::load_config_file(config_path);
  if (cfg.experiment != subcommand)
    throw ionsim::config_error("config requests experiment '" + cfg.experiment +
                               "' but subcommand is '" + subcommand + "'");
  const std::string json_path = ionsim::run_experiment(cfg, out_dir, std::cerr);
  std::cout << json_path << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimode spin-spin dynamics simulator for linear ion crystals"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  for (const char* name :
       {"modes", "gate", "scan-time", "scan-detuning", "extract-j", "oracle-check"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (default: cwd)");
  }

  try {
    app.parse(argc, argv);
    return run(app.get_subcommands().front()->get_name(), config_path, out_dir);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
}
