#pragma once

#include <ostream>
#include <string>

#include "ionsim/config.hpp"

namespace ionsim {

// Builds the crystal, dispatches the configured experiment, and writes the
// CSV/JSON artifacts into out_dir. Summary scalars are mirrored to log.
// Throws on any failure; returns the path of the JSON summary.
std::string run_experiment(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

} // namespace ionsim
