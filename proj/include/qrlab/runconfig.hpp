#pragma once

#include <string>

#include "qrlab/harness.hpp"

namespace qrlab::harness {

/// Parses the declarative key=value run-config file driving `qrlab grid`.
/// Unknown keys are rejected.  See README for the schema.
GridConfig parse_run_config(const std::string& path);

/// Same, from text (tests).
GridConfig parse_run_config_text(const std::string& text, const std::string& origin);

}  // namespace qrlab::harness
