#pragma once

#include "wassdro/model.hpp"

#include <string>

namespace wassdro {

/// Parses a problem instance from its JSON document (see
/// docs/instance.schema.json). Rejects non-finite numbers and instances
/// whose validation report is nonempty.
TwoStageProblem load_instance_json(const std::string& text);
TwoStageProblem load_instance_file(const std::string& path);

std::string save_instance_json(const TwoStageProblem& p);

}  // namespace wassdro
