#pragma once

#include <string>
#include <vector>

#include "ivbandit/config.hpp"

namespace ivb {

// Built-in experiment families: motivating, exp1-known, exp1-unknown, exp2.
std::vector<std::string> preset_names();
bool is_preset(const std::string& name);

// The instance behind a preset; `eps` selects the interpolation level for
// exp2 (ignored elsewhere). Instance ids are the preset name, suffixed with
// "-eps<value>" for exp2.
ProblemInstance preset_instance(const std::string& name, double eps = 1.0);

// Full experiment configuration (instances, algorithm roster, trial count,
// seed). The files under presets/ mirror these byte-for-byte semantics.
ExperimentConfig preset_config(const std::string& name);

}  // namespace ivb
