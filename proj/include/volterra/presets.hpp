// The two reference systems used to exercise the identification pipeline.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "volterra/model.hpp"

namespace volterra {

struct ExamplePreset {
    std::string name;
    AtomicModel model;
    std::size_t n_samples = 0;
    double noise_pct = 0.0;
};

/// "example1": four first-order and two second-order atoms, N = 100, noise
/// 11.2 % of mean |y|. "example2": same structure, N = 150, noise 8 %.
/// Throws std::invalid_argument for other names.
ExamplePreset load_preset(const std::string& name);

std::vector<std::string> preset_names();

}  // namespace volterra
