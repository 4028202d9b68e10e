#pragma once

#include <string>

#include "pareto_filter/config.hpp"

namespace pareto_filter {

// Built-in experiment configurations:
//   example1 - two-state benchmark system; frontier over 25 error bounds.
//   vehicle  - planar kinematic vehicle; tracking RMSE versus noise-scale
//              sweep comparing the Kalman and robust estimators.
ExperimentConfig preset(const std::string& name);

/// The example1 benchmark system.
SystemModel example1_system();

}  // namespace pareto_filter
