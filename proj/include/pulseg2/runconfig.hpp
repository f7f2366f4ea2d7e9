// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "pulseg2/correlate.hpp"
#include "pulseg2/hbt.hpp"

namespace pulseg2 {

/// Parsed form of the flat key=value run configuration. Unknown keys are
/// rejected; '#' starts a comment.
struct RunConfig {
    ExperimentConfig experiment;
    int threads = 1;
    std::vector<std::string> estimators;  // g2_temporal, g2_on, g3_on, ..., pulse_to_pulse, spatial
    BootstrapSettings bootstrap;
    std::string out_timetags;
    std::string out_summary;
    std::uint64_t resolution_ps = 1;
    std::string sweep_axis;  // pulse_width | r_i | mean | efficiency; empty = no sweep
    std::vector<double> sweep_values;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Apply one sweep-axis value, rebuilding the dependent fields (source mean,
/// photons_per_pulse, period or detector efficiencies).
ExperimentConfig apply_sweep_value(const RunConfig& base, const std::string& axis, double value);

const char* to_string(Normalization norm);
std::string normalization_label(const CorrelationEstimate& est, std::size_t lag = 0);

}  // namespace pulseg2
