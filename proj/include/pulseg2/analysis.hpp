// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "pulseg2/correlate.hpp"
#include "pulseg2/runconfig.hpp"

namespace pulseg2 {

/// One reported estimator result. Undefined estimates keep their reason and
/// serialize as value "NA".
struct EstimateRow {
    std::string estimator;
    bool defined = false;
    std::string reason;
    CorrelationEstimate estimate;
    std::size_t lag = 0;
    double intensity_ratio = 0.0;
    std::uint64_t window_count = 0;
    std::uint64_t on_count = 0;
};

/// Contiguous runs of on-windows: the pulses as seen by the mask.
std::vector<std::pair<std::size_t, std::size_t>> on_window_runs(const BitSeries& mask);

/// Rebuild detector-pair outcomes from a 2K-channel click series (the
/// inverse of exporting a spatial run as time tags).
SpatialOutcomes outcomes_from_series(const ClickSeries& series, std::size_t pairs);

/// Run the configured estimators against a click series. Recognized tokens:
/// g2_temporal, g2_on, gN_temporal / gN_on for N in [2,9], pulse_to_pulse.
/// A g2_temporal row is followed by the g2_temporal * R_I product row.
std::vector<EstimateRow> run_estimators(const RunConfig& config, const ClickSeries& series);

EstimateRow spatial_row(const RunConfig& config, const SpatialOutcomes& outcomes);

std::string rows_to_csv(const std::vector<EstimateRow>& rows);
std::string rows_to_json(const std::vector<EstimateRow>& rows);

}  // namespace pulseg2
