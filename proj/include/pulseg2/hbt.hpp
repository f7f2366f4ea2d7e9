// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pulseg2/bitseries.hpp"
#include "pulseg2/detector.hpp"
#include "pulseg2/envelope.hpp"
#include "pulseg2/statistics.hpp"

namespace pulseg2 {

enum class MeasurementMode { temporal, spatial_ensemble, pulse_to_pulse };

/// Full description of one simulated HBT run. photons_per_pulse must equal
/// the source mean: the source supplies the per-pulse photon number
/// distribution, the train only shapes where those photons land.
struct ExperimentConfig {
    PhotonSource source = PhotonSource::coherent(0.0);
    PulseTrain train;
    WindowGrid grid;
    std::vector<DetectorSpec> detectors;
    SplitterSpec splitter;
    MeasurementMode mode = MeasurementMode::temporal;
    std::size_t ensemble_pairs = 1;  // K, spatial_ensemble mode
    std::size_t max_lag = 1;         // pulse_to_pulse mode
    std::uint64_t seed = 0;
};

void validate(const ExperimentConfig& config);

/// Per-detector binary click sequences over the window grid, together with
/// the on/off mask they were produced under.
struct ClickSeries {
    std::vector<BitSeries> clicks;
    BitSeries mask;
    std::size_t on_count = 0;        // M
    double intensity_ratio = 0.0;    // R_I = M/N
    std::uint64_t fingerprint = 0;   // config hash, 0 when unknown
    std::uint64_t collision_count = 0;  // same-window same-channel tag collapses
    std::uint64_t discarded_count = 0;  // tags beyond the grid span (discard policy)

    std::size_t window_count() const { return mask.size(); }
    bool operator==(const ClickSeries& other) const = default;
};

/// Outcomes of the detector-pair-ensemble measurement: K (x, y) bits per
/// pulse, indexed pulse * K + k.
struct SpatialOutcomes {
    std::size_t pair_count = 0;   // K
    std::size_t pulse_count = 0;
    BitSeries x, y;
};

/// Temporally averaged HBT run. Photon counts are drawn per pulse, spread
/// over the pulse's windows multinomially (single temporal mode), split
/// across the splitter ports and detected per window. Deterministic for a
/// fixed seed regardless of thread count.
ClickSeries simulate(const ExperimentConfig& config, int threads = 1);

/// Detector-pair-ensemble run: photons of each pulse are split uniformly
/// over 2K ports feeding K identical detector pairs. Requires single-window
/// pulses.
SpatialOutcomes simulate_spatial(const ExperimentConfig& config, int threads = 1);

std::uint64_t config_fingerprint(const ExperimentConfig& config);
std::string canonical_config_text(const ExperimentConfig& config);

}  // namespace pulseg2
