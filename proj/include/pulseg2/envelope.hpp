// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <unordered_map>
#include <vector>

#include "pulseg2/bitseries.hpp"

namespace pulseg2 {

enum class PulseShape { rect, gaussian, sech2 };

/// Deterministic intensity envelope of the source, normalized so one pulse
/// delivers photons_per_pulse mean photons. pulse_width is the intensity
/// full width at half maximum for gaussian/sech2 and the full width for rect.
struct PulseTrain {
    PulseShape shape = PulseShape::rect;
    double pulse_width = 0.0;
    double period = 0.0;
    double photons_per_pulse = 0.0;
    double offset = 0.0;  // pulse-center position within the first period
};

/// Detector reset windows: half-open intervals [i*tau, (i+1)*tau).
struct WindowGrid {
    double window_duration = 0.0;
    std::size_t window_count = 0;
};

void validate(const PulseTrain& train);
void validate(const WindowGrid& grid);

/// Mean photons per window contributed by one pulse. Windows whose raw weight
/// falls below 1e-12 * photons_per_pulse are dropped and their mass folded
/// back into the remaining windows, so the pulse total stays exact.
struct PulseProfile {
    std::size_t first_window = 0;
    std::vector<double> weights;

    double total() const {
        double t = 0.0;
        for (double w : weights) t += w;
        return t;
    }
};

/// Geometry of a pulse train on a window grid. Only whole pulses count: a
/// pulse whose (truncated) support would be clipped by the grid edge is
/// excluded entirely, which keeps per-pulse photon statistics unbiased and
/// the weight total at pulse_count * photons_per_pulse.
///
/// Profiles repeat whenever the pulse alignment relative to the window
/// boundaries repeats; the common integer period/window ratio needs a single
/// integration pass no matter how many pulses the grid holds.
class PulseTrainLayout {
  public:
    PulseTrainLayout(const PulseTrain& train, const WindowGrid& grid);

    std::size_t pulse_count() const { return pulse_count_; }
    std::size_t window_count() const { return window_count_; }
    double photons_per_pulse() const { return train_.photons_per_pulse; }

    PulseProfile profile(std::size_t pulse) const;

    /// On/off mask over the whole grid plus the on-window count M.
    BitSeries build_mask(std::size_t* on_count = nullptr) const;

    /// True when every pulse occupies exactly one window.
    bool single_window_pulses() const;

    /// True when no window can receive photons from two pulses.
    bool supports_disjoint() const;

  private:
    PulseProfile integrate_pulse(double center, std::size_t base_window) const;

    PulseTrain train_;
    double window_duration_ = 0.0;
    std::size_t window_count_ = 0;
    double support_half_width_ = 0.0;
    long long first_pulse_index_ = 0;  // index into the unclipped train
    std::size_t pulse_count_ = 0;
    bool integer_aligned_ = false;
    long long period_windows_ = 0;          // integer-aligned case
    PulseProfile base_profile_;             // integer-aligned case
    std::size_t base_first_window_ = 0;     // integer-aligned case
    mutable std::unordered_map<long long, PulseProfile> cache_;  // fractional case
};

/// Dense per-window weights (the discretized envelope). Suitable for grids
/// up to ~10^7 windows; larger simulations stream profiles instead.
struct WindowWeights {
    std::vector<double> weights;
    BitSeries mask;
    std::size_t on_count = 0;  // M
    std::size_t pulse_count = 0;
    double photons_per_pulse = 0.0;
};

WindowWeights window_weights(const PulseTrain& train, const WindowGrid& grid);

/// R_I = M/N, the fraction of windows during which the field has amplitude.
double intensity_ratio(const WindowWeights& weights);
double intensity_ratio(std::size_t on_count, std::size_t window_count);

}  // namespace pulseg2
