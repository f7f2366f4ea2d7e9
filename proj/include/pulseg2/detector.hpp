// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "pulseg2/rng.hpp"

namespace pulseg2 {

/// Atom-like single-click detector: at most one detection per reset window.
/// Dead time is exactly one window; windows are independent.
struct DetectorSpec {
    double efficiency = 1.0;   // per-photon detection probability
    double dark_prob = 0.0;    // per-window dark click probability
    std::string label;
};

/// Lossless multiport splitter; photons are routed independently.
struct SplitterSpec {
    std::vector<double> port_probs;
};

void validate(const DetectorSpec& spec);
void validate(const SplitterSpec& spec);

/// Route n photons independently to ports; counts sum to n.
std::vector<int> split_photons(int n, const SplitterSpec& splitter, RngStream& rng);

/// 1 iff any of the photons is detected (each with probability efficiency)
/// or a dark count fires; else 0.
int click(int photons_at_port, const DetectorSpec& spec, RngStream& rng);

/// Linearized weak-field response: efficiency * mean photons per window.
/// The exact click probability for coherent light is 1 - exp(-efficiency*mean),
/// so the linear prediction is accurate to (efficiency*mean)^2.
double weak_field_click_prob(double mean_photons, const DetectorSpec& spec);

}  // namespace pulseg2
