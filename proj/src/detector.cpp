// SPDX-License-Identifier: Apache-2.0
#include "pulseg2/detector.hpp"

#include <cmath>

#include "pulseg2/errors.hpp"

namespace pulseg2 {

void validate(const DetectorSpec& spec) {
    if (!(spec.efficiency >= 0.0) || !(spec.efficiency <= 1.0))
        throw config_error("detector efficiency must lie in [0, 1]");
    if (!(spec.dark_prob >= 0.0) || !(spec.dark_prob < 1.0))
        throw config_error("detector dark_prob must lie in [0, 1)");
}

void validate(const SplitterSpec& spec) {
    if (spec.port_probs.empty())
        throw config_error("splitter needs at least one port");
    double total = 0.0;
    for (double p : spec.port_probs) {
        if (!(p >= 0.0)) throw config_error("splitter port probabilities must be >= 0");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw config_error("splitter port probabilities must sum to 1 within 1e-12");
}

std::vector<int> split_photons(int n, const SplitterSpec& splitter, RngStream& rng) {
    std::vector<int> counts(splitter.port_probs.size(), 0);
    const std::size_t last = counts.size() - 1;
    for (int k = 0; k < n; ++k) {
        const double u = rng.next_double();
        double cum = 0.0;
        std::size_t port = last;
        for (std::size_t j = 0; j < last; ++j) {
            cum += splitter.port_probs[j];
            if (u < cum) {
                port = j;
                break;
            }
        }
        ++counts[port];
    }
    return counts;
}

int click(int photons_at_port, const DetectorSpec& spec, RngStream& rng) {
    int fired = 0;
    if (photons_at_port > 0 && spec.efficiency > 0.0) {
        // P(at least one of n photons detected) = 1 - (1-eta)^n
        const double p_click = 1.0 - std::pow(1.0 - spec.efficiency, photons_at_port);
        fired = rng.next_double() < p_click ? 1 : 0;
    }
    if (!fired && spec.dark_prob > 0.0)
        fired = rng.next_double() < spec.dark_prob ? 1 : 0;
    return fired;
}

double weak_field_click_prob(double mean_photons, const DetectorSpec& spec) {
    return spec.efficiency * mean_photons;
}

}  // namespace pulseg2
