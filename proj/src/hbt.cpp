// SPDX-License-Identifier: Apache-2.0
#include "pulseg2/hbt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <thread>

#include "pulseg2/errors.hpp"

namespace pulseg2 {

namespace {

constexpr double kMeanMatchTol = 1e-9;

bool dark_free(const std::vector<DetectorSpec>& detectors) {
    for (const auto& d : detectors)
        if (d.dark_prob > 0.0) return false;
    return true;
}

/// One click event: window index plus a per-detector bit mask.
struct ClickRecord {
    std::uint64_t window;
    std::uint32_t bits;
};

/// Multinomial placement of n photons over the pulse's window weights.
void place_photons(int n, const PulseProfile& profile, double total, RngStream& rng,
                   std::vector<int>& counts) {
    counts.assign(profile.weights.size(), 0);
    if (profile.weights.size() == 1) {
        counts[0] = n;
        return;
    }
    for (int k = 0; k < n; ++k) {
        const double u = rng.next_double() * total;
        double cum = 0.0;
        std::size_t idx = profile.weights.size() - 1;
        for (std::size_t j = 0; j + 1 < profile.weights.size(); ++j) {
            cum += profile.weights[j];
            if (u < cum) {
                idx = j;
                break;
            }
        }
        ++counts[idx];
    }
}

/// Detect photons arriving in one window. Draws come from the window's own
/// stream so results do not depend on which pulse or thread produced them.
std::uint32_t detect_window(std::uint64_t window, int photons, const ExperimentConfig& config) {
    RngStream rng = RngStream::derive(config.seed, RngStream::Domain::window, window);
    std::vector<int> ports = split_photons(photons, config.splitter, rng);
    std::uint32_t bits = 0;
    for (std::size_t d = 0; d < config.detectors.size(); ++d) {
        if (click(ports[d], config.detectors[d], rng))
            bits |= (1u << d);
    }
    return bits;
}

void run_chunked(std::size_t count, int threads,
                 const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
    const std::size_t requested = threads < 1 ? 1 : static_cast<std::size_t>(threads);
    const std::size_t n_threads = std::max<std::size_t>(1, std::min(requested, count));
    if (n_threads == 1) {
        body(0, 0, count);
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) {
        const std::size_t lo = count * t / n_threads;
        const std::size_t hi = count * (t + 1) / n_threads;
        pool.emplace_back([&body, t, lo, hi] { body(t, lo, hi); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

void validate(const ExperimentConfig& config) {
    validate(config.train);
    validate(config.grid);
    for (const auto& d : config.detectors) validate(d);
    validate(config.splitter);

    if (config.mode == MeasurementMode::spatial_ensemble) {
        if (config.ensemble_pairs < 1)
            throw config_error("spatial ensemble needs at least one detector pair");
        if (config.detectors.size() != 2)
            throw config_error("spatial ensemble mode takes the two per-pair detector specs");
    } else {
        if (config.detectors.empty())
            throw config_error("at least one detector is required");
        if (config.detectors.size() != config.splitter.port_probs.size())
            throw config_error("detector count must equal splitter port count");
        if (config.detectors.size() > 32)
            throw config_error("at most 32 detectors are supported");
    }

    const double mean = config.source.mean();
    if (std::abs(config.train.photons_per_pulse - mean) > kMeanMatchTol * std::max(1.0, mean))
        throw config_error("train.photons_per_pulse must equal the source mean photon number");
}

ClickSeries simulate(const ExperimentConfig& config, int threads) {
    validate(config);
    PulseTrainLayout layout(config.train, config.grid);
    const std::size_t n_windows = config.grid.window_count;
    const std::size_t n_pulses = layout.pulse_count();
    const std::size_t n_det = config.detectors.size();

    ClickSeries series;
    series.clicks.assign(n_det, BitSeries(n_windows));
    series.mask = layout.build_mask(&series.on_count);
    series.intensity_ratio = intensity_ratio(series.on_count, n_windows);
    series.fingerprint = config_fingerprint(config);

    // Pulses whose supports can reach into a neighbouring period need their
    // photon counts accumulated before detection; so does a dark-count run,
    // where every window draws. Otherwise only windows that received photons
    // are ever touched.
    const bool darkless = dark_free(config.detectors);
    if (darkless && (n_pulses == 0 || config.train.photons_per_pulse == 0.0))
        return series;

    if (darkless && layout.supports_disjoint()) {
        std::vector<std::vector<ClickRecord>> per_thread(
            std::max<std::size_t>(1, static_cast<std::size_t>(std::max(threads, 1))));
        run_chunked(n_pulses, threads, [&](std::size_t t, std::size_t lo, std::size_t hi) {
            auto& out = per_thread[t];
            std::vector<int> counts;
            for (std::size_t p = lo; p < hi; ++p) {
                RngStream pulse_rng = RngStream::derive(config.seed, RngStream::Domain::pulse, p);
                const int n = config.source.sample(pulse_rng);
                if (n == 0) continue;
                const PulseProfile profile = layout.profile(p);
                place_photons(n, profile, profile.total(), pulse_rng, counts);
                for (std::size_t i = 0; i < counts.size(); ++i) {
                    if (counts[i] == 0) continue;
                    const std::uint64_t w = profile.first_window + i;
                    const std::uint32_t bits = detect_window(w, counts[i], config);
                    if (bits) out.push_back({w, bits});
                }
            }
        });
        for (const auto& chunk : per_thread)
            for (const ClickRecord& rec : chunk)
                for (std::size_t d = 0; d < n_det; ++d)
                    if (rec.bits & (1u << d)) series.clicks[d].set(rec.window);
        return series;
    }

    // Dense path: accumulate photon counts per window, then detect each
    // window once. Threads own disjoint 64-window-aligned ranges.
    std::vector<std::uint32_t> photon_counts(n_windows, 0);
    std::vector<int> counts;
    for (std::size_t p = 0; p < n_pulses; ++p) {
        RngStream pulse_rng = RngStream::derive(config.seed, RngStream::Domain::pulse, p);
        const int n = config.source.sample(pulse_rng);
        if (n == 0) continue;
        const PulseProfile profile = layout.profile(p);
        place_photons(n, profile, profile.total(), pulse_rng, counts);
        for (std::size_t i = 0; i < counts.size(); ++i)
            photon_counts[profile.first_window + i] += static_cast<std::uint32_t>(counts[i]);
    }

    const std::size_t word_count = (n_windows + 63) / 64;
    run_chunked(word_count, threads, [&](std::size_t, std::size_t lo_word, std::size_t hi_word) {
        const std::size_t lo = lo_word * 64;
        const std::size_t hi = std::min(n_windows, hi_word * 64);
        for (std::size_t w = lo; w < hi; ++w) {
            if (darkless && photon_counts[w] == 0) continue;
            const std::uint32_t bits = detect_window(w, static_cast<int>(photon_counts[w]), config);
            for (std::size_t d = 0; d < n_det; ++d)
                if (bits & (1u << d)) series.clicks[d].set(w);
        }
    });
    return series;
}

SpatialOutcomes simulate_spatial(const ExperimentConfig& config, int threads) {
    if (config.mode != MeasurementMode::spatial_ensemble)
        throw config_error("simulate_spatial requires spatial ensemble mode");
    validate(config);
    PulseTrainLayout layout(config.train, config.grid);
    if (!layout.single_window_pulses())
        throw config_error("spatial ensemble mode requires single-window pulses");

    const std::size_t pairs = config.ensemble_pairs;
    const std::size_t ports = 2 * pairs;
    const std::size_t n_pulses = layout.pulse_count();
    const DetectorSpec& det_x = config.detectors[0];
    const DetectorSpec& det_y = config.detectors[1];

    SpatialOutcomes out;
    out.pair_count = pairs;
    out.pulse_count = n_pulses;
    out.x = BitSeries(n_pulses * pairs);
    out.y = BitSeries(n_pulses * pairs);

    struct PairClick {
        std::uint64_t index;
        std::uint8_t xy;
    };
    std::vector<std::vector<PairClick>> per_thread(
        std::max<std::size_t>(1, static_cast<std::size_t>(std::max(threads, 1))));

    run_chunked(n_pulses, threads, [&](std::size_t t, std::size_t lo, std::size_t hi) {
        auto& recs = per_thread[t];
        std::vector<int> port_counts(ports);
        for (std::size_t p = lo; p < hi; ++p) {
            RngStream rng = RngStream::derive(config.seed, RngStream::Domain::pulse, p);
            const int n = config.source.sample(rng);
            std::fill(port_counts.begin(), port_counts.end(), 0);
            for (int k = 0; k < n; ++k)
                ++port_counts[rng.next_below(ports)];
            for (std::size_t k = 0; k < pairs; ++k) {
                const int x = click(port_counts[2 * k], det_x, rng);
                const int y = click(port_counts[2 * k + 1], det_y, rng);
                if (x || y)
                    recs.push_back({p * pairs + k,
                                    static_cast<std::uint8_t>((x ? 1 : 0) | (y ? 2 : 0))});
            }
        }
    });
    for (const auto& chunk : per_thread) {
        for (const PairClick& rec : chunk) {
            if (rec.xy & 1) out.x.set(rec.index);
            if (rec.xy & 2) out.y.set(rec.index);
        }
    }
    return out;
}

std::string canonical_config_text(const ExperimentConfig& config) {
    std::ostringstream os;
    os.precision(17);
    os << "source=" << static_cast<int>(config.source.kind()) << ':' << config.source.mean();
    if (config.source.kind() == SourceKind::fock) os << ":m" << config.source.fock_m();
    if (config.source.kind() == SourceKind::empirical) {
        for (const auto& [count, prob] : config.source.empirical_pmf())
            os << ':' << count << ',' << prob;
    }
    os << ";train=" << static_cast<int>(config.train.shape) << ',' << config.train.pulse_width
       << ',' << config.train.period << ',' << config.train.photons_per_pulse << ','
       << config.train.offset;
    os << ";grid=" << config.grid.window_duration << ',' << config.grid.window_count;
    os << ";det=";
    for (const auto& d : config.detectors) os << d.efficiency << ',' << d.dark_prob << '|';
    os << ";split=";
    for (double p : config.splitter.port_probs) os << p << '|';
    os << ";mode=" << static_cast<int>(config.mode) << ',' << config.ensemble_pairs << ','
       << config.max_lag;
    os << ";seed=" << config.seed;
    return os.str();
}

std::uint64_t config_fingerprint(const ExperimentConfig& config) {
    // FNV-1a 64
    const std::string text = canonical_config_text(config);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace pulseg2
