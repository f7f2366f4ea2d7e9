// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "pulseg2/correlate.hpp"
#include "pulseg2/errors.hpp"
#include "pulseg2/hbt.hpp"

using namespace pulseg2;

namespace {

constexpr double kTau = 1e-9;

ExperimentConfig base_config(PhotonSource source, double period_windows, std::size_t windows,
                             std::uint64_t seed, double efficiency = 1.0) {
    ExperimentConfig cfg;
    cfg.source = source;
    cfg.train = {PulseShape::rect, kTau, period_windows * kTau, source.mean(), 0.5 * kTau};
    cfg.grid = {kTau, windows};
    cfg.detectors = {{efficiency, 0.0, "a"}, {efficiency, 0.0, "b"}};
    cfg.splitter = {{0.5, 0.5}};
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("fock(1): exactly one click per on-window, never a coincidence") {
    const ExperimentConfig cfg = base_config(PhotonSource::fock(1), 5.0, 50000, 11);
    const ClickSeries s = simulate(cfg);
    REQUIRE(s.on_count == 10000);
    CHECK(s.clicks[0].count_and(s.clicks[1]) == 0);
    CHECK(s.clicks[0].count() + s.clicks[1].count() == s.on_count);
    for (std::size_t w = 0; w < 200; ++w) {
        const int total = (s.clicks[0].get(w) ? 1 : 0) + (s.clicks[1].get(w) ? 1 : 0);
        CHECK(total == (s.mask.get(w) ? 1 : 0));
    }
}

TEST_CASE("zero photons per pulse yields an all-zero series") {
    const ExperimentConfig cfg = base_config(PhotonSource::coherent(0.0), 4.0, 1000, 5);
    const ClickSeries s = simulate(cfg);
    CHECK(s.clicks[0].count() == 0);
    CHECK(s.clicks[1].count() == 0);
    CHECK(s.on_count == 0);  // zero amplitude everywhere: no on-windows
}

TEST_CASE("determinism: identical seeds and any thread count") {
    const ExperimentConfig cfg = base_config(PhotonSource::thermal(0.8), 4.0, 40000, 99);
    const ClickSeries a = simulate(cfg, 1);
    const ClickSeries b = simulate(cfg, 1);
    const ClickSeries c = simulate(cfg, 4);
    const ClickSeries d = simulate(cfg, 7);
    CHECK(a == b);
    CHECK(a == c);
    CHECK(a == d);

    ExperimentConfig other = cfg;
    other.seed = 100;
    CHECK_FALSE(simulate(other) == a);
}

TEST_CASE("multi-window pulses simulate deterministically across threads") {
    ExperimentConfig cfg = base_config(PhotonSource::thermal(0.6), 6.0, 6000, 21);
    cfg.train.pulse_width = 2.0 * kTau;
    cfg.train.offset = 1.0 * kTau;
    const ClickSeries sparse = simulate(cfg, 1);
    CHECK(sparse.on_count == 2000);
    CHECK(simulate(cfg, 3) == sparse);
}

TEST_CASE("overlapping pulse tails take the accumulating path and stay sane") {
    // gaussian support (10 FWHM) far exceeds the period: neighbouring pulses
    // share windows, so photon counts must accumulate before detection
    ExperimentConfig cfg = base_config(PhotonSource::coherent(0.2), 4.0, 4000, 17);
    cfg.train.shape = PulseShape::gaussian;
    cfg.train.pulse_width = 2.0 * kTau;
    cfg.train.offset = 2.0 * kTau;
    const ClickSeries a = simulate(cfg, 1);
    const ClickSeries b = simulate(cfg, 4);
    CHECK(a == b);
    // dark-free: clicks only where the mask allows
    CHECK(a.clicks[0].count() == a.clicks[0].count_and(a.mask));
}

TEST_CASE("off-windows stay silent without dark counts and fire with them") {
    ExperimentConfig cfg = base_config(PhotonSource::coherent(0.5), 10.0, 200000, 31);
    const ClickSeries clean = simulate(cfg);
    BitSeries off_a = clean.clicks[0];
    std::uint64_t off_clicks = clean.clicks[0].count() - clean.clicks[0].count_and(clean.mask);
    CHECK(off_clicks == 0);

    cfg.detectors[0].dark_prob = 0.01;
    cfg.detectors[1].dark_prob = 0.01;
    const ClickSeries noisy = simulate(cfg);
    const std::uint64_t off_total = noisy.window_count() - noisy.on_count;
    const std::uint64_t dark_a = noisy.clicks[0].count() - noisy.clicks[0].count_and(noisy.mask);
    const double freq = static_cast<double>(dark_a) / static_cast<double>(off_total);
    const double sigma = std::sqrt(0.01 * 0.99 / static_cast<double>(off_total));
    CHECK(std::abs(freq - 0.01) < 4.0 * sigma);
}

TEST_CASE("on-window click frequency matches the enumeration oracle") {
    const PhotonSource sources[] = {PhotonSource::coherent(0.5), PhotonSource::thermal(1.0),
                                    PhotonSource::fock(2)};
    for (const PhotonSource& source : sources) {
        ExperimentConfig cfg = base_config(source, 2.0, 400000, 1234, 0.8);
        const ClickSeries s = simulate(cfg);
        const std::uint64_t m = s.on_count;
        REQUIRE(m >= 100000);
        const OracleResult oracle = oracle_click_probs(source, cfg.splitter, cfg.detectors);
        for (std::size_t d = 0; d < 2; ++d) {
            const double freq =
                static_cast<double>(s.clicks[d].count_and(s.mask)) / static_cast<double>(m);
            const double p = oracle.click_probs[d];
            const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(m));
            CHECK(std::abs(freq - p) < 4.0 * sigma);
        }
    }
}

TEST_CASE("single port with unit efficiency clicks at 1 - pmf(0)") {
    ExperimentConfig cfg = base_config(PhotonSource::thermal(1.3), 2.0, 200000, 55);
    cfg.detectors = {{1.0, 0.0, "a"}};
    cfg.splitter = {{1.0}};
    const ClickSeries s = simulate(cfg);
    const double p = 1.0 - PhotonSource::thermal(1.3).pmf(0);
    const double freq = static_cast<double>(s.clicks[0].count_and(s.mask)) /
                        static_cast<double>(s.on_count);
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(s.on_count));
    CHECK(std::abs(freq - p) < 4.0 * sigma);
}

TEST_CASE("halving efficiency leaves the on-window g2 unchanged (thinning)") {
    // weak-field regime: click statistics track photon statistics linearly
    const ClickSeries full = simulate(base_config(PhotonSource::thermal(0.05), 4.0, 8000000, 8, 1.0));
    const ClickSeries half =
        simulate(base_config(PhotonSource::thermal(0.05), 4.0, 8000000, 8, 0.5));
    const CorrelationEstimate g_full =
        g2_on_window(full.clicks[0], full.clicks[1], full.mask);
    const CorrelationEstimate g_half =
        g2_on_window(half.clicks[0], half.clicks[1], half.mask);
    REQUIRE(g_full.std_error_status == StderrStatus::ok);
    REQUIRE(g_half.std_error_status == StderrStatus::ok);
    const double gap = std::abs(g_full.value - g_half.value);
    const double combined =
        std::sqrt(g_full.std_error * g_full.std_error + g_half.std_error * g_half.std_error);
    CHECK(gap <= 4.0 * combined);
}

TEST_CASE("multi-window pulses draw one photon number per pulse") {
    // rect over 4 windows: photons distributed multinomially; with Fock(3)
    // every pulse delivers exactly 3 photons across its 4 windows
    ExperimentConfig cfg;
    cfg.source = PhotonSource::fock(3);
    cfg.train = {PulseShape::rect, 4.0 * kTau, 10.0 * kTau, 3.0, 2.0 * kTau};
    cfg.grid = {kTau, 10000};
    cfg.detectors = {{1.0, 0.0, "a"}};
    cfg.splitter = {{1.0}};
    cfg.seed = 71;
    const ClickSeries s = simulate(cfg);
    CHECK(s.on_count == 4000);
    // single detector, eta = 1: a pulse with 3 photons over 4 windows makes
    // between 1 and 3 clicks
    const auto runs_total = s.clicks[0].count();
    CHECK(runs_total >= 1000);
    CHECK(runs_total <= 3000);
}

TEST_CASE("spatial ensemble: fock(1) gives exactly one click over all pairs") {
    ExperimentConfig cfg = base_config(PhotonSource::fock(1), 5.0, 5000, 13);
    cfg.mode = MeasurementMode::spatial_ensemble;
    cfg.ensemble_pairs = 4;
    const SpatialOutcomes out = simulate_spatial(cfg);
    REQUIRE(out.pulse_count == 1000);
    for (std::size_t p = 0; p < out.pulse_count; ++p) {
        int clicks = 0;
        for (std::size_t k = 0; k < out.pair_count; ++k) {
            clicks += out.x.get(p * out.pair_count + k) ? 1 : 0;
            clicks += out.y.get(p * out.pair_count + k) ? 1 : 0;
        }
        CHECK(clicks == 1);
    }
}

TEST_CASE("spatial ensemble matches the 2K-port oracle at K = 2") {
    ExperimentConfig cfg = base_config(PhotonSource::thermal(0.8), 4.0, 800000, 29);
    cfg.mode = MeasurementMode::spatial_ensemble;
    cfg.ensemble_pairs = 2;
    const SpatialOutcomes out = simulate_spatial(cfg);
    const std::size_t samples = out.pulse_count * out.pair_count;

    const SplitterSpec uniform{{0.25, 0.25, 0.25, 0.25}};
    const std::vector<DetectorSpec> dets(4, DetectorSpec{1.0, 0.0, ""});
    const OracleResult oracle =
        oracle_click_probs(PhotonSource::thermal(0.8), uniform, dets);

    const double freq_x = static_cast<double>(out.x.count()) / static_cast<double>(samples);
    const double p = oracle.click_probs[0];
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
    // pair slots of one pulse are correlated; widen the band accordingly
    CHECK(std::abs(freq_x - p) < 8.0 * sigma);

    const CorrelationEstimate g2 = g2_spatial(out);
    REQUIRE(g2.std_error_status == StderrStatus::ok);
    CHECK(std::abs(g2.value - oracle.g2_click) <= 4.0 * g2.std_error);
}

TEST_CASE("spatial ensemble rejects multi-window pulses") {
    ExperimentConfig cfg = base_config(PhotonSource::thermal(1.0), 10.0, 1000, 3);
    cfg.mode = MeasurementMode::spatial_ensemble;
    cfg.ensemble_pairs = 2;
    cfg.train.pulse_width = 3.0 * kTau;
    cfg.train.offset = 1.5 * kTau;
    CHECK_THROWS_AS(simulate_spatial(cfg), config_error);
}

TEST_CASE("config validation catches inconsistencies") {
    ExperimentConfig cfg = base_config(PhotonSource::coherent(1.0), 4.0, 1000, 1);
    cfg.detectors.pop_back();
    CHECK_THROWS_AS(validate(cfg), config_error);

    cfg = base_config(PhotonSource::coherent(1.0), 4.0, 1000, 1);
    cfg.train.photons_per_pulse = 2.0;  // disagrees with the source mean
    CHECK_THROWS_AS(validate(cfg), config_error);

    cfg = base_config(PhotonSource::coherent(1.0), 4.0, 1000, 1);
    cfg.mode = MeasurementMode::spatial_ensemble;
    cfg.ensemble_pairs = 0;
    CHECK_THROWS_AS(validate(cfg), config_error);
}

TEST_CASE("fingerprints identify configs") {
    const ExperimentConfig a = base_config(PhotonSource::coherent(1.0), 4.0, 1000, 1);
    ExperimentConfig b = a;
    CHECK(config_fingerprint(a) == config_fingerprint(b));
    b.seed = 2;
    CHECK(config_fingerprint(a) != config_fingerprint(b));
    CHECK(simulate(a).fingerprint == config_fingerprint(a));
}
