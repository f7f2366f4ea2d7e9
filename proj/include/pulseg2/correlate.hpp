// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "pulseg2/bitseries.hpp"
#include "pulseg2/detector.hpp"
#include "pulseg2/hbt.hpp"
#include "pulseg2/statistics.hpp"

namespace pulseg2 {

enum class Normalization { full_n, on_window_m, spatial_pooled, pulse_lag };

enum class StderrStatus { ok, degenerate, unavailable };

/// Block-bootstrap configuration for the std_error fields. Deterministic for
/// a fixed seed.
struct BootstrapSettings {
    std::size_t blocks = 100;
    std::size_t resamples = 200;
    std::uint64_t seed = 0x626F6F7473747261ULL;
};

struct CorrelationEstimate {
    double value = 0.0;
    double std_error = std::numeric_limits<double>::quiet_NaN();
    StderrStatus std_error_status = StderrStatus::unavailable;
    Normalization normalization = Normalization::full_n;
    std::uint64_t coincidences = 0;
    std::vector<std::uint64_t> singles;  // per detector, in series order
    std::uint64_t window_count = 0;      // N
    std::uint64_t on_count = 0;          // M: number of units averaged
};

/// Exact click/coincidence probabilities by enumeration over photon number
/// and independent port routing. Dark-free reference for Monte Carlo checks.
struct OracleResult {
    std::vector<double> click_probs;
    std::vector<std::vector<double>> pair_coincidence;  // symmetric, diagonal = singles
    double g2_click = std::numeric_limits<double>::quiet_NaN();  // ports 0 and 1
};

/// Intensity as an average of block averages; equals the plain mean.
/// partitions must divide the series length.
double mean_partitioned(const BitSeries& series, std::size_t partitions);

/// Full-N-normalized second order coherence estimate
///   (1/N) sum x_i y_i / [(1/N) sum x_i * (1/N) sum y_i].
CorrelationEstimate g2_temporal(const BitSeries& x, const BitSeries& y,
                                const BootstrapSettings& bs = {});

/// Same ratio restricted to on-windows, normalized by M. Dark-free series
/// satisfy g2_temporal = g2_on_window / R_I exactly.
CorrelationEstimate g2_on_window(const BitSeries& x, const BitSeries& y, const BitSeries& mask,
                                 const BootstrapSettings& bs = {});

/// n-th order coherence estimate: same-window products of n click series,
/// averaged with `partitions` block partitioning (a no-op identity), over
/// all windows or over mask. n = 2 reduces to g2_temporal / g2_on_window.
CorrelationEstimate gn_product(const std::vector<const BitSeries*>& series, const BitSeries* mask,
                               std::size_t partitions, const BootstrapSettings& bs = {});

/// Pooled detector-pair-ensemble estimate over pulses and pairs.
CorrelationEstimate g2_spatial(const SpatialOutcomes& outcomes, const BootstrapSettings& bs = {});

/// Correlates x clicks of pulse i with y clicks of pulse i+lag, where pulses
/// are the contiguous runs of on-windows; elements pair up by position
/// within the run. lag = 0 reduces to g2_on_window.
CorrelationEstimate g2_pulse_to_pulse(const BitSeries& x, const BitSeries& y,
                                      const BitSeries& mask, std::size_t lag,
                                      const BootstrapSettings& bs = {});

OracleResult oracle_click_probs(const PhotonSource& source, const SplitterSpec& splitter,
                                const std::vector<DetectorSpec>& detectors);

/// The resampling engine behind the std_error fields, exposed directly.
enum class EstimatorTag { temporal, on_window, gn, spatial_pooled, pulse_lag };

struct EstimatorRequest {
    EstimatorTag tag = EstimatorTag::temporal;
    std::vector<const BitSeries*> series;
    const BitSeries* mask = nullptr;
    const SpatialOutcomes* spatial = nullptr;
    std::size_t lag = 0;
};

double stderr_block_bootstrap(const EstimatorRequest& request, std::size_t blocks,
                              std::size_t resamples, std::uint64_t seed,
                              bool* degenerate = nullptr);

}  // namespace pulseg2
