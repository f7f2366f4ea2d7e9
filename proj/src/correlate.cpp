// SPDX-License-Identifier: Apache-2.0
#include "pulseg2/correlate.hpp"

#include <algorithm>
#include <cmath>

#include "pulseg2/errors.hpp"
#include "pulseg2/rng.hpp"

namespace pulseg2 {

namespace {

/// popcount of the AND of all series over the window range [lo, hi).
std::uint64_t count_and_range(const std::vector<const BitSeries*>& series, std::size_t lo,
                              std::size_t hi) {
    if (lo >= hi) return 0;
    const std::size_t first_word = lo / 64;
    const std::size_t last_word = (hi - 1) / 64;
    std::uint64_t n = 0;
    for (std::size_t w = first_word; w <= last_word; ++w) {
        std::uint64_t word = ~std::uint64_t{0};
        for (const BitSeries* s : series) word &= s->words()[w];
        if (w == first_word && (lo & 63)) word &= ~std::uint64_t{0} << (lo & 63);
        if (w == last_word && (hi & 63)) word &= (std::uint64_t{1} << (hi & 63)) - 1;
        n += std::popcount(word);
    }
    return n;
}

struct BlockSums {
    std::uint64_t prod = 0;
    std::vector<std::uint64_t> singles;
    std::uint64_t units = 0;
};

/// Window indices w_0..w_B splitting the mask's on-windows into B blocks of
/// (near-)equal unit count: popcount(mask[0, w_b)) == M*b/B.
std::vector<std::size_t> masked_boundaries(const BitSeries& mask, std::uint64_t on_count,
                                           std::size_t blocks) {
    std::vector<std::size_t> bounds(blocks + 1, mask.size());
    bounds[0] = 0;
    std::size_t b = 1;
    std::uint64_t target = on_count * b / blocks;
    std::uint64_t seen = 0;
    const auto& words = mask.words();
    for (std::size_t w = 0; w < words.size() && b < blocks; ++w) {
        const std::uint64_t cnt = std::popcount(words[w]);
        while (b < blocks && seen + cnt >= target) {
            // boundary falls inside this word; locate the exact bit
            std::uint64_t need = target - seen;
            std::uint64_t word = words[w];
            std::size_t bit = 0;
            while (need > 0) {
                if (word & 1) --need;
                word >>= 1;
                ++bit;
            }
            bounds[b] = w * 64 + bit;
            ++b;
            target = on_count * b / blocks;
        }
        seen += cnt;
    }
    return bounds;
}

std::vector<std::pair<std::size_t, std::size_t>> mask_runs(const BitSeries& mask) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    const std::size_t n = mask.size();
    std::size_t i = 0;
    while (i < n) {
        // skip zero words
        if ((i & 63) == 0) {
            while (i + 64 <= n && mask.words()[i / 64] == 0) i += 64;
        }
        if (i >= n) break;
        if (!mask.get(i)) {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < n && mask.get(i)) ++i;
        runs.emplace_back(start, i - start);
    }
    return runs;
}

std::vector<BlockSums> build_block_sums(const EstimatorRequest& req, std::size_t blocks) {
    std::vector<BlockSums> sums(blocks);

    if (req.tag == EstimatorTag::pulse_lag) {
        const BitSeries& x = *req.series[0];
        const BitSeries& y = *req.series[1];
        const auto runs = mask_runs(*req.mask);
        if (runs.size() < req.lag + 1)
            throw insufficient_data("need at least lag+1 pulses in the series");
        std::uint64_t total_units = 0;
        for (std::size_t i = 0; i + req.lag < runs.size(); ++i)
            total_units += std::min(runs[i].second, runs[i + req.lag].second);

        for (auto& s : sums) s.singles.assign(2, 0);
        std::uint64_t u = 0;
        std::size_t b = 0;
        for (std::size_t i = 0; i + req.lag < runs.size(); ++i) {
            const auto [xs, xl] = runs[i];
            const auto [ys, yl] = runs[i + req.lag];
            const std::size_t len = std::min(xl, yl);
            for (std::size_t j = 0; j < len; ++j) {
                while (b + 1 < blocks && u >= total_units * (b + 1) / blocks) ++b;
                const bool xv = x.get(xs + j);
                const bool yv = y.get(ys + j);
                sums[b].units += 1;
                sums[b].singles[0] += xv;
                sums[b].singles[1] += yv;
                sums[b].prod += xv && yv;
                ++u;
            }
        }
        return sums;
    }

    // Window-range domains: all windows, on-windows, or pooled pair slots.
    std::vector<const BitSeries*> series = req.series;
    const BitSeries* mask = req.mask;
    if (req.tag == EstimatorTag::spatial_pooled) {
        series = {&req.spatial->x, &req.spatial->y};
        mask = nullptr;
    }
    const std::size_t n_series = series.size();
    const std::size_t domain = series[0]->size();

    std::vector<std::size_t> bounds;
    if (mask) {
        bounds = masked_boundaries(*mask, mask->count(), blocks);
    } else {
        bounds.resize(blocks + 1);
        for (std::size_t b = 0; b <= blocks; ++b) bounds[b] = domain * b / blocks;
    }

    std::vector<const BitSeries*> all = series;
    if (mask) all.push_back(mask);
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t lo = bounds[b], hi = bounds[b + 1];
        sums[b].singles.assign(n_series, 0);
        sums[b].prod = count_and_range(all, lo, hi);
        for (std::size_t d = 0; d < n_series; ++d) {
            if (mask) {
                sums[b].singles[d] = count_and_range({series[d], mask}, lo, hi);
            } else {
                sums[b].singles[d] = count_and_range({series[d]}, lo, hi);
            }
        }
        sums[b].units = mask ? count_and_range({mask}, lo, hi) : hi - lo;
    }
    return sums;
}

struct Totals {
    std::uint64_t prod = 0;
    std::vector<std::uint64_t> singles;
    std::uint64_t units = 0;
};

Totals total_sums(const std::vector<BlockSums>& sums) {
    Totals t;
    t.singles.assign(sums.front().singles.size(), 0);
    for (const auto& s : sums) {
        t.prod += s.prod;
        t.units += s.units;
        for (std::size_t d = 0; d < t.singles.size(); ++d) t.singles[d] += s.singles[d];
    }
    return t;
}

double ratio_of_means(std::uint64_t prod, const std::vector<std::uint64_t>& singles,
                      std::uint64_t units) {
    const double u = static_cast<double>(units);
    double den = 1.0;
    for (std::uint64_t s : singles) den *= static_cast<double>(s) / u;
    return (static_cast<double>(prod) / u) / den;
}

/// Resample block sums with replacement; standard error of the estimator
/// value over the resamples.
double bootstrap_stderr(const std::vector<BlockSums>& sums, std::size_t resamples,
                        std::uint64_t seed, bool& degenerate) {
    RngStream rng = RngStream::derive(seed, RngStream::Domain::bootstrap, sums.size());
    const std::size_t blocks = sums.size();
    std::vector<double> values;
    values.reserve(resamples);
    std::vector<std::uint64_t> singles(sums.front().singles.size());
    for (std::size_t r = 0; r < resamples; ++r) {
        std::uint64_t prod = 0, units = 0;
        std::fill(singles.begin(), singles.end(), 0);
        for (std::size_t k = 0; k < blocks; ++k) {
            const auto& s = sums[rng.next_below(blocks)];
            prod += s.prod;
            units += s.units;
            for (std::size_t d = 0; d < singles.size(); ++d) singles[d] += s.singles[d];
        }
        if (units == 0) continue;
        if (std::any_of(singles.begin(), singles.end(), [](std::uint64_t s) { return s == 0; }))
            continue;
        values.push_back(ratio_of_means(prod, singles, units));
    }
    if (values.size() < 2) {
        degenerate = true;
        return 0.0;
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    if (ss == 0.0) {
        degenerate = true;
        return 0.0;
    }
    degenerate = false;
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

CorrelationEstimate finish_estimate(const EstimatorRequest& req, Normalization norm,
                                    std::uint64_t window_count, const BootstrapSettings& bs,
                                    double value_override = std::numeric_limits<double>::quiet_NaN()) {
    // One block pass for the value (exact integer counts), another set for
    // the bootstrap.
    std::vector<BlockSums> one = build_block_sums(req, 1);
    const Totals t = total_sums(one);
    if (t.units == 0) throw undefined_estimate("no windows to average");
    for (std::size_t d = 0; d < t.singles.size(); ++d) {
        if (t.singles[d] == 0)
            throw undefined_estimate("zero singles on detector " + std::to_string(d) +
                                     ": estimate undefined");
    }

    CorrelationEstimate est;
    est.value = std::isnan(value_override) ? ratio_of_means(t.prod, t.singles, t.units)
                                           : value_override;
    est.normalization = norm;
    est.coincidences = t.prod;
    est.singles = t.singles;
    est.window_count = window_count;
    est.on_count = t.units;

    if (t.units >= 10 && bs.resamples >= 2) {
        const std::size_t blocks =
            std::min<std::size_t>(std::max<std::size_t>(bs.blocks, 10), t.units);
        bool degenerate = false;
        est.std_error =
            bootstrap_stderr(build_block_sums(req, blocks), bs.resamples, bs.seed, degenerate);
        est.std_error_status = degenerate ? StderrStatus::degenerate : StderrStatus::ok;
    }
    return est;
}

void require_equal_length(const BitSeries& a, const BitSeries& b) {
    if (a.size() != b.size())
        throw config_error("click series must have equal lengths");
}

}  // namespace

double mean_partitioned(const BitSeries& series, std::size_t partitions) {
    const std::size_t n = series.size();
    if (partitions == 0 || n % partitions != 0)
        throw config_error("partition count must divide the series length");
    const std::size_t block = n / partitions;
    double acc = 0.0;
    for (std::size_t j = 0; j < partitions; ++j) {
        const std::uint64_t c = count_and_range({&series}, j * block, (j + 1) * block);
        acc += static_cast<double>(c) / static_cast<double>(block);
    }
    return acc / static_cast<double>(partitions);
}

CorrelationEstimate g2_temporal(const BitSeries& x, const BitSeries& y,
                                const BootstrapSettings& bs) {
    require_equal_length(x, y);
    EstimatorRequest req{EstimatorTag::temporal, {&x, &y}, nullptr, nullptr, 0};
    return finish_estimate(req, Normalization::full_n, x.size(), bs);
}

CorrelationEstimate g2_on_window(const BitSeries& x, const BitSeries& y, const BitSeries& mask,
                                 const BootstrapSettings& bs) {
    require_equal_length(x, y);
    require_equal_length(x, mask);
    EstimatorRequest req{EstimatorTag::on_window, {&x, &y}, &mask, nullptr, 0};
    return finish_estimate(req, Normalization::on_window_m, x.size(), bs);
}

CorrelationEstimate gn_product(const std::vector<const BitSeries*>& series, const BitSeries* mask,
                               std::size_t partitions, const BootstrapSettings& bs) {
    if (series.size() < 2) throw config_error("gn_product needs at least two series");
    for (const BitSeries* s : series) require_equal_length(*series[0], *s);
    if (mask) require_equal_length(*series[0], *mask);

    EstimatorRequest req{EstimatorTag::gn, series, mask, nullptr, 0};
    const std::uint64_t units = mask ? mask->count() : series[0]->size();
    if (partitions == 0 || units % partitions != 0)
        throw config_error("partition count must divide the averaged window count");

    // Partitioned numerator per the average-of-averages identity; the
    // denominator uses the plain singles means.
    std::vector<BlockSums> parts = build_block_sums(req, partitions);
    double num = 0.0;
    for (const auto& p : parts)
        num += static_cast<double>(p.prod) / static_cast<double>(p.units);
    num /= static_cast<double>(partitions);

    const Totals t = total_sums(parts);
    for (std::size_t d = 0; d < t.singles.size(); ++d)
        if (t.singles[d] == 0)
            throw undefined_estimate("zero singles on series " + std::to_string(d) +
                                     ": estimate undefined");
    double den = 1.0;
    for (std::uint64_t s : t.singles)
        den *= static_cast<double>(s) / static_cast<double>(t.units);

    const Normalization norm = mask ? Normalization::on_window_m : Normalization::full_n;
    return finish_estimate(req, norm, series[0]->size(), bs, num / den);
}

CorrelationEstimate g2_spatial(const SpatialOutcomes& outcomes, const BootstrapSettings& bs) {
    if (outcomes.pair_count < 1) throw config_error("spatial outcomes need K >= 1");
    if (outcomes.pulse_count < 1) throw insufficient_data("spatial outcomes need >= 1 pulse");
    EstimatorRequest req{EstimatorTag::spatial_pooled, {}, nullptr, &outcomes, 0};
    return finish_estimate(req, Normalization::spatial_pooled,
                           outcomes.pulse_count * outcomes.pair_count, bs);
}

CorrelationEstimate g2_pulse_to_pulse(const BitSeries& x, const BitSeries& y,
                                      const BitSeries& mask, std::size_t lag,
                                      const BootstrapSettings& bs) {
    require_equal_length(x, y);
    require_equal_length(x, mask);
    if (lag == 0) {
        CorrelationEstimate est = g2_on_window(x, y, mask, bs);
        est.normalization = Normalization::pulse_lag;
        return est;
    }
    EstimatorRequest req{EstimatorTag::pulse_lag, {&x, &y}, &mask, nullptr, lag};
    return finish_estimate(req, Normalization::pulse_lag, x.size(), bs);
}

OracleResult oracle_click_probs(const PhotonSource& source, const SplitterSpec& splitter,
                                const std::vector<DetectorSpec>& detectors) {
    validate(splitter);
    if (detectors.size() != splitter.port_probs.size())
        throw config_error("detector count must equal splitter port count");
    for (const auto& d : detectors) {
        validate(d);
        if (d.dark_prob != 0.0)
            throw config_error("oracle_click_probs is dark-free by design");
    }

    const std::vector<double> pmf = source.pmf_table(1e-12);
    const std::size_t ports = detectors.size();
    std::vector<double> absorb(ports);  // per-photon probability of a click at port j
    for (std::size_t j = 0; j < ports; ++j)
        absorb[j] = detectors[j].efficiency * splitter.port_probs[j];

    // Q(s) = sum_n pmf(n) (1-s)^n = P(no click on a port set absorbing s)
    auto no_click = [&pmf](double s) {
        double q = 0.0;
        double base = 1.0 - s;
        for (std::size_t n = 0; n < pmf.size(); ++n) q += pmf[n] * std::pow(base, static_cast<double>(n));
        return q;
    };

    OracleResult result;
    result.click_probs.resize(ports);
    for (std::size_t j = 0; j < ports; ++j) result.click_probs[j] = 1.0 - no_click(absorb[j]);

    result.pair_coincidence.assign(ports, std::vector<double>(ports, 0.0));
    for (std::size_t j = 0; j < ports; ++j) {
        result.pair_coincidence[j][j] = result.click_probs[j];
        for (std::size_t k = j + 1; k < ports; ++k) {
            const double p = 1.0 - no_click(absorb[j]) - no_click(absorb[k]) +
                             no_click(absorb[j] + absorb[k]);
            result.pair_coincidence[j][k] = p;
            result.pair_coincidence[k][j] = p;
        }
    }
    if (ports >= 2 && result.click_probs[0] > 0.0 && result.click_probs[1] > 0.0)
        result.g2_click = result.pair_coincidence[0][1] /
                          (result.click_probs[0] * result.click_probs[1]);
    return result;
}

double stderr_block_bootstrap(const EstimatorRequest& request, std::size_t blocks,
                              std::size_t resamples, std::uint64_t seed, bool* degenerate) {
    std::vector<BlockSums> probe = build_block_sums(request, 1);
    const std::uint64_t units = probe.front().units;
    if (blocks < 10 || blocks > units)
        throw config_error("bootstrap block count must lie in [10, unit count]");
    bool local = false;
    const double se =
        bootstrap_stderr(build_block_sums(request, blocks), resamples, seed, local);
    if (degenerate) *degenerate = local;
    return se;
}

}  // namespace pulseg2
