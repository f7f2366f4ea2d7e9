// SPDX-License-Identifier: Apache-2.0
#include "pulseg2/analysis.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "pulseg2/errors.hpp"

namespace pulseg2 {

namespace {

EstimateRow make_row(std::string name, const ClickSeries& series) {
    EstimateRow row;
    row.estimator = std::move(name);
    row.intensity_ratio = series.intensity_ratio;
    row.window_count = series.window_count();
    row.on_count = series.on_count;
    return row;
}

template <typename Fn>
void try_estimate(EstimateRow& row, Fn&& fn) {
    try {
        row.estimate = fn();
        row.defined = true;
    } catch (const undefined_estimate& e) {
        row.reason = e.what();
    } catch (const insufficient_data& e) {
        row.reason = e.what();
    }
}

std::string format_value(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> on_window_runs(const BitSeries& mask) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    const std::size_t n = mask.size();
    std::size_t i = 0;
    while (i < n) {
        if ((i & 63) == 0) {
            while (i + 64 <= n && mask.words()[i / 64] == 0) i += 64;
        }
        if (i >= n) break;
        if (!mask.get(i)) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < n && mask.get(i)) ++i;
        runs.emplace_back(start, i - start);
    }
    return runs;
}

SpatialOutcomes outcomes_from_series(const ClickSeries& series, std::size_t pairs) {
    if (pairs < 1) throw config_error("pair count must be >= 1");
    if (series.clicks.size() != 2 * pairs)
        throw config_error("series channel count does not match 2 * pairs");
    const auto runs = on_window_runs(series.mask);
    for (const auto& [start, len] : runs)
        if (len != 1)
            throw config_error("spatial outcomes need single-window pulses");

    SpatialOutcomes out;
    out.pair_count = pairs;
    out.pulse_count = runs.size();
    out.x = BitSeries(runs.size() * pairs);
    out.y = BitSeries(runs.size() * pairs);
    for (std::size_t p = 0; p < runs.size(); ++p) {
        const std::size_t w = runs[p].first;
        for (std::size_t k = 0; k < pairs; ++k) {
            if (series.clicks[2 * k].get(w)) out.x.set(p * pairs + k);
            if (series.clicks[2 * k + 1].get(w)) out.y.set(p * pairs + k);
        }
    }
    return out;
}

std::vector<EstimateRow> run_estimators(const RunConfig& config, const ClickSeries& series) {
    std::vector<EstimateRow> rows;
    const BootstrapSettings& bs = config.bootstrap;

    auto series_ptrs = [&series](std::size_t n) {
        std::vector<const BitSeries*> ptrs;
        for (std::size_t d = 0; d < n; ++d) ptrs.push_back(&series.clicks[d]);
        return ptrs;
    };

    for (const std::string& token : config.estimators) {
        if (token == "spatial") continue;  // handled by spatial_row on pair outcomes

        if (token == "g2_temporal") {
            EstimateRow row = make_row(token, series);
            try_estimate(row, [&] { return g2_temporal(series.clicks[0], series.clicks[1], bs); });
            rows.push_back(row);
            EstimateRow product = make_row("g2_temporal_x_ri", series);
            if (row.defined) {
                product.defined = true;
                product.estimate = row.estimate;
                product.estimate.value = row.estimate.value * series.intensity_ratio;
                product.estimate.std_error = row.estimate.std_error * series.intensity_ratio;
            } else {
                product.reason = row.reason;
            }
            rows.push_back(product);
            continue;
        }
        if (token == "g2_on") {
            EstimateRow row = make_row(token, series);
            try_estimate(row, [&] {
                return g2_on_window(series.clicks[0], series.clicks[1], series.mask, bs);
            });
            rows.push_back(row);
            continue;
        }
        if (token.size() >= 4 && token[0] == 'g' && std::isdigit(static_cast<unsigned char>(token[1]))) {
            const std::size_t n = static_cast<std::size_t>(token[1] - '0');
            const std::string suffix = token.substr(2);
            if (n >= 2 && (suffix == "_temporal" || suffix == "_on")) {
                EstimateRow row = make_row(token, series);
                if (n > series.clicks.size()) {
                    row.reason = "estimator needs " + std::to_string(n) + " detectors";
                    rows.push_back(row);
                    continue;
                }
                const BitSeries* mask = suffix == "_on" ? &series.mask : nullptr;
                try_estimate(row, [&] { return gn_product(series_ptrs(n), mask, 1, bs); });
                rows.push_back(row);
                continue;
            }
        }
        if (token == "pulse_to_pulse") {
            for (std::size_t lag = 1; lag <= std::max<std::size_t>(config.experiment.max_lag, 1);
                 ++lag) {
                EstimateRow row = make_row("pulse_to_pulse_lag" + std::to_string(lag), series);
                row.lag = lag;
                try_estimate(row, [&] {
                    return g2_pulse_to_pulse(series.clicks[0], series.clicks[1], series.mask, lag,
                                             bs);
                });
                rows.push_back(row);
            }
            continue;
        }
        if (token == "g2_temporal_x_ri") continue;  // derived automatically
        throw config_error("unknown estimator: " + token);
    }
    return rows;
}

EstimateRow spatial_row(const RunConfig& config, const SpatialOutcomes& outcomes) {
    EstimateRow row;
    row.estimator = "g2_spatial";
    row.window_count = outcomes.pulse_count * outcomes.pair_count;
    row.on_count = row.window_count;
    row.intensity_ratio = 1.0;
    try_estimate(row, [&] { return g2_spatial(outcomes, config.bootstrap); });
    return row;
}

std::string rows_to_csv(const std::vector<EstimateRow>& rows) {
    std::ostringstream os;
    os << "estimator,value,stderr,normalization,N,M,R_I,coincidences,singles_a,singles_b,reason\n";
    for (const EstimateRow& row : rows) {
        os << row.estimator << ',';
        if (row.defined) {
            os << format_value(row.estimate.value) << ',';
            if (std::isnan(row.estimate.std_error))
                os << "NA,";
            else
                os << format_value(row.estimate.std_error) << ',';
            os << normalization_label(row.estimate, row.lag) << ',' << row.window_count << ','
               << row.on_count << ',' << format_value(row.intensity_ratio) << ','
               << row.estimate.coincidences << ','
               << (row.estimate.singles.size() > 0 ? row.estimate.singles[0] : 0) << ','
               << (row.estimate.singles.size() > 1 ? row.estimate.singles[1] : 0) << ",\n";
        } else {
            os << "NA,NA,," << row.window_count << ',' << row.on_count << ','
               << format_value(row.intensity_ratio) << ",0,0,0," << row.reason << '\n';
        }
    }
    return os.str();
}

std::string rows_to_json(const std::vector<EstimateRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const EstimateRow& row : rows) {
        nlohmann::json j;
        j["estimator"] = row.estimator;
        j["N"] = row.window_count;
        j["M"] = row.on_count;
        j["R_I"] = row.intensity_ratio;
        if (row.defined) {
            j["value"] = row.estimate.value;
            if (!std::isnan(row.estimate.std_error)) j["stderr"] = row.estimate.std_error;
            j["normalization"] = normalization_label(row.estimate, row.lag);
            j["coincidences"] = row.estimate.coincidences;
            j["singles"] = row.estimate.singles;
        } else {
            j["value"] = nullptr;
            j["reason"] = row.reason;
        }
        out.push_back(std::move(j));
    }
    return out.dump(2) + "\n";
}

}  // namespace pulseg2
