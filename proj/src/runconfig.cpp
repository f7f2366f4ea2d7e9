// SPDX-License-Identifier: Apache-2.0
#include "pulseg2/runconfig.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "pulseg2/errors.hpp"

namespace pulseg2 {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t next = std::min(s.find(sep, pos), s.size());
        out.push_back(trim(s.substr(pos, next - pos)));
        if (next == s.size()) break;
        pos = next + 1;
    }
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw config_error(key + ": not a number: '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    auto r = std::from_chars(value.data(), value.data() + value.size(), v);
    if (r.ec != std::errc{} || r.ptr != value.data() + value.size())
        throw config_error(key + ": not a non-negative integer: '" + value + "'");
    return v;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw config_error("config line " + std::to_string(line_no) + ": empty key");
        if (!kv.emplace(key, value).second)
            throw config_error("duplicate config key: " + key);
    }

    auto take = [&kv](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) return std::pair<bool, std::string>{false, {}};
        std::pair<bool, std::string> out{true, it->second};
        kv.erase(it);
        return out;
    };
    auto require = [&take](const std::string& key) {
        auto [found, value] = take(key);
        if (!found) throw config_error("missing required config key: " + key);
        return value;
    };

    RunConfig cfg;

    // --- source ---
    const std::string kind = require("source.kind");
    if (kind == "coherent") {
        cfg.experiment.source = PhotonSource::coherent(parse_double("source.mean", require("source.mean")));
    } else if (kind == "thermal") {
        cfg.experiment.source = PhotonSource::thermal(parse_double("source.mean", require("source.mean")));
    } else if (kind == "fock") {
        cfg.experiment.source =
            PhotonSource::fock(static_cast<int>(parse_u64("source.m", require("source.m"))));
    } else if (kind == "empirical") {
        std::vector<std::pair<int, double>> table;
        for (const std::string& entry : split(require("source.pmf"), ',')) {
            const std::size_t colon = entry.find(':');
            if (colon == std::string::npos)
                throw config_error("source.pmf entries must be count:probability");
            table.emplace_back(
                static_cast<int>(parse_u64("source.pmf", trim(entry.substr(0, colon)))),
                parse_double("source.pmf", trim(entry.substr(colon + 1))));
        }
        cfg.experiment.source = PhotonSource::empirical(std::move(table));
    } else {
        throw config_error("source.kind: unknown kind '" + kind + "'");
    }

    // --- grid (parsed before train so the offset default can see it) ---
    cfg.experiment.grid.window_duration =
        parse_double("grid.window_duration", require("grid.window_duration"));
    cfg.experiment.grid.window_count = parse_u64("grid.window_count", require("grid.window_count"));

    // --- train ---
    const std::string shape = require("train.shape");
    if (shape == "rect")
        cfg.experiment.train.shape = PulseShape::rect;
    else if (shape == "gaussian")
        cfg.experiment.train.shape = PulseShape::gaussian;
    else if (shape == "sech2")
        cfg.experiment.train.shape = PulseShape::sech2;
    else
        throw config_error("train.shape: unknown shape '" + shape + "'");
    cfg.experiment.train.pulse_width =
        parse_double("train.pulse_width", require("train.pulse_width"));
    cfg.experiment.train.period = parse_double("train.period", require("train.period"));
    if (auto [found, v] = take("train.offset"); found)
        cfg.experiment.train.offset = parse_double("train.offset", v);
    else
        cfg.experiment.train.offset = 0.5 * cfg.experiment.grid.window_duration;
    if (auto [found, v] = take("train.photons_per_pulse"); found)
        cfg.experiment.train.photons_per_pulse = parse_double("train.photons_per_pulse", v);
    else
        cfg.experiment.train.photons_per_pulse = cfg.experiment.source.mean();

    // --- detectors ---
    for (std::size_t d = 0;; ++d) {
        const std::string prefix = "detector." + std::to_string(d) + ".";
        auto [found_eff, eff] = take(prefix + "efficiency");
        auto [found_dark, dark] = take(prefix + "dark_prob");
        auto [found_label, label] = take(prefix + "label");
        if (!found_eff && !found_dark && !found_label) break;
        DetectorSpec spec;
        spec.efficiency = found_eff ? parse_double(prefix + "efficiency", eff) : 1.0;
        spec.dark_prob = found_dark ? parse_double(prefix + "dark_prob", dark) : 0.0;
        spec.label = found_label ? label : std::string(1, static_cast<char>('a' + d));
        cfg.experiment.detectors.push_back(spec);
    }
    if (cfg.experiment.detectors.empty())
        cfg.experiment.detectors = {{1.0, 0.0, "a"}, {1.0, 0.0, "b"}};

    // --- splitter ---
    if (auto [found, v] = take("splitter.ports"); found) {
        for (const std::string& p : split(v, ','))
            cfg.experiment.splitter.port_probs.push_back(parse_double("splitter.ports", p));
    } else {
        cfg.experiment.splitter.port_probs.assign(
            cfg.experiment.detectors.size(),
            1.0 / static_cast<double>(cfg.experiment.detectors.size()));
    }

    // --- mode ---
    if (auto [found, v] = take("mode"); found) {
        if (v == "temporal")
            cfg.experiment.mode = MeasurementMode::temporal;
        else if (v == "spatial")
            cfg.experiment.mode = MeasurementMode::spatial_ensemble;
        else if (v == "pulse_to_pulse")
            cfg.experiment.mode = MeasurementMode::pulse_to_pulse;
        else
            throw config_error("mode: unknown mode '" + v + "'");
    }
    if (auto [found, v] = take("mode.pairs"); found)
        cfg.experiment.ensemble_pairs = parse_u64("mode.pairs", v);
    if (auto [found, v] = take("mode.max_lag"); found)
        cfg.experiment.max_lag = parse_u64("mode.max_lag", v);

    if (auto [found, v] = take("seed"); found) cfg.experiment.seed = parse_u64("seed", v);
    if (auto [found, v] = take("threads"); found)
        cfg.threads = static_cast<int>(parse_u64("threads", v));

    // --- analysis ---
    if (auto [found, v] = take("estimators"); found) {
        cfg.estimators = split(v, ',');
    } else {
        cfg.estimators = {"g2_temporal", "g2_on"};
    }
    if (auto [found, v] = take("bootstrap.blocks"); found)
        cfg.bootstrap.blocks = parse_u64("bootstrap.blocks", v);
    if (auto [found, v] = take("bootstrap.resamples"); found)
        cfg.bootstrap.resamples = parse_u64("bootstrap.resamples", v);
    if (auto [found, v] = take("bootstrap.seed"); found)
        cfg.bootstrap.seed = parse_u64("bootstrap.seed", v);

    // --- outputs ---
    if (auto [found, v] = take("output.timetags"); found) cfg.out_timetags = v;
    if (auto [found, v] = take("output.summary"); found) cfg.out_summary = v;
    if (auto [found, v] = take("output.resolution_ps"); found)
        cfg.resolution_ps = parse_u64("output.resolution_ps", v);

    // --- sweep ---
    if (auto [found, v] = take("sweep.axis"); found) {
        if (v != "pulse_width" && v != "r_i" && v != "mean" && v != "efficiency")
            throw config_error("sweep.axis must be pulse_width, r_i, mean or efficiency");
        cfg.sweep_axis = v;
        const std::string values = require("sweep.values");
        for (const std::string& s : split(values, ','))
            cfg.sweep_values.push_back(parse_double("sweep.values", s));
        if (cfg.sweep_values.empty()) throw config_error("sweep.values must not be empty");
    }

    if (!kv.empty()) throw config_error("unknown config key: " + kv.begin()->first);

    validate(cfg.experiment);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_run_config(buf.str());
}

ExperimentConfig apply_sweep_value(const RunConfig& base, const std::string& axis, double value) {
    ExperimentConfig exp = base.experiment;
    if (axis == "pulse_width") {
        exp.train.pulse_width = value;
    } else if (axis == "r_i") {
        if (!(value > 0.0) || value > 1.0)
            throw config_error("sweep r_i values must lie in (0, 1]");
        exp.train.period = exp.grid.window_duration / value;
        exp.train.offset = std::min(exp.train.offset, exp.train.period / 2.0);
    } else if (axis == "mean") {
        switch (exp.source.kind()) {
            case SourceKind::coherent: exp.source = PhotonSource::coherent(value); break;
            case SourceKind::thermal: exp.source = PhotonSource::thermal(value); break;
            case SourceKind::fock:
                exp.source = PhotonSource::fock(static_cast<int>(std::llround(value)));
                break;
            case SourceKind::empirical:
                throw config_error("mean sweep is not defined for empirical sources");
        }
        exp.train.photons_per_pulse = exp.source.mean();
    } else if (axis == "efficiency") {
        for (DetectorSpec& d : exp.detectors) d.efficiency = value;
    } else {
        throw config_error("unknown sweep axis: " + axis);
    }
    validate(exp);
    return exp;
}

const char* to_string(Normalization norm) {
    switch (norm) {
        case Normalization::full_n: return "full_n";
        case Normalization::on_window_m: return "on_window_m";
        case Normalization::spatial_pooled: return "spatial_pooled";
        case Normalization::pulse_lag: return "pulse_lag";
    }
    return "?";
}

std::string normalization_label(const CorrelationEstimate& est, std::size_t lag) {
    if (est.normalization == Normalization::pulse_lag)
        return "pulse_lag(" + std::to_string(lag) + ")";
    return to_string(est.normalization);
}

}  // namespace pulseg2
