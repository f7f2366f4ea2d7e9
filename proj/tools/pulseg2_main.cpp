// SPDX-License-Identifier: Apache-2.0
//
// pulseg2 — simulate and analyze pulsed-light HBT click experiments.
//
// Subcommands:
//   simulate      run a configured experiment, write TTG2 time tags + JSON summary
//   analyze       estimate coherence functions from a TTG2 file
//   oracle        exact click/coincidence probabilities for a source + splitter
//   sweep         re-run the experiment over a parameter axis, one CSV row per value
//   gen-timetags  convert time-tag files between CSV and TTG2 binary

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "pulseg2/analysis.hpp"
#include "pulseg2/errors.hpp"
#include "pulseg2/runconfig.hpp"
#include "pulseg2/timetag.hpp"

namespace {

using namespace pulseg2;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::string fingerprint_hex(std::uint64_t fp) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(fp));
    return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw config_error("cannot open output file: " + path);
    os << text;
    if (!os) throw std::runtime_error("write failed: " + path);
}

struct SimulateOutputs {
    std::string timetag_path;
    std::string summary_path;
    nlohmann::json summary;
};

/// Shared by `simulate` and the tests: run, export, summarize.
SimulateOutputs do_simulate(const RunConfig& cfg, const std::string& out_prefix) {
    SimulateOutputs out;
    out.timetag_path = !out_prefix.empty() ? out_prefix + ".ttg2"
                       : !cfg.out_timetags.empty() ? cfg.out_timetags
                                                   : "pulseg2_run.ttg2";
    out.summary_path = !out_prefix.empty() ? out_prefix + ".json"
                       : !cfg.out_summary.empty() ? cfg.out_summary
                                                  : "pulseg2_run.json";

    const ExperimentConfig& exp = cfg.experiment;
    nlohmann::json& j = out.summary;
    j["seed"] = exp.seed;
    j["fingerprint"] = fingerprint_hex(config_fingerprint(exp));
    j["resolution_ps"] = cfg.resolution_ps;
    j["timetags"] = out.timetag_path;

    if (exp.mode == MeasurementMode::spatial_ensemble) {
        const SpatialOutcomes outcomes = simulate_spatial(exp, cfg.threads);
        // One channel per port: pair k clicks on channels 2k (x) and 2k+1 (y).
        WindowWeights weights = window_weights(exp.train, exp.grid);
        const auto runs = on_window_runs(weights.mask);
        ClickSeries series;
        series.clicks.assign(2 * outcomes.pair_count, BitSeries(exp.grid.window_count));
        series.mask = weights.mask;
        series.on_count = weights.on_count;
        series.intensity_ratio = intensity_ratio(weights);
        for (std::size_t p = 0; p < outcomes.pulse_count; ++p) {
            const std::size_t w = runs[p].first;
            for (std::size_t k = 0; k < outcomes.pair_count; ++k) {
                if (outcomes.x.get(p * outcomes.pair_count + k)) series.clicks[2 * k].set(w);
                if (outcomes.y.get(p * outcomes.pair_count + k)) series.clicks[2 * k + 1].set(w);
            }
        }
        TimeTagHeader header{1, cfg.resolution_ps,
                             static_cast<std::uint32_t>(2 * outcomes.pair_count)};
        write_binary_file(export_series(series, exp.grid, cfg.resolution_ps), header,
                          out.timetag_path);
        j["mode"] = "spatial";
        j["pairs"] = outcomes.pair_count;
        j["pulses"] = outcomes.pulse_count;
        j["window_count"] = exp.grid.window_count;
        j["on_count"] = series.on_count;
        j["intensity_ratio"] = series.intensity_ratio;
        j["clicks"] = {outcomes.x.count(), outcomes.y.count()};
    } else {
        const ClickSeries series = simulate(exp, cfg.threads);
        TimeTagHeader header{1, cfg.resolution_ps,
                             static_cast<std::uint32_t>(series.clicks.size())};
        write_binary_file(export_series(series, exp.grid, cfg.resolution_ps), header,
                          out.timetag_path);
        j["mode"] = exp.mode == MeasurementMode::temporal ? "temporal" : "pulse_to_pulse";
        j["window_count"] = series.window_count();
        j["on_count"] = series.on_count;
        j["intensity_ratio"] = series.intensity_ratio;
        nlohmann::json clicks = nlohmann::json::array();
        for (const BitSeries& c : series.clicks) clicks.push_back(c.count());
        j["clicks"] = std::move(clicks);
        j["collision_count"] = series.collision_count;
    }
    write_text_file(out.summary_path, out.summary.dump(2) + "\n");
    return out;
}

int cmd_simulate(const std::string& config_path, const std::string& out_prefix,
                 std::int64_t seed_override, int threads_override) {
    RunConfig cfg = load_run_config(config_path);
    if (seed_override >= 0) cfg.experiment.seed = static_cast<std::uint64_t>(seed_override);
    if (threads_override > 0) cfg.threads = threads_override;
    const SimulateOutputs out = do_simulate(cfg, out_prefix);
    std::cout << out.summary.dump(2) << '\n';
    return kExitOk;
}

int cmd_analyze(const std::string& config_path, const std::string& input_path,
                const std::string& out_path, const std::string& format,
                const std::vector<std::string>& estimator_flags) {
    RunConfig cfg = load_run_config(config_path);
    if (!estimator_flags.empty()) cfg.estimators = estimator_flags;

    const ParsedTimeTags parsed = parse_binary_file(input_path);
    const ExperimentConfig& exp = cfg.experiment;

    const std::size_t expected_channels = exp.mode == MeasurementMode::spatial_ensemble
                                              ? 2 * exp.ensemble_pairs
                                              : exp.detectors.size();
    if (parsed.header.channel_count != expected_channels)
        throw config_error("file has " + std::to_string(parsed.header.channel_count) +
                           " channels, config expects " + std::to_string(expected_channels));

    const WindowWeights weights = window_weights(exp.train, exp.grid);
    std::vector<int> channel_map(expected_channels);
    for (std::size_t c = 0; c < expected_channels; ++c) channel_map[c] = static_cast<int>(c);
    ClickSeries series =
        bin_to_windows(parsed.records, parsed.header, exp.grid, weights, channel_map);

    std::vector<EstimateRow> rows;
    if (exp.mode == MeasurementMode::spatial_ensemble) {
        rows.push_back(spatial_row(cfg, outcomes_from_series(series, exp.ensemble_pairs)));
    } else {
        rows = run_estimators(cfg, series);
    }

    const std::string text = format == "json" ? rows_to_json(rows) : rows_to_csv(rows);
    if (out_path.empty())
        std::cout << text;
    else
        write_text_file(out_path, text);
    return kExitOk;
}

int cmd_oracle(const std::string& kind, double mean, int fock_m, const std::string& pmf,
               const std::string& ports, const std::string& efficiencies,
               const std::string& out_path) {
    PhotonSource source = PhotonSource::coherent(0.0);
    if (kind == "coherent")
        source = PhotonSource::coherent(mean);
    else if (kind == "thermal")
        source = PhotonSource::thermal(mean);
    else if (kind == "fock")
        source = PhotonSource::fock(fock_m);
    else if (kind == "empirical") {
        std::vector<std::pair<int, double>> table;
        std::istringstream is(pmf);
        std::string entry;
        while (std::getline(is, entry, ',')) {
            const std::size_t colon = entry.find(':');
            if (colon == std::string::npos)
                throw config_error("--pmf entries must be count:probability");
            table.emplace_back(std::stoi(entry.substr(0, colon)),
                               std::stod(entry.substr(colon + 1)));
        }
        source = PhotonSource::empirical(std::move(table));
    } else {
        throw config_error("--source must be coherent, thermal, fock or empirical");
    }

    SplitterSpec splitter;
    {
        std::istringstream is(ports);
        std::string tok;
        while (std::getline(is, tok, ',')) splitter.port_probs.push_back(std::stod(tok));
    }
    std::vector<DetectorSpec> detectors;
    {
        std::istringstream is(efficiencies);
        std::string tok;
        while (std::getline(is, tok, ','))
            detectors.push_back({std::stod(tok), 0.0, std::string(1, static_cast<char>('a' + detectors.size()))});
    }
    if (detectors.empty())
        detectors.assign(splitter.port_probs.size(), DetectorSpec{1.0, 0.0, ""});

    const OracleResult oracle = oracle_click_probs(source, splitter, detectors);
    nlohmann::json j;
    j["click_probs"] = oracle.click_probs;
    j["pair_coincidence"] = oracle.pair_coincidence;
    if (!std::isnan(oracle.g2_click)) j["g2_click"] = oracle.g2_click;
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        write_text_file(out_path, text);
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& out_path,
              std::int64_t seed_override, int threads_override) {
    RunConfig cfg = load_run_config(config_path);
    if (seed_override >= 0) cfg.experiment.seed = static_cast<std::uint64_t>(seed_override);
    if (threads_override > 0) cfg.threads = threads_override;
    if (cfg.sweep_axis.empty())
        throw config_error("sweep requires sweep.axis and sweep.values in the config");

    std::ostringstream os;
    os << "axis,value,R_I,N,M,g2_temporal,g2_temporal_stderr,g2_on,g2_on_stderr,"
          "g2_temporal_x_ri,coincidences,singles_a,singles_b\n";
    os.precision(12);
    for (double value : cfg.sweep_values) {
        ExperimentConfig exp = apply_sweep_value(cfg, cfg.sweep_axis, value);
        const ClickSeries series = simulate(exp, cfg.threads);
        os << cfg.sweep_axis << ',' << value << ',' << series.intensity_ratio << ','
           << series.window_count() << ',' << series.on_count << ',';
        try {
            const CorrelationEstimate g2t =
                g2_temporal(series.clicks[0], series.clicks[1], cfg.bootstrap);
            const CorrelationEstimate g2on =
                g2_on_window(series.clicks[0], series.clicks[1], series.mask, cfg.bootstrap);
            os << g2t.value << ',' << g2t.std_error << ',' << g2on.value << ','
               << g2on.std_error << ',' << g2t.value * series.intensity_ratio << ','
               << g2t.coincidences << ',' << g2t.singles[0] << ',' << g2t.singles[1] << '\n';
        } catch (const undefined_estimate&) {
            os << "NA,NA,NA,NA,NA,0,0,0\n";
        }
    }
    if (out_path.empty())
        std::cout << os.str();
    else
        write_text_file(out_path, os.str());
    return kExitOk;
}

int cmd_gen_timetags(const std::string& input_path, const std::string& output_path,
                     std::uint64_t resolution_ps, std::uint32_t channels) {
    std::ifstream is(input_path, std::ios::binary);
    if (!is) throw config_error("cannot open input file: " + input_path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                    std::istreambuf_iterator<char>());

    const bool is_binary =
        bytes.size() >= 4 && std::equal(kTimeTagMagic, kTimeTagMagic + 4, bytes.begin());
    if (is_binary) {
        const ParsedTimeTags parsed = parse_binary(bytes);
        std::ostringstream os;
        write_csv(parsed.records, os);
        write_text_file(output_path, os.str());
    } else {
        const std::string text(bytes.begin(), bytes.end());
        const std::vector<TimeTagRecord> records = parse_csv(text);
        std::uint32_t channel_count = channels;
        if (channel_count == 0) {
            for (const TimeTagRecord& r : records)
                channel_count = std::max<std::uint32_t>(channel_count, r.channel + 1u);
            if (channel_count == 0) channel_count = 1;
        }
        write_binary_file(records, TimeTagHeader{1, resolution_ps, channel_count}, output_path);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pulsed-light HBT click simulation and coherence analysis"};
    app.require_subcommand(1);

    std::string config_path, input_path, out_path, out_prefix, format = "csv";
    std::int64_t seed_override = -1;
    int threads_override = 0;
    std::vector<std::string> estimator_flags;

    auto* sim = app.add_subcommand("simulate", "Run an experiment; write time tags + summary");
    sim->add_option("--config", config_path, "Run configuration file")->required();
    sim->add_option("--out", out_prefix, "Output path prefix (.ttg2/.json appended)");
    sim->add_option("--seed", seed_override, "Override the config seed");
    sim->add_option("--threads", threads_override, "Worker thread count");

    auto* ana = app.add_subcommand("analyze", "Estimate coherence from a time-tag file");
    ana->add_option("--config", config_path, "Run configuration file")->required();
    ana->add_option("--input", input_path, "TTG2 time-tag file")->required();
    ana->add_option("--out", out_path, "Output file (stdout if omitted)");
    ana->add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    ana->add_option("--estimators", estimator_flags, "Estimator tokens (overrides config)");

    std::string oracle_kind = "coherent", oracle_pmf, oracle_ports = "0.5,0.5", oracle_eff;
    double oracle_mean = 1.0;
    int oracle_m = 1;
    auto* orc = app.add_subcommand("oracle", "Exact click probabilities and g2_click");
    orc->add_option("--source", oracle_kind, "coherent|thermal|fock|empirical");
    orc->add_option("--mean", oracle_mean, "Mean photon number (coherent/thermal)");
    orc->add_option("--m", oracle_m, "Photon number (fock)");
    orc->add_option("--pmf", oracle_pmf, "count:prob,... (empirical)");
    orc->add_option("--ports", oracle_ports, "Splitter port probabilities");
    orc->add_option("--efficiency", oracle_eff, "Detector efficiencies (default all 1)");
    orc->add_option("--out", out_path, "Output file (stdout if omitted)");

    auto* swp = app.add_subcommand("sweep", "One analyzed row per sweep-axis value");
    swp->add_option("--config", config_path, "Run configuration file with sweep.axis")->required();
    swp->add_option("--out", out_path, "Output CSV (stdout if omitted)");
    swp->add_option("--seed", seed_override, "Override the config seed");
    swp->add_option("--threads", threads_override, "Worker thread count");

    std::uint64_t gen_resolution = 1;
    std::uint32_t gen_channels = 0;
    auto* gen = app.add_subcommand("gen-timetags", "Convert CSV <-> TTG2 binary");
    gen->add_option("--input", input_path, "Input file (format sniffed)")->required();
    gen->add_option("--output", out_path, "Output file")->required();
    gen->add_option("--resolution-ps", gen_resolution, "Tick resolution for CSV -> binary");
    gen->add_option("--channels", gen_channels, "Channel count for CSV -> binary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (sim->parsed())
            return cmd_simulate(config_path, out_prefix, seed_override, threads_override);
        if (ana->parsed())
            return cmd_analyze(config_path, input_path, out_path, format, estimator_flags);
        if (orc->parsed())
            return cmd_oracle(oracle_kind, oracle_mean, oracle_m, oracle_pmf, oracle_ports,
                              oracle_eff, out_path);
        if (swp->parsed()) return cmd_sweep(config_path, out_path, seed_override, threads_override);
        if (gen->parsed()) return cmd_gen_timetags(input_path, out_path, gen_resolution, gen_channels);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const parse_error& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitConfig;
}
