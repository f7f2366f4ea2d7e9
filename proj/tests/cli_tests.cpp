// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "pulseg2/analysis.hpp"
#include "pulseg2/runconfig.hpp"
#include "pulseg2/timetag.hpp"

namespace fs = std::filesystem;
using namespace pulseg2;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

fs::path work_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "pulseg2_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    os << text;
}

CmdResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path out = work_dir() / ("out" + std::to_string(counter) + ".txt");
    const fs::path err = work_dir() / ("err" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd = std::string(PULSEG2_CLI_PATH) + " " + args + " > " + out.string() +
                            " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    CmdResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out);
    result.err = slurp(err);
    return result;
}

const std::string kBaseConfig =
    "source.kind = thermal\n"
    "source.mean = 0.4\n"
    "train.shape = rect\n"
    "train.pulse_width = 1e-9\n"
    "train.period = 5e-9\n"
    "grid.window_duration = 1e-9\n"
    "grid.window_count = 50000\n"
    "seed = 31415\n";

fs::path write_config(const std::string& name, const std::string& text) {
    const fs::path p = work_dir() / name;
    spit(p, text);
    return p;
}

/// Split a CSV body into rows of fields.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        rows.push_back(fields);
    }
    return rows;
}

}  // namespace

TEST_CASE("simulate writes time tags and a summary") {
    const fs::path cfg = write_config("base.cfg", kBaseConfig);
    const fs::path prefix = work_dir() / "run1";
    const CmdResult r = run_cli("simulate --config " + cfg.string() + " --out " + prefix.string());
    REQUIRE(r.exit_code == 0);
    REQUIRE(fs::exists(prefix.string() + ".ttg2"));
    REQUIRE(fs::exists(prefix.string() + ".json"));

    const nlohmann::json summary = nlohmann::json::parse(slurp(prefix.string() + ".json"));
    CHECK(summary["window_count"] == 50000);
    CHECK(summary["on_count"] == 10000);
    CHECK(summary["intensity_ratio"] == doctest::Approx(0.2));
    CHECK(summary["seed"] == 31415);
    CHECK(summary["clicks"].size() == 2);
    CHECK(summary["mode"] == "temporal");
}

TEST_CASE("config errors exit with code 2 and name the field") {
    CHECK(run_cli("simulate --config /nonexistent/path.cfg").exit_code == 2);

    const fs::path bad =
        write_config("bad.cfg", kBaseConfig + "train.photons_per_pulse = -1\n");
    const CmdResult r = run_cli("simulate --config " + bad.string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("photons_per_pulse") != std::string::npos);

    const fs::path unknown = write_config("unknown.cfg", kBaseConfig + "no.such.key = 1\n");
    CHECK(run_cli("simulate --config " + unknown.string()).exit_code == 2);
}

TEST_CASE("analyze reproduces the eq-12 relation from the file") {
    const fs::path cfg = write_config("base2.cfg", kBaseConfig);
    const fs::path prefix = work_dir() / "run2";
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + prefix.string()).exit_code ==
            0);

    const CmdResult r =
        run_cli("analyze --config " + cfg.string() + " --input " + prefix.string() + ".ttg2");
    REQUIRE(r.exit_code == 0);
    const auto rows = csv_rows(r.out);
    REQUIRE(rows.size() >= 4);  // header + g2_temporal + product + g2_on
    CHECK(rows[0][0] == "estimator");
    CHECK(rows[1][0] == "g2_temporal");
    CHECK(rows[2][0] == "g2_temporal_x_ri");
    CHECK(rows[3][0] == "g2_on");
    const double g2t = std::stod(rows[1][1]);
    const double product = std::stod(rows[2][1]);
    const double g2on = std::stod(rows[3][1]);
    const double r_i = std::stod(rows[1][6]);
    CHECK(r_i == doctest::Approx(0.2));
    CHECK(product == doctest::Approx(g2t * r_i).epsilon(1e-9));
    CHECK(product == doctest::Approx(g2on).epsilon(1e-9));  // dark-free identity
}

TEST_CASE("analyze equals the in-process pipeline exactly") {
    const fs::path cfg_path = write_config("base3.cfg", kBaseConfig);
    const fs::path prefix = work_dir() / "run3";
    REQUIRE(run_cli("simulate --config " + cfg_path.string() + " --out " + prefix.string())
                .exit_code == 0);
    const CmdResult r = run_cli("analyze --config " + cfg_path.string() + " --input " +
                                prefix.string() + ".ttg2");
    REQUIRE(r.exit_code == 0);

    const RunConfig cfg = load_run_config(cfg_path.string());
    const ClickSeries series = simulate(cfg.experiment, cfg.threads);
    const std::string expected = rows_to_csv(run_estimators(cfg, series));
    CHECK(r.out == expected);
}

TEST_CASE("analyze handles empty files and channel mismatches") {
    // a file with zero records: valid header, nothing else
    const fs::path empty = work_dir() / "empty.ttg2";
    write_binary_file({}, TimeTagHeader{1, 1, 2}, empty.string());
    const fs::path cfg = write_config("base4.cfg", kBaseConfig);
    const CmdResult r =
        run_cli("analyze --config " + cfg.string() + " --input " + empty.string());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("NA") != std::string::npos);

    // config expecting three detectors against a two-channel file
    const fs::path three = write_config("three.cfg", kBaseConfig +
                                                         "detector.0.efficiency = 1\n"
                                                         "detector.1.efficiency = 1\n"
                                                         "detector.2.efficiency = 1\n"
                                                         "splitter.ports = 0.4,0.3,0.3\n");
    CHECK(run_cli("analyze --config " + three.string() + " --input " + empty.string()).exit_code ==
          2);

    // malformed file: runtime error, exit 1
    const fs::path garbage = work_dir() / "garbage.ttg2";
    spit(garbage, "XXXXnotatimetagfile");
    CHECK(run_cli("analyze --config " + cfg.string() + " --input " + garbage.string()).exit_code ==
          1);
}

TEST_CASE("same config and seed give byte-identical outputs at any thread count") {
    const fs::path cfg = write_config("det.cfg", kBaseConfig);
    const fs::path a = work_dir() / "det_a";
    const fs::path b = work_dir() / "det_b";
    const fs::path c = work_dir() / "det_c";
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + a.string()).exit_code == 0);
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + b.string()).exit_code == 0);
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --threads 4 --out " + c.string())
                .exit_code == 0);
    CHECK(slurp(a.string() + ".ttg2") == slurp(b.string() + ".ttg2"));
    CHECK(slurp(a.string() + ".ttg2") == slurp(c.string() + ".ttg2"));
    // summaries agree apart from the embedded output path
    CHECK(nlohmann::json::parse(slurp(a.string() + ".json"))["clicks"] ==
          nlohmann::json::parse(slurp(c.string() + ".json"))["clicks"]);

    // a different seed changes the data
    const fs::path d = work_dir() / "det_d";
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --seed 999 --out " + d.string())
                .exit_code == 0);
    CHECK(slurp(a.string() + ".ttg2") != slurp(d.string() + ".ttg2"));
}

TEST_CASE("oracle emits exact closed-form values") {
    CmdResult r = run_cli("oracle --source thermal --mean 2 --ports 0.5,0.5 --efficiency 1,1");
    REQUIRE(r.exit_code == 0);
    nlohmann::json j = nlohmann::json::parse(r.out);
    CHECK(j["g2_click"].get<double>() == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(j["click_probs"][0].get<double>() == doctest::Approx(0.5).epsilon(1e-12));

    r = run_cli("oracle --source coherent --mean 0.7");
    REQUIRE(r.exit_code == 0);
    j = nlohmann::json::parse(r.out);
    CHECK(j["g2_click"].get<double>() == doctest::Approx(1.0).epsilon(1e-11));

    r = run_cli("oracle --source fock --m 1");
    REQUIRE(r.exit_code == 0);
    j = nlohmann::json::parse(r.out);
    CHECK(j["pair_coincidence"][0][1].get<double>() == 0.0);
}

TEST_CASE("sweep emits one row per axis value with exact R_I") {
    const fs::path cfg = write_config(
        "sweep.cfg",
        "source.kind = thermal\n"
        "source.mean = 0.1\n"
        "train.shape = rect\n"
        "train.pulse_width = 1e-9\n"
        "train.period = 80e-9\n"
        "grid.window_duration = 1e-9\n"
        "grid.window_count = 160000\n"
        "seed = 7\n"
        "sweep.axis = pulse_width\n"
        "sweep.values = 1e-9,2e-9,4e-9,8e-9\n");
    const CmdResult r = run_cli("sweep --config " + cfg.string());
    REQUIRE(r.exit_code == 0);
    const auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 5);
    CHECK(std::stod(rows[1][2]) == doctest::Approx(1.0 / 80).epsilon(1e-9));
    CHECK(std::stod(rows[2][2]) == doctest::Approx(2.0 / 80).epsilon(1e-9));
    CHECK(std::stod(rows[3][2]) == doctest::Approx(4.0 / 80).epsilon(1e-9));
    CHECK(std::stod(rows[4][2]) == doctest::Approx(8.0 / 80).epsilon(1e-9));

    // no sweep axis in the config: config error
    const fs::path plain = write_config("plain.cfg", kBaseConfig);
    CHECK(run_cli("sweep --config " + plain.string()).exit_code == 2);

    // single axis value: single row
    const fs::path single = write_config("single.cfg", kBaseConfig +
                                                           "sweep.axis = efficiency\n"
                                                           "sweep.values = 0.5\n");
    const CmdResult s = run_cli("sweep --config " + single.string());
    REQUIRE(s.exit_code == 0);
    CHECK(csv_rows(s.out).size() == 2);

    // empty value list: config error
    const fs::path empty = write_config("empty.cfg", kBaseConfig +
                                                         "sweep.axis = efficiency\n"
                                                         "sweep.values = \n");
    CHECK(run_cli("sweep --config " + empty.string()).exit_code == 2);
}

TEST_CASE("gen-timetags converts both directions losslessly") {
    const std::string csv_text = "timestamp_ps,channel\n500,0\n1500,1\n1500,0\n2500,1\n";
    const fs::path csv_in = work_dir() / "tags.csv";
    spit(csv_in, csv_text);

    const fs::path bin = work_dir() / "tags.ttg2";
    REQUIRE(run_cli("gen-timetags --input " + csv_in.string() + " --output " + bin.string())
                .exit_code == 0);
    const ParsedTimeTags parsed = parse_binary_file(bin.string());
    CHECK(parsed.header.channel_count == 2);
    CHECK(parsed.records.size() == 4);

    const fs::path csv_back = work_dir() / "tags_back.csv";
    REQUIRE(run_cli("gen-timetags --input " + bin.string() + " --output " + csv_back.string())
                .exit_code == 0);
    CHECK(slurp(csv_back) == csv_text);

    const fs::path bin2 = work_dir() / "tags2.ttg2";
    REQUIRE(run_cli("gen-timetags --input " + csv_back.string() + " --output " + bin2.string())
                .exit_code == 0);
    CHECK(slurp(bin) == slurp(bin2));
}

TEST_CASE("spatial mode: simulate then analyze recovers the pooled estimate") {
    const fs::path cfg = write_config("spatial.cfg",
                                      "source.kind = thermal\n"
                                      "source.mean = 0.3\n"
                                      "train.shape = rect\n"
                                      "train.pulse_width = 1e-9\n"
                                      "train.period = 4e-9\n"
                                      "grid.window_duration = 1e-9\n"
                                      "grid.window_count = 80000\n"
                                      "mode = spatial\n"
                                      "mode.pairs = 8\n"
                                      "seed = 5150\n");
    const fs::path prefix = work_dir() / "spatial_run";
    const CmdResult sim =
        run_cli("simulate --config " + cfg.string() + " --out " + prefix.string());
    REQUIRE(sim.exit_code == 0);
    const nlohmann::json summary = nlohmann::json::parse(slurp(prefix.string() + ".json"));
    CHECK(summary["pairs"] == 8);

    const CmdResult ana = run_cli("analyze --config " + cfg.string() + " --input " +
                                  prefix.string() + ".ttg2 --format json");
    REQUIRE(ana.exit_code == 0);
    const nlohmann::json rows = nlohmann::json::parse(ana.out);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0]["estimator"] == "g2_spatial");

    // the file round trip must not change the estimate
    const RunConfig rc = load_run_config(cfg.string());
    const SpatialOutcomes outcomes = simulate_spatial(rc.experiment, rc.threads);
    const CorrelationEstimate direct = g2_spatial(outcomes, rc.bootstrap);
    CHECK(rows[0]["value"].get<double>() == doctest::Approx(direct.value).epsilon(1e-12));
}
