#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "json.hpp"

#include "cpd/errors.hpp"
#include "cpd/io.hpp"
#include "cpd/simulation.hpp"
#include "test_util.hpp"

using namespace cpd;

namespace {

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected a cpd::Error");
    return Errc::invalid_input;
}

std::string tmp_path(const std::string& name) {
    return std::string("cli_test_") + name;
}

// Runs the CLI binary, returns its exit code; stdout goes to out_path.
int run_cli(const std::string& args, const std::string& out_path,
            const std::string& env_prefix = "") {
    const std::string cmd = env_prefix + std::string(CPD_CLI_PATH) + " " +
                            args + " > " + out_path + " 2> " + out_path +
                            ".err";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("CSV round trip is value-exact") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> gauss;
    std::vector<double> values = {0.1,          -1e-17,        12345.678901234567,
                                  -9.87e100,    3.0,           0.0,
                                  1.0 / 3.0,    -2.0 / 7.0,    1e-300};
    for (int i = 0; i < 200; ++i)
        values.push_back(gauss(rng) * std::pow(10.0, i % 31 - 15));
    const std::string path = tmp_path("roundtrip.csv");
    write_series_csv(path, values, "v");
    const CsvTable table = read_csv(path);
    CHECK(table.has_header);
    const std::vector<double> back = select_column(table, "v");
    REQUIRE(back.size() == values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        CHECK(back[i] == values[i]);
}

TEST_CASE("CSV header detection and column selection") {
    const std::string path = tmp_path("header.csv");
    {
        std::ofstream out(path);
        out << "time,signal\n\n1,0.5\n2,-0.25\n\n3,0.125\n";
    }
    const CsvTable table = read_csv(path);
    CHECK(table.has_header);
    CHECK(select_column(table, "signal") ==
          std::vector<double>{0.5, -0.25, 0.125});
    CHECK(select_column(table, "1") ==
          std::vector<double>{0.5, -0.25, 0.125});
    CHECK(select_column(table, "0") == std::vector<double>{1, 2, 3});
    CHECK(code_of([&] { select_column(table, "missing"); }) ==
          Errc::invalid_input);

    const std::string headerless = tmp_path("plain.csv");
    {
        std::ofstream out(headerless);
        out << "1.5\n2.5\n-3.5\n";
    }
    const CsvTable plain = read_csv(headerless);
    CHECK_FALSE(plain.has_header);
    CHECK(select_column(plain, "0") == std::vector<double>{1.5, 2.5, -3.5});
}

TEST_CASE("CSV parse errors carry the input location") {
    const std::string path = tmp_path("bad.csv");
    {
        std::ofstream out(path);
        out << "v\n1.0\nnot_a_number\n";
    }
    CHECK(code_of([&] { read_csv(path); }) == Errc::invalid_input);
    CHECK(code_of([] { read_csv("does_not_exist.csv"); }) ==
          Errc::invalid_input);
}

TEST_CASE("cli: detect on a scenario III draw") {
    ScenarioSpec spec;
    spec.id = ScenarioId::III;
    spec.phi = -0.9;
    spec.T = 500;
    spec.k_star = 250;
    const TimeSeries x = generate_scenario(spec, 7);
    const std::string csv = tmp_path("scenario3.csv");
    write_series_csv(csv, x.values);

    const std::string out = tmp_path("detect.json");
    const int rc = run_cli("detect --input " + csv +
                               " --no-demean --mc-reps 2000 --levels 0.90,0.95",
                           out);
    CHECK(rc == 0);
    const nlohmann::json doc = nlohmann::json::parse(slurp(out));
    CHECK(doc.at("schema_version") == 1);
    CHECK(std::abs(doc.at("k_tilde").get<int>() - 250) <= 5);
    for (const char* key :
         {"k_hat", "p_common", "model_pre", "model_post", "xi2", "nuisance",
          "confidence_intervals", "loss_curve_stage1", "loss_curve_stage2",
          "mc"})
        CHECK(doc.contains(key));
    CHECK(doc.at("confidence_intervals").size() == 2);
    CHECK(doc.at("model_pre").contains("phi"));
}

TEST_CASE("cli: short input fails with exit 2") {
    const std::string csv = tmp_path("short.csv");
    {
        std::ofstream out(csv);
        for (int i = 1; i <= 10; ++i)
            out << i * 0.5 << "\n";
    }
    const int rc =
        run_cli("detect --input " + csv + " --min-segment 20", tmp_path("s.out"));
    CHECK(rc == 2);
}

TEST_CASE("cli: white noise with a fixed order 0 reports no jump, exit 3") {
    const std::string csv = tmp_path("noise.csv");
    write_series_csv(csv, testutil::noise(1.0, 400, 5));
    const std::string out = tmp_path("nojump.json");
    const int rc =
        run_cli("detect --input " + csv + " --no-demean --lag fixed:0", out);
    CHECK(rc == 3);
    const nlohmann::json doc = nlohmann::json::parse(slurp(out));
    CHECK(doc.at("error") == "no_jump");
    CHECK(doc.contains("k_tilde"));
}

TEST_CASE("cli: nested intervals on an EEG-sized series") {
    const std::vector<double> values =
        testutil::ar_splice({0.2}, {-0.8}, 1.0, 110, 85, 21);
    const std::string csv = tmp_path("eeg.csv");
    write_series_csv(csv, values);
    const std::string out = tmp_path("eeg.json");
    const int rc = run_cli("detect --input " + csv +
                               " --levels 0.70,0.80,0.90,0.95,0.99"
                               " --mc-reps 5000",
                           out);
    CHECK(rc == 0);
    const nlohmann::json doc = nlohmann::json::parse(slurp(out));
    const auto& cis = doc.at("confidence_intervals");
    REQUIRE(cis.size() == 5);
    for (std::size_t i = 1; i < cis.size(); ++i) {
        CHECK(cis[i].at("lower").get<int>() <= cis[i - 1].at("lower").get<int>());
        CHECK(cis[i].at("upper").get<int>() >= cis[i - 1].at("upper").get<int>());
    }
}

TEST_CASE("cli: spectrum writes the two curve files on the [0, pi] grid") {
    const std::string csv = tmp_path("spec_in.csv");
    write_series_csv(csv, testutil::noise(1.0, 5000, 95));
    const std::string stem = tmp_path("spec");
    const int rc = run_cli("spectrum --input " + csv + " --no-demean --output " +
                               stem,
                           tmp_path("spec.out"));
    CHECK(rc == 0);
    for (const std::string side : {"_pre.csv", "_post.csv"}) {
        const CsvTable curve = read_csv(stem + side);
        const std::vector<double> lambdas = select_column(curve, "lambda");
        const std::vector<double> f = select_column(curve, "f");
        REQUIRE(lambdas.size() == 512);
        CHECK(lambdas.front() == 0.0);
        CHECK(lambdas.back() == std::numbers::pi);
        double lo = f[0], hi = f[0];
        for (double v : f) {
            CHECK(v > 0.0);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        // white noise fit stays nearly flat
        CHECK(hi / lo < 1.2);
    }
}

TEST_CASE("cli: simulate is deterministic and matches the paper layout") {
    const std::string cmd =
        "simulate --scenario III --phi -0.9 --T 500 --kstar 166 --reps 20 "
        "--seed 1 --format csv";
    const std::string out1 = tmp_path("sim1.csv");
    const std::string out2 = tmp_path("sim2.csv");
    CHECK(run_cli(cmd, out1) == 0);
    CHECK(run_cli(cmd, out2, "CPD_THREADS=1 ") == 0);
    const std::string text = slurp(out1);
    CHECK(text == slurp(out2)); // worker count does not change the bytes
    CHECK(text.find("truth,ab_hat,ab_tilde,rmse_hat,rmse_tilde,cp90,cp95,cp99") !=
          std::string::npos);
    CHECK(text.find("166,") != std::string::npos);

    const std::string json_out = tmp_path("sim_paper.json");
    CHECK(run_cli("simulate --scenario III --phi -0.9 --T 500 --kstar 166 "
                  "--reps 20 --seed 1",
                  json_out) == 0);
    const nlohmann::json paper_doc = nlohmann::json::parse(slurp(json_out));
    CHECK(paper_doc.at("ab_tilde").get<double>() >= 0.2);
    CHECK(paper_doc.at("ab_tilde").get<double>() <= 3.0);
    CHECK(paper_doc.at("rmse_tilde").get<double>() >=
          paper_doc.at("ab_tilde").get<double>());

    const int rc = run_cli(
        "simulate --scenario III --phi -0.9 --T 500 --kstar 166 --reps 1 "
        "--seed 3 --levels 0.90 --mc-reps 1000",
        tmp_path("sim3.json"));
    CHECK(rc == 0);
    const nlohmann::json doc =
        nlohmann::json::parse(slurp(tmp_path("sim3.json")));
    const double cp = doc.at("coverage").at("0.9").get<double>();
    CHECK((cp == 0.0 || cp == 1.0));
}

TEST_CASE("cli: simulate rejects a bad spec with exit 2") {
    CHECK(run_cli("simulate --scenario I --T 500 --reps 2",
                  tmp_path("badspec.out")) == 2);
    CHECK(run_cli("simulate --scenario VII --phi 0.5 --reps 2",
                  tmp_path("badspec2.out")) == 2);
}

TEST_CASE("cli: detect csv format emits one summary row") {
    ScenarioSpec spec;
    spec.id = ScenarioId::II;
    spec.theta = -0.9;
    spec.phi = 0.5;
    const TimeSeries x = generate_scenario(spec, 31);
    const std::string csv = tmp_path("detect_csv_in.csv");
    write_series_csv(csv, x.values);
    const std::string out = tmp_path("detect_row.csv");
    const int rc = run_cli("detect --input " + csv +
                               " --no-demean --mc-reps 2000 --levels 0.95 "
                               "--format csv",
                           out);
    CHECK(rc == 0);
    const std::string text = slurp(out);
    CHECK(text.find("k_hat,k_tilde,p_common,xi2,ci95_lower,ci95_upper") !=
          std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("cli: quantiles defaults, symmetry and truncation diagnostic") {
    const std::string out = tmp_path("quant.json");
    const int rc =
        run_cli("quantiles --params 1,1,1,1 --mc-reps 5000 --probs 0.5", out);
    CHECK(rc == 0);
    nlohmann::json doc = nlohmann::json::parse(slurp(out));
    CHECK(doc.at("schema_version") == 1);
    const auto probs = doc.at("probs").get<std::vector<double>>();
    for (double p : default_probs())
        CHECK(std::count_if(probs.begin(), probs.end(), [&](double q) {
                  return std::abs(q - p) < 1e-12;
              }) == 1);
    const auto quants = doc.at("quantiles").get<std::vector<double>>();
    const auto median_at = std::find(probs.begin(), probs.end(), 0.5);
    REQUIRE(median_at != probs.end());
    CHECK(std::abs(quants[median_at - probs.begin()]) <= 0.5);
    CHECK(doc.at("truncation_warning") == false);

    // deliberately tiny grid: warning is embedded, exit stays 0
    const int rc2 = run_cli(
        "quantiles --params 1,1,1,1 --mc-R 1 --mc-delta 0.01 --mc-reps 1000",
        out);
    CHECK(rc2 == 0);
    doc = nlohmann::json::parse(slurp(out));
    CHECK(doc.at("truncation_warning") == true);
}
