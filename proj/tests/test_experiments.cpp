#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "twedge/experiments.hpp"

using namespace twedge;
using Catch::Matchers::WithinAbs;

namespace {

ModelSpec small_model(SigmaName sigma, RadiusLaw law, int M, int N) {
    return {M, N, builtin_sigma(sigma, M, static_cast<double>(M) / N), std::move(law)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("table1 runner") {
    Table1Config cfg;
    cfg.model = small_model(SigmaName::Sigma1, RadiusLaw::chi_gaussian(), 40, 40);
    cfg.setting_name = "sigma1_chi";
    cfg.reps = 30;
    cfg.master_seed = 7;

    SECTION("reps = 1 gives a degenerate CDF without error") {
        Table1Config one = cfg;
        one.reps = 1;
        auto res = run_table1(one);
        REQUIRE(res.cells.size() == 9);
        for (const auto& c : res.cells) {
            REQUIRE((c.estimate == 0.0 || c.estimate == 1.0));
            REQUIRE(c.se == 0.0);
            REQUIRE(c.reps == 1);
        }
    }
    SECTION("cells are monotone in the node and carry binomial SEs") {
        auto res = run_table1(cfg);
        REQUIRE(res.cells.size() == 9);
        for (std::size_t i = 1; i < res.cells.size(); ++i)
            REQUIRE(res.cells[i].estimate >= res.cells[i - 1].estimate);
        for (const auto& c : res.cells) {
            REQUIRE(c.has_se);
            REQUIRE_THAT(c.se, WithinAbs(binomial_se(c.estimate, 30), 1e-15));
        }
    }
    SECTION("worker count changes nothing") {
        auto serial = run_table1(cfg);
        Table1Config pooled = cfg;
        pooled.workers = 3;
        auto parallel = run_table1(pooled);
        REQUIRE(serial.cells.size() == parallel.cells.size());
        for (std::size_t i = 0; i < serial.cells.size(); ++i)
            REQUIRE(serial.cells[i].estimate == parallel.cells[i].estimate);
    }
}

TEST_CASE("size and power runners") {
    auto calib = onatski_critical(60, 150, 0.05, 11, 1);

    SizeConfig scfg;
    scfg.settings = {{"sigma1_pearson", small_model(SigmaName::Sigma1, RadiusLaw::pearson_ii(), 30, 30)}};
    scfg.reps = 60;
    scfg.master_seed = 5;

    SECTION("alpha = 1 rejects everything") {
        SizeConfig degenerate = scfg;
        degenerate.alpha = 1.0;
        auto res = run_size(degenerate, calib);
        REQUIRE(res.cells.size() == 1);
        REQUIRE(res.cells[0].estimate == 1.0);
    }
    SECTION("size stays a probability and is deterministic") {
        auto a = run_size(scfg, calib);
        auto b = run_size(scfg, calib);
        REQUIRE(a.cells[0].estimate == b.cells[0].estimate);
        REQUIRE(a.cells[0].estimate >= 0.0);
        REQUIRE(a.cells[0].estimate <= 1.0);
    }
    SECTION("wrong calibration kind is rejected") {
        auto edge_cal = goe_percentiles(60, 150, {0.95}, 11, 1);
        try {
            run_size(scfg, edge_cal);
            FAIL("expected MissingCalibration");
        } catch (const Error& e) {
            REQUIRE(e.code() == "MissingCalibration");
        }
    }
    SECTION("an overwhelming spike is always detected") {
        PowerConfig pcfg;
        pcfg.settings = {{"sigma1_pearson", small_model(SigmaName::Sigma1, RadiusLaw::pearson_ii(), 30, 30)}};
        pcfg.nus = {0.0, 60.0};
        pcfg.reps = 40;
        pcfg.master_seed = 5;
        auto res = run_power(pcfg, calib);
        REQUIRE(res.cells.size() == 2);
        const auto& weak = res.cell("sigma1_pearson", "power_nu_0");
        const auto& strong = res.cell("sigma1_pearson", "power_nu_60");
        REQUIRE(strong.estimate == 1.0);
        REQUIRE(weak.estimate <= 0.4);
    }
}

TEST_CASE("rigidity runner") {
    RigidityConfig cfg;
    cfg.n_ladder = {20, 40, 80};
    cfg.reps = 40;
    cfg.master_seed = 3;
    auto res = run_rigidity(cfg);
    REQUIRE(res.cells.size() == 3 * 3 + 1);
    const auto& slope = res.cell("all", "loglog_slope");
    REQUIRE(slope.estimate < 0.0); // deviations shrink with N
    for (int N : {20, 40, 80}) {
        const auto& med = res.cell("N=" + std::to_string(N), "median_scaled");
        REQUIRE(med.estimate > 0.0);
    }
    REQUIRE_THROWS_AS(run_rigidity(RigidityConfig{.n_ladder = {100, 200}}), Error);
}

TEST_CASE("local law runner") {
    LocalLawConfig cfg;
    cfg.model = small_model(SigmaName::Identity, RadiusLaw::chi_gaussian(), 60, 60);
    auto edge = edge_params(cfg.model.spectrum, 1.0);
    cfg.z_grid = {{edge.lambda_plus, 0.2}, {edge.lambda_plus + 1.0, 1.0}};
    cfg.reps = 40;
    cfg.master_seed = 9;
    auto res = run_locallaw(cfg);
    REQUIRE(res.cells.size() == 4);
    // near-edge scaled error stays O(1); far-field absolute error is tiny
    REQUIRE(res.cells[0].estimate < 20.0);
    REQUIRE(res.cells[3].estimate < 10.0 / 60.0);
}

TEST_CASE("universality runner") {
    UniversalityConfig cfg;
    cfg.model_a = small_model(SigmaName::Sigma1, RadiusLaw::chi_gaussian(), 30, 30);
    cfg.model_b = small_model(SigmaName::Sigma1, RadiusLaw::chi_gaussian(), 30, 30);
    cfg.reps = 80;
    cfg.seed_a = 1;
    cfg.seed_b = 2;
    auto res = run_universality(cfg);
    const auto& cell = res.cells[0];
    REQUIRE(cell.statistic == "ks_distance");
    REQUIRE(cell.estimate >= 0.0);
    REQUIRE(cell.estimate <= 0.4); // same law, independent seeds: noise level

    auto rerun = run_universality(cfg);
    REQUIRE(rerun.cells[0].estimate == cell.estimate);

    UniversalityConfig bad = cfg;
    bad.model_b.N = 31;
    REQUIRE_THROWS_AS(run_universality(bad), Error);
}

TEST_CASE("CSV and summary output") {
    auto dir = std::filesystem::temp_directory_path() / "twedge_test_results";
    std::filesystem::create_directories(dir);

    Table1Config cfg;
    cfg.model = small_model(SigmaName::Sigma1, RadiusLaw::chi_gaussian(), 30, 30);
    cfg.setting_name = "sigma1_chi";
    cfg.reps = 25;
    cfg.master_seed = 77;

    auto res = run_table1(cfg);
    auto csv_path = result_filename(dir, res.experiment, res.master_seed);
    REQUIRE(csv_path.filename() == "table1_seed77.csv");
    write_csv(res, csv_path);
    std::string first = slurp(csv_path);
    REQUIRE(first.rfind("experiment,setting,statistic,estimate,se,reps,master_seed\n", 0) == 0);
    REQUIRE(first.find("table1,sigma1_chi,cdf_at_-3.90,") != std::string::npos);

    SECTION("rerun with identical config gives byte-identical CSV") {
        Table1Config again = cfg;
        again.workers = 2;
        auto res2 = run_table1(again);
        auto other = dir / "again.csv";
        write_csv(res2, other);
        REQUIRE(slurp(other) == first);
    }
    SECTION("summary echoes config") {
        auto sum_path = result_filename(dir, res.experiment, res.master_seed, "txt");
        write_summary(res, sum_path);
        std::string text = slurp(sum_path);
        REQUIRE(text.find("experiment = table1") != std::string::npos);
        REQUIRE(text.find("master_seed = 77") != std::string::npos);
        REQUIRE(text.find("lambda_plus") != std::string::npos);
    }
    std::filesystem::remove_all(dir);
}
