// Acceptance suite: one line per criterion, PASS/FAIL, nonzero exit on any
// failure. Every tolerance is pinned here in code. Heavy Monte-Carlo work
// parallelizes over replicate-indexed streams, so worker count cannot change
// any number printed below.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "twedge/twedge.hpp"

using namespace twedge;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
int g_workers = 1;

void report(int criterion, bool pass, const std::string& what, const std::string& detail) {
    std::printf("%s  criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, what.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

ModelSpec model_of(SigmaName sigma, RadiusLaw law, int M, int N) {
    return {M, N, builtin_sigma(sigma, M, static_cast<double>(M) / N), std::move(law)};
}

// --- 1: closed-form identity edge quantities
void criterion1() {
    double t0 = now_s();
    std::vector<double> phis = {0.25, 1.0, 4.0};
    std::mt19937_64 gen(2026);
    std::uniform_real_distribution<double> dist(0.05, 20.0);
    for (int k = 0; k < 10; ++k) phis.push_back(dist(gen));
    auto identity = make_population_spectrum({{1.0, 1.0}});
    double worst = 0.0;
    for (double phi : phis) {
        auto e = edge_params(identity, phi);
        double rt = std::sqrt(phi);
        worst = std::max(worst, std::fabs(e.c - 1.0 / (1.0 + rt)));
        worst = std::max(worst, std::fabs(e.lambda_plus - (1.0 + rt) * (1.0 + rt)));
        worst = std::max(worst,
                         std::fabs(e.gamma - std::pow(phi, 1.0 / 6.0) / std::pow(1.0 + rt, 4.0 / 3.0)));
    }
    double dt = now_s() - t0;
    char detail[128];
    std::snprintf(detail, sizeof detail, "worst abs error %.2e vs 1e-9, %.2fs vs 1s", worst, dt);
    report(1, worst <= 1e-9 && dt < 1.0, "closed-form identity edge for 13 phi values", detail);
}

// --- 2: solver residuals on a 200-point grid for three spectra
void criterion2() {
    double t0 = now_s();
    auto identity = make_population_spectrum({{1.0, 1.0}});
    auto sigma1 = builtin_sigma(SigmaName::Sigma1, 200, 1.0);
    auto sigma2 = builtin_sigma(SigmaName::Sigma2, 200, 1.0);
    double worst_res = 0.0, worst_closed = 0.0;
    int points = 0;
    for (const auto& spectrum : {identity, sigma1, sigma2}) {
        auto edge = edge_params(spectrum, 1.0);
        // 40 energies x 5 resolutions = 200 points per spectrum
        for (int i = 0; i < 40; ++i) {
            double E = 0.05 + (edge.lambda_plus + 2.0) * i / 39.0;
            for (double eta : {1.0, 0.3, 0.1, 0.05, 0.01}) {
                auto s = solve_m({E, eta}, spectrum, 1.0);
                worst_res = std::max(worst_res, s.residual);
                ++points;
            }
        }
    }
    // identity closed form at the same style of grid
    for (int i = 0; i < 40; ++i) {
        double E = 0.05 + 6.0 * i / 39.0;
        for (double eta : {1.0, 0.3, 0.1, 0.05, 0.01}) {
            std::complex<double> z(E, eta);
            auto s = solve_m({E, eta}, identity, 1.0);
            std::complex<double> disc = std::sqrt(z * z - 4.0 * z);
            std::complex<double> r1 = (-z + disc) / (2.0 * z);
            std::complex<double> r2 = (-z - disc) / (2.0 * z);
            std::complex<double> closed = r1.imag() > 0 ? r1 : r2;
            worst_closed = std::max(worst_closed, std::abs(s.m - closed));
        }
    }
    double dt = now_s() - t0;
    char detail[160];
    std::snprintf(detail, sizeof detail,
                  "%d points, worst residual %.2e vs 1e-10, closed-form gap %.2e vs 1e-9, %.2fs vs 5s",
                  points, worst_res, worst_closed, dt);
    report(2, worst_res <= 1e-10 && worst_closed <= 1e-9 && dt < 5.0,
           "solver residuals on identity/two-atom/spiked spectra", detail);
}

// --- 3: scaling covariance of (c, lambda_plus, gamma) and exact statistic invariance
void criterion3() {
    auto base_spec = make_population_spectrum({{2.0, 0.5}, {1.0, 0.5}});
    auto base = edge_params(base_spec, 1.0);
    double worst_rel = 0.0;
    for (double a : {0.5, 3.0}) {
        auto scaled = edge_params(base_spec.scaled(a), 1.0);
        worst_rel = std::max(worst_rel, std::fabs(scaled.c - base.c / a) / (base.c / a));
        worst_rel = std::max(worst_rel,
                             std::fabs(scaled.lambda_plus - a * base.lambda_plus) / (a * base.lambda_plus));
        worst_rel = std::max(worst_rel, std::fabs(scaled.gamma - base.gamma / a) / (base.gamma / a));
    }
    // rescaled statistic invariance on synthetic lambda_1 inputs
    double worst_inv = 0.0;
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> lam(5.0, 9.0);
    for (double a : {0.5, 3.0}) {
        auto scaled = edge_params(base_spec.scaled(a), 1.0);
        for (int k = 0; k < 50; ++k) {
            double l1 = lam(gen);
            double r0 = rescale_largest(l1, base, 200);
            double r1 = rescale_largest(a * l1, scaled, 200);
            worst_inv = std::max(worst_inv, std::fabs(r0 - r1));
        }
    }
    char detail[128];
    std::snprintf(detail, sizeof detail, "worst rel %.2e vs 1e-8, worst invariance gap %.2e vs 1e-10",
                  worst_rel, worst_inv);
    report(3, worst_rel <= 1e-8 && worst_inv <= 1e-10,
           "edge quantities transform as (1/a, a, 1/a) under atom scaling", detail);
}

// --- 4: Table-1 style reproduction at desk scale
void criterion4() {
    double t0 = now_s();
    Table1Config cfg;
    cfg.model = model_of(SigmaName::Sigma1, RadiusLaw::chi_gaussian(), 200, 200);
    cfg.setting_name = "sigma1_chi";
    cfg.reps = 2000;
    cfg.master_seed = 1;
    cfg.workers = g_workers;
    auto res = run_table1(cfg);
    bool pass = true;
    std::string worst_cell;
    double worst_excess = -1.0;
    for (std::size_t i = 0; i < res.cells.size(); ++i) {
        double p = tw1_table().points[i].second;
        double tol = 3.0 * std::sqrt(p * (1.0 - p) / 2000.0) + 0.01;
        double diff = std::fabs(res.cells[i].estimate - p);
        if (diff - tol > worst_excess) {
            worst_excess = diff - tol;
            char buf[96];
            std::snprintf(buf, sizeof buf, "p=%.2f est=%.4f tol=%.4f", p, res.cells[i].estimate, tol);
            worst_cell = buf;
        }
        if (diff > tol) pass = false;
    }
    double dt = now_s() - t0;
    char detail[192];
    std::snprintf(detail, sizeof detail, "tightest cell: %s, margin %+0.4f, %.0fs vs 600s",
                  worst_cell.c_str(), -worst_excess, dt);
    report(4, pass && dt < 600.0, "empirical CDF matches the TW column at 200x200, 2000 reps", detail);
}

// --- 5: universality proxy via two-sample KS distances
void criterion5() {
    auto make_cfg = [&](RadiusLaw law_b, std::uint64_t seed_b) {
        UniversalityConfig cfg;
        cfg.model_a = model_of(SigmaName::Sigma1, RadiusLaw::chi_gaussian(), 200, 200);
        cfg.model_b = model_of(SigmaName::Sigma1, std::move(law_b), 200, 200);
        cfg.reps = 2000;
        cfg.seed_a = 1;
        cfg.seed_b = seed_b;
        cfg.workers = g_workers;
        return cfg;
    };
    double ks_pearson = run_universality(make_cfg(RadiusLaw::pearson_ii(), 2)).cells[0].estimate;
    double ks_d1 = run_universality(make_cfg(RadiusLaw::discrete_d1(), 3)).cells[0].estimate;
    double ks_null = run_universality(make_cfg(RadiusLaw::chi_gaussian(), 4)).cells[0].estimate;
    bool pass = ks_pearson <= 0.06 && ks_d1 <= 0.06 && ks_null <= 0.043;
    char detail[160];
    std::snprintf(detail, sizeof detail,
                  "KS chi/pearson2 %.4f vs 0.06, chi/d1 %.4f vs 0.06, chi/chi %.4f vs 0.043",
                  ks_pearson, ks_d1, ks_null);
    report(5, pass, "rescaled lambda_1 distributions agree across radius laws", detail);
}

// --- 6: rigidity ladder
void criterion6() {
    RigidityConfig cfg;
    cfg.sigma = SigmaName::Identity;
    cfg.radius = RadiusLaw::chi_gaussian();
    cfg.n_ladder = {100, 200, 400};
    cfg.reps = 500;
    cfg.master_seed = 1;
    cfg.workers = g_workers;
    auto res = run_rigidity(cfg);
    double slope = res.cell("all", "loglog_slope").estimate;
    double lo = 1e300, hi = 0.0;
    for (int N : cfg.n_ladder) {
        double med = res.cell("N=" + std::to_string(N), "median_scaled").estimate;
        lo = std::min(lo, med);
        hi = std::max(hi, med);
    }
    bool pass = slope >= -0.85 && slope <= -0.50 && hi / lo <= 3.0 && lo >= 0.2 && hi <= 5.0;
    char detail[160];
    std::snprintf(detail, sizeof detail,
                  "slope %.3f vs [-0.85,-0.50], scaled medians [%.2f, %.2f] vs [0.2, 5], spread %.2fx vs 3x",
                  slope, lo, hi, hi / lo);
    report(6, pass, "median |lambda_1 - lambda_plus| scales like N^(-2/3)", detail);
}

// --- 7: local law at the edge
void criterion7() {
    LocalLawConfig cfg;
    cfg.model = model_of(SigmaName::Identity, RadiusLaw::chi_gaussian(), 400, 400);
    auto edge = edge_params(cfg.model.spectrum, 1.0);
    cfg.z_grid = {{edge.lambda_plus, 0.05}, {edge.lambda_plus, 0.025}};
    cfg.reps = 200;
    cfg.master_seed = 1;
    cfg.workers = g_workers;
    auto res = run_locallaw(cfg);
    double med_eta = res.cells[0].estimate;      // (N eta)|m_N - m| at eta = 0.05
    double med_half = res.cells[2].estimate;     // same at eta = 0.025
    bool pass = med_eta <= 5.0 && med_half <= 2.0 * med_eta;
    char detail[128];
    std::snprintf(detail, sizeof detail, "median (N eta)|m_N - m| = %.3f vs 5, half-eta %.3f vs 2x",
                  med_eta, med_half);
    report(7, pass, "empirical Stieltjes transform tracks m(z) at the edge", detail);
}

// --- 8 and 9 share the GOE calibration
void criteria8_9_10(const fs::path& cache_dir) {
    // 10a/10b: two calibrations at dim 500, 1e4 reps
    auto tw_a = goe_percentiles(500, 10000, {0.10, 0.50, 0.90, 0.95}, 1, g_workers);
    auto tw_b = goe_percentiles(500, 10000, {0.10, 0.50, 0.90, 0.95}, 2, g_workers);
    double med = tw_a.value_at(0.50);
    double p95_gap = std::fabs(tw_a.value_at(0.95) - tw_b.value_at(0.95));
    bool pass10 = med >= -1.45 && med <= -1.09 && p95_gap <= 0.15;
    char d10[128];
    std::snprintf(d10, sizeof d10, "median %.4f vs [-1.45,-1.09], two-seed p95 gap %.4f vs 0.15",
                  med, p95_gap);

    auto cal = onatski_critical(500, 10000, 0.05, 1, g_workers);
    save_calibration(cal, calibration_cache_path(cache_dir, StatisticKind::OnatskiRatio, 500, 10000, 1, 0.05));
    double crit = cal.value_at(0.95);

    // 8: sizes at the calibrated critical value
    SizeConfig scfg;
    scfg.settings = {{"sigma1_pearson2", model_of(SigmaName::Sigma1, RadiusLaw::pearson_ii(), 100, 100)},
                     {"sigma2_gammaexp", model_of(SigmaName::Sigma2, RadiusLaw::gamma_double_exp(), 100, 100)}};
    scfg.reps = 2000;
    scfg.alpha = 0.05;
    scfg.master_seed = 1;
    scfg.workers = g_workers;
    auto sizes = run_size(scfg, cal);
    double size1 = sizes.cell("sigma1_pearson2", "size").estimate;
    double size2 = sizes.cell("sigma2_gammaexp", "size").estimate;
    bool pass8 = size1 >= 0.03 && size1 <= 0.08 && size2 >= 0.03 && size2 <= 0.09;
    char d8[160];
    std::snprintf(d8, sizeof d8, "crit %.3f; sizes %.4f vs [0.03,0.08], %.4f vs [0.03,0.09]",
                  crit, size1, size2);
    report(8, pass8, "null rejection rates at the GOE-calibrated critical value", d8);

    // 9: powers under the rank-one alternative
    PowerConfig pcfg;
    pcfg.settings = {{"sigma1_pearson2", model_of(SigmaName::Sigma1, RadiusLaw::pearson_ii(), 100, 100)}};
    pcfg.nus = {0.5, 4.0, 6.0};
    pcfg.reps = 1000;
    pcfg.alpha = 0.05;
    pcfg.master_seed = 1;
    pcfg.workers = g_workers;
    auto powers = run_power(pcfg, cal);
    double p05 = powers.cell("sigma1_pearson2", "power_nu_0.5").estimate;
    double p4 = powers.cell("sigma1_pearson2", "power_nu_4").estimate;
    double p6 = powers.cell("sigma1_pearson2", "power_nu_6").estimate;
    bool pass9 = p4 >= 0.80 && p6 >= 0.95 && p05 <= 0.10;
    char d9[128];
    std::snprintf(d9, sizeof d9, "power %.4f@nu=4 vs >=0.80, %.4f@nu=6 vs >=0.95, %.4f@nu=0.5 vs <=0.10",
                  p4, p6, p05);
    report(9, pass9, "detection power under the spiked alternative", d9);

    report(10, pass10, "GOE edge calibration matches the TW reference", d10);
}

// --- 11: bit-identical reruns, worker invariance
void criterion11(const fs::path& dir) {
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    Table1Config cfg;
    cfg.model = model_of(SigmaName::Sigma1, RadiusLaw::chi_gaussian(), 60, 60);
    cfg.setting_name = "sigma1_chi";
    cfg.reps = 200;
    cfg.master_seed = 17;
    cfg.workers = 1;
    auto res1 = run_table1(cfg);
    write_csv(res1, dir / "rerun_a.csv");
    auto res2 = run_table1(cfg);
    write_csv(res2, dir / "rerun_b.csv");
    cfg.workers = 4;
    auto res3 = run_table1(cfg);
    write_csv(res3, dir / "rerun_c.csv");

    RigidityConfig rcfg;
    rcfg.n_ladder = {40, 80, 160};
    rcfg.reps = 100;
    rcfg.master_seed = 23;
    rcfg.workers = 1;
    auto rig1 = run_rigidity(rcfg);
    write_csv(rig1, dir / "rig_a.csv");
    rcfg.workers = 3;
    auto rig2 = run_rigidity(rcfg);
    write_csv(rig2, dir / "rig_b.csv");

    bool same_seed = slurp(dir / "rerun_a.csv") == slurp(dir / "rerun_b.csv");
    bool same_workers = slurp(dir / "rerun_a.csv") == slurp(dir / "rerun_c.csv");
    bool rig_same = slurp(dir / "rig_a.csv") == slurp(dir / "rig_b.csv");
    char detail[128];
    std::snprintf(detail, sizeof detail, "rerun identical: %s, workers 1 vs 4 identical: %s, rigidity 1 vs 3: %s",
                  same_seed ? "yes" : "no", same_workers ? "yes" : "no", rig_same ? "yes" : "no");
    report(11, same_seed && same_workers && rig_same,
           "experiments rerun bit-identically; worker count changes nothing", detail);
}

} // namespace

int main() {
    g_workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    auto dir = fs::temp_directory_path() / "twedge_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::printf("acceptance suite (workers = %d)\n", g_workers);

    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criteria8_9_10(dir);
    criterion11(dir);

    std::printf("%s: %d criterion failure(s)\n", g_failures == 0 ? "OK" : "NOT OK", g_failures);
    return g_failures == 0 ? 0 : 1;
}
