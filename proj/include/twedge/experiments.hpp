#pragma once

#include <cinttypes>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "twedge/errors.hpp"
#include "twedge/model.hpp"
#include "twedge/mp_law.hpp"
#include "twedge/parallel.hpp"
#include "twedge/rng.hpp"
#include "twedge/sampler.hpp"
#include "twedge/spectral.hpp"
#include "twedge/stats.hpp"
#include "twedge/tw_reference.hpp"

namespace twedge {

// One result cell. Probability estimates always carry the binomial SE
// sqrt(p(1-p)/reps); non-probability statistics leave has_se false.
struct ResultCell {
    std::string setting;
    std::string statistic;
    double estimate = 0.0;
    double se = 0.0;
    bool has_se = false;
    int reps = 0;
};

struct TableResult {
    std::string experiment;
    std::uint64_t master_seed = 0;
    std::vector<std::pair<std::string, std::string>> config_echo;
    std::vector<ResultCell> cells;

    const ResultCell& cell(const std::string& setting, const std::string& statistic) const {
        for (const auto& c : cells)
            if (c.setting == setting && c.statistic == statistic) return c;
        fail("MissingCell", "no cell (" + setting + ", " + statistic + ")");
    }
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_u64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%" PRIu64, v);
    return buf;
}

// Replicate streams for multi-setting runs: each setting gets its own block
// of stream indices so settings never share randomness.
inline std::uint64_t replicate_stream(std::uint64_t block, int rep) {
    return (block << 32) | static_cast<std::uint64_t>(rep);
}

inline double rescaled_lambda1(const ModelSpec& model, const EdgeParams& edge,
                               std::uint64_t master_seed, std::uint64_t block, int rep) {
    RngStream rng(master_seed, replicate_stream(block, rep));
    auto sample = gram_eigenvalues(sample_data_matrix(model, rng));
    return rescale_largest(sample.largest(), edge, model.N);
}

} // namespace detail

// Deterministic CSV: one row per cell, "%.17g" floats, empty SE field for
// non-probability statistics. Identical config + seed gives a byte-identical
// file regardless of worker count.
inline void write_csv(const TableResult& res, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), "IoError", "cannot open " + path.string() + " for writing");
    out << "experiment,setting,statistic,estimate,se,reps,master_seed\n";
    for (const auto& c : res.cells) {
        out << res.experiment << ',' << c.setting << ',' << c.statistic << ','
            << detail::fmt_double(c.estimate) << ','
            << (c.has_se ? detail::fmt_double(c.se) : std::string{}) << ','
            << c.reps << ',' << detail::fmt_u64(res.master_seed) << "\n";
    }
    require(out.good(), "IoError", "write failure on " + path.string());
}

inline void write_summary(const TableResult& res, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), "IoError", "cannot open " + path.string() + " for writing");
    out << "experiment = " << res.experiment << "\n";
    out << "master_seed = " << detail::fmt_u64(res.master_seed) << "\n";
    for (const auto& [k, v] : res.config_echo) out << k << " = " << v << "\n";
    out << "\nsetting\tstatistic\testimate\tse\treps\n";
    for (const auto& c : res.cells)
        out << c.setting << '\t' << c.statistic << '\t' << detail::fmt_double(c.estimate) << '\t'
            << (c.has_se ? detail::fmt_double(c.se) : std::string("-")) << '\t' << c.reps << "\n";
    require(out.good(), "IoError", "write failure on " + path.string());
}

inline std::filesystem::path result_filename(const std::filesystem::path& dir,
                                             const std::string& experiment,
                                             std::uint64_t seed, const char* ext = "csv") {
    return dir / (experiment + "_seed" + detail::fmt_u64(seed) + "." + ext);
}

// ---------------------------------------------------------------------------
// Table-1 style experiment: empirical CDF of the rescaled largest eigenvalue,
// evaluated at the reference Tracy-Widom percentiles.

struct Table1Config {
    ModelSpec model;
    std::string setting_name = "model";
    int reps = 2000;
    std::uint64_t master_seed = 1;
    int workers = 1;
};

inline TableResult run_table1(const Table1Config& cfg) {
    cfg.model.validate();
    EdgeParams edge = edge_params(cfg.model.spectrum, cfg.model.phi());
    std::vector<double> vals(static_cast<std::size_t>(cfg.reps));
    for_each_replicate(cfg.reps, cfg.workers, [&](int r) {
        vals[static_cast<std::size_t>(r)] =
            detail::rescaled_lambda1(cfg.model, edge, cfg.master_seed, 0, r);
    });
    std::vector<double> sorted = vals;
    std::sort(sorted.begin(), sorted.end());

    TableResult res;
    res.experiment = "table1";
    res.master_seed = cfg.master_seed;
    res.config_echo = {{"setting", cfg.setting_name},
                       {"M", std::to_string(cfg.model.M)},
                       {"N", std::to_string(cfg.model.N)},
                       {"radius", cfg.model.radius.name},
                       {"reps", std::to_string(cfg.reps)},
                       {"lambda_plus", detail::fmt_double(edge.lambda_plus)},
                       {"gamma", detail::fmt_double(edge.gamma)}};
    for (const auto& [x, p] : tw1_table().points) {
        double est = ecdf_at(sorted, x);
        char stat[32];
        std::snprintf(stat, sizeof stat, "cdf_at_%.2f", x);
        res.cells.push_back({cfg.setting_name, stat, est,
                             binomial_se(est, static_cast<std::size_t>(cfg.reps)), true, cfg.reps});
    }
    return res;
}

// ---------------------------------------------------------------------------
// Null-model size of the eigengap ratio test at a calibrated critical value.

struct SizeConfig {
    std::vector<std::pair<std::string, ModelSpec>> settings;
    int reps = 2000;
    double alpha = 0.05;
    std::uint64_t master_seed = 1;
    int workers = 1;
};

inline TableResult run_size(const SizeConfig& cfg, const CalibrationResult& calib) {
    require(calib.statistic_kind == StatisticKind::OnatskiRatio, "MissingCalibration",
            "size test needs an eigengap-ratio calibration");
    require(cfg.alpha > 0.0 && cfg.alpha <= 1.0, "BadProbability", "alpha must lie in (0,1]");
    // alpha = 1 rejects everything; the calibrated path needs the (1-alpha) percentile
    const double crit = cfg.alpha == 1.0 ? -std::numeric_limits<double>::infinity()
                                         : calib.value_at(1.0 - cfg.alpha);
    TableResult res;
    res.experiment = "test_size";
    res.master_seed = cfg.master_seed;
    res.config_echo = {{"alpha", detail::fmt_double(cfg.alpha)},
                       {"critical_value", detail::fmt_double(crit)},
                       {"calibration_dim", std::to_string(calib.dim)},
                       {"calibration_reps", std::to_string(calib.reps)},
                       {"reps", std::to_string(cfg.reps)}};
    for (std::size_t s = 0; s < cfg.settings.size(); ++s) {
        const auto& [name, model] = cfg.settings[s];
        model.validate();
        std::vector<std::uint8_t> reject(static_cast<std::size_t>(cfg.reps));
        for_each_replicate(cfg.reps, cfg.workers, [&](int r) {
            RngStream rng(cfg.master_seed, detail::replicate_stream(s, r));
            auto sample = gram_eigenvalues(sample_data_matrix(model, rng));
            reject[static_cast<std::size_t>(r)] = onatski_statistic(sample) > crit ? 1 : 0;
        });
        int hits = 0;
        for (auto b : reject) hits += b;
        double est = static_cast<double>(hits) / cfg.reps;
        res.cells.push_back({name, "size", est,
                             binomial_se(est, static_cast<std::size_t>(cfg.reps)), true, cfg.reps});
    }
    return res;
}

// ---------------------------------------------------------------------------
// Power of the same test under the rank-one signal-plus-noise alternative.
// The sample covariance here is (1/N) sum_i y_i y_i^T.

struct PowerConfig {
    std::vector<std::pair<std::string, ModelSpec>> settings;
    std::vector<double> nus;
    int reps = 1000;
    double alpha = 0.05;
    std::uint64_t master_seed = 1;
    int workers = 1;
};

inline TableResult run_power(const PowerConfig& cfg, const CalibrationResult& calib) {
    require(calib.statistic_kind == StatisticKind::OnatskiRatio, "MissingCalibration",
            "power test needs an eigengap-ratio calibration");
    const double crit = calib.value_at(1.0 - cfg.alpha);
    TableResult res;
    res.experiment = "test_power";
    res.master_seed = cfg.master_seed;
    res.config_echo = {{"alpha", detail::fmt_double(cfg.alpha)},
                       {"critical_value", detail::fmt_double(crit)},
                       {"reps", std::to_string(cfg.reps)}};
    std::uint64_t block = 0;
    for (const auto& [name, model] : cfg.settings) {
        model.validate();
        for (double nu : cfg.nus) {
            require(nu >= 0.0, "NegativeStrength", "nu must be >= 0");
            const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(model.N));
            std::vector<std::uint8_t> reject(static_cast<std::size_t>(cfg.reps));
            const std::uint64_t this_block = block;
            for_each_replicate(cfg.reps, cfg.workers, [&](int r) {
                RngStream rng(cfg.master_seed, detail::replicate_stream(this_block, r));
                DataMatrix Y;
                Y.entries = inv_sqrt_n * sample_signal_plus_noise(model, nu, rng);
                Y.M = model.M;
                Y.N = model.N;
                Y.master_seed = cfg.master_seed;
                Y.stream_index = rng.stream_index();
                auto sample = gram_eigenvalues(Y);
                reject[static_cast<std::size_t>(r)] = onatski_statistic(sample) > crit ? 1 : 0;
            });
            int hits = 0;
            for (auto b : reject) hits += b;
            double est = static_cast<double>(hits) / cfg.reps;
            char stat[40];
            std::snprintf(stat, sizeof stat, "power_nu_%g", nu);
            res.cells.push_back({name, stat, est,
                                 binomial_se(est, static_cast<std::size_t>(cfg.reps)), true, cfg.reps});
            ++block;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Edge rigidity across an N-ladder: medians of N^(2/3)|lambda_1 - lambda_plus|
// and the log-log slope of the unscaled median deviation.

struct RigidityConfig {
    SigmaName sigma = SigmaName::Identity;
    RadiusLaw radius = RadiusLaw::chi_gaussian();
    double phi = 1.0; // M = round(phi * N)
    std::vector<int> n_ladder = {100, 200, 400};
    int reps = 500;
    std::uint64_t master_seed = 1;
    int workers = 1;
};

inline TableResult run_rigidity(const RigidityConfig& cfg) {
    require(cfg.n_ladder.size() >= 3, "BadInput", "rigidity needs a ladder of at least 3 sizes");
    TableResult res;
    res.experiment = "rigidity";
    res.master_seed = cfg.master_seed;
    res.config_echo = {{"phi", detail::fmt_double(cfg.phi)},
                       {"radius", cfg.radius.name},
                       {"reps", std::to_string(cfg.reps)}};
    std::vector<double> log_n, log_median;
    for (std::size_t step = 0; step < cfg.n_ladder.size(); ++step) {
        int N = cfg.n_ladder[step];
        int M = static_cast<int>(std::lround(cfg.phi * N));
        ModelSpec model{M, N, builtin_sigma(cfg.sigma, M, static_cast<double>(M) / N), cfg.radius};
        model.validate();
        EdgeParams edge = edge_params(model.spectrum, model.phi());
        std::vector<double> devs(static_cast<std::size_t>(cfg.reps));
        for_each_replicate(cfg.reps, cfg.workers, [&](int r) {
            RngStream rng(cfg.master_seed, detail::replicate_stream(step, r));
            auto sample = gram_eigenvalues(sample_data_matrix(model, rng));
            devs[static_cast<std::size_t>(r)] = std::fabs(sample.largest() - edge.lambda_plus);
        });
        double med = median(devs);
        double n23 = std::pow(static_cast<double>(N), 2.0 / 3.0);
        std::vector<double> scaled = devs;
        for (double& d : scaled) d *= n23;
        std::string setting = "N=" + std::to_string(N);
        res.cells.push_back({setting, "median_abs_dev", med, 0.0, false, cfg.reps});
        res.cells.push_back({setting, "median_scaled", median(scaled), 0.0, false, cfg.reps});
        res.cells.push_back({setting, "p95_scaled", quantile(scaled, 0.95), 0.0, false, cfg.reps});
        log_n.push_back(std::log(static_cast<double>(N)));
        log_median.push_back(std::log(med));
    }
    res.cells.push_back({"all", "loglog_slope", ols_slope(log_n, log_median), 0.0, false, cfg.reps});
    return res;
}

// ---------------------------------------------------------------------------
// Local-law check: per grid point, the median over replicates of
// (N*eta)|m_N(z) - m(z)|, with solve_m as the deterministic reference.

struct LocalLawConfig {
    ModelSpec model;
    std::vector<ComplexPoint> z_grid; // absolute points in the upper half plane
    int reps = 200;
    std::uint64_t master_seed = 1;
    int workers = 1;
};

inline TableResult run_locallaw(const LocalLawConfig& cfg) {
    cfg.model.validate();
    require(!cfg.z_grid.empty(), "BadInput", "local-law run needs a z grid");
    TableResult res;
    res.experiment = "locallaw";
    res.master_seed = cfg.master_seed;
    res.config_echo = {{"M", std::to_string(cfg.model.M)},
                       {"N", std::to_string(cfg.model.N)},
                       {"radius", cfg.model.radius.name},
                       {"reps", std::to_string(cfg.reps)}};
    std::vector<Complex> reference;
    reference.reserve(cfg.z_grid.size());
    for (const auto& zp : cfg.z_grid)
        reference.push_back(solve_m(zp, cfg.model.spectrum, cfg.model.phi()).m);

    std::vector<std::vector<double>> errs(cfg.z_grid.size(),
                                          std::vector<double>(static_cast<std::size_t>(cfg.reps)));
    for_each_replicate(cfg.reps, cfg.workers, [&](int r) {
        RngStream rng(cfg.master_seed, detail::replicate_stream(0, r));
        auto sample = gram_eigenvalues(sample_data_matrix(cfg.model, rng));
        for (std::size_t g = 0; g < cfg.z_grid.size(); ++g) {
            Complex mn = empirical_stieltjes(sample, cfg.z_grid[g]);
            errs[g][static_cast<std::size_t>(r)] = std::abs(mn - reference[g]);
        }
    });
    for (std::size_t g = 0; g < cfg.z_grid.size(); ++g) {
        const auto& zp = cfg.z_grid[g];
        char setting[64];
        std::snprintf(setting, sizeof setting, "E=%.6g,eta=%.6g", zp.E, zp.eta);
        double scale = static_cast<double>(cfg.model.N) * zp.eta;
        std::vector<double> scaled = errs[g];
        for (double& e : scaled) e *= scale;
        res.cells.push_back({setting, "median_scaled_err", median(scaled), 0.0, false, cfg.reps});
        res.cells.push_back({setting, "median_abs_err", median(errs[g]), 0.0, false, cfg.reps});
    }
    return res;
}

// ---------------------------------------------------------------------------
// Distributional comparison of the rescaled largest eigenvalue across two
// radius laws sharing (M, N, Sigma): two-sample Kolmogorov-Smirnov distance.

struct UniversalityConfig {
    ModelSpec model_a;
    ModelSpec model_b;
    int reps = 2000;
    std::uint64_t seed_a = 1;
    std::uint64_t seed_b = 2;
    int workers = 1;
};

inline TableResult run_universality(const UniversalityConfig& cfg) {
    cfg.model_a.validate();
    cfg.model_b.validate();
    require(cfg.model_a.M == cfg.model_b.M && cfg.model_a.N == cfg.model_b.N, "BadInput",
            "universality comparison needs matching (M, N)");
    EdgeParams edge = edge_params(cfg.model_a.spectrum, cfg.model_a.phi());
    auto draw = [&](const ModelSpec& model, std::uint64_t seed, std::uint64_t block) {
        std::vector<double> vals(static_cast<std::size_t>(cfg.reps));
        for_each_replicate(cfg.reps, cfg.workers, [&](int r) {
            vals[static_cast<std::size_t>(r)] = detail::rescaled_lambda1(model, edge, seed, block, r);
        });
        return vals;
    };
    std::vector<double> a = draw(cfg.model_a, cfg.seed_a, 0);
    std::vector<double> b = draw(cfg.model_b, cfg.seed_b, 1);
    TableResult res;
    res.experiment = "universality";
    res.master_seed = cfg.seed_a;
    res.config_echo = {{"M", std::to_string(cfg.model_a.M)},
                       {"N", std::to_string(cfg.model_a.N)},
                       {"radius_a", cfg.model_a.radius.name},
                       {"radius_b", cfg.model_b.radius.name},
                       {"seed_b", detail::fmt_u64(cfg.seed_b)},
                       {"reps", std::to_string(cfg.reps)}};
    std::string setting = cfg.model_a.radius.name + "_vs_" + cfg.model_b.radius.name;
    res.cells.push_back({setting, "ks_distance", ks_distance(a, b), 0.0, false, cfg.reps});
    return res;
}

} // namespace twedge
