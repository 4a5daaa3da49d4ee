#pragma once

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "twedge/errors.hpp"
#include "twedge/parallel.hpp"
#include "twedge/rng.hpp"
#include "twedge/sampler.hpp"
#include "twedge/spectral.hpp"
#include "twedge/stats.hpp"

namespace twedge {

// Reference table of the type-1 Tracy-Widom CDF: nine (percentile, probability)
// pairs, strictly increasing in both coordinates.
struct Tw1Table {
    std::vector<std::pair<double, double>> points;
};

inline const Tw1Table& tw1_table() {
    static const Tw1Table table{{{-3.90, 0.01},
                                 {-3.18, 0.05},
                                 {-2.78, 0.10},
                                 {-1.91, 0.30},
                                 {-1.27, 0.50},
                                 {-0.59, 0.70},
                                 {0.45, 0.90},
                                 {0.98, 0.95},
                                 {2.02, 0.99}}};
    return table;
}

struct Tw1CdfValue {
    double p = 0.0;
    bool clamped = false; // outside the tabulated range, value held at 0.005 / 0.995
};

// Monotone piecewise-linear interpolation of the table; clamps beyond the
// first/last node.
inline Tw1CdfValue tw1_cdf_interp(double x) {
    const auto& pts = tw1_table().points;
    if (x < pts.front().first) return {0.005, true};
    if (x > pts.back().first) return {0.995, true};
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (x <= pts[i].first) {
            double x0 = pts[i - 1].first, p0 = pts[i - 1].second;
            double x1 = pts[i].first, p1 = pts[i].second;
            double t = (x - x0) / (x1 - x0);
            return {p0 + t * (p1 - p0), false};
        }
    }
    return {pts.back().second, false};
}

enum class StatisticKind { TwEdge, OnatskiRatio };

inline std::string statistic_kind_name(StatisticKind k) {
    return k == StatisticKind::TwEdge ? "TwEdge" : "OnatskiRatio";
}

// Monte-Carlo percentile estimates of a GOE edge functional, persisted so the
// power study does not recalibrate per run.
struct CalibrationResult {
    StatisticKind statistic_kind = StatisticKind::TwEdge;
    int dim = 0;
    int reps = 0;
    std::uint64_t master_seed = 0;
    int discarded = 0; // degenerate-gap replicates (ratio statistic only)
    std::string created; // ISO 8601, informational
    std::vector<std::pair<double, double>> percentile_estimates; // (prob, value), increasing

    double value_at(double prob) const {
        for (const auto& [p, v] : percentile_estimates)
            if (p == prob) return v;
        fail("MissingCalibration", "calibration has no estimate at prob " + std::to_string(prob));
    }
};

namespace detail {

inline std::string timestamp_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

} // namespace detail

// Empirical percentiles of dim^(2/3)*(lambda_1 - 2) over GOE draws.
inline CalibrationResult goe_percentiles(int dim, int reps, std::vector<double> probs,
                                         std::uint64_t master_seed, int workers = 1) {
    require(dim >= 50, "BadDimension", "GOE calibration needs dim >= 50");
    require(reps >= 100, "BadInput", "GOE calibration needs reps >= 100");
    std::sort(probs.begin(), probs.end());
    std::vector<double> stats(static_cast<std::size_t>(reps));
    const double scale = std::pow(static_cast<double>(dim), 2.0 / 3.0);
    for_each_replicate(reps, workers, [&](int r) {
        RngStream rng(master_seed, static_cast<std::uint64_t>(r));
        auto eigs = symmetric_eigenvalues(sample_goe(dim, rng));
        stats[static_cast<std::size_t>(r)] = scale * (eigs.front() - 2.0);
    });
    CalibrationResult out;
    out.statistic_kind = StatisticKind::TwEdge;
    out.dim = dim;
    out.reps = reps;
    out.master_seed = master_seed;
    out.created = detail::timestamp_now();
    for (double p : probs) out.percentile_estimates.push_back({p, quantile(stats, p)});
    return out;
}

// Empirical (1-alpha) percentile of the eigengap ratio (mu1-mu2)/(mu2-mu3)
// over GOE draws; degenerate-gap replicates are discarded and counted.
inline CalibrationResult onatski_critical(int dim, int reps, double alpha,
                                          std::uint64_t master_seed, int workers = 1) {
    require(dim >= 50, "BadDimension", "GOE calibration needs dim >= 50");
    require(reps >= 100, "BadInput", "GOE calibration needs reps >= 100");
    require(alpha > 0.0 && alpha < 1.0, "BadProbability", "alpha must lie in (0,1)");
    std::vector<double> stats(static_cast<std::size_t>(reps),
                              std::numeric_limits<double>::quiet_NaN());
    for_each_replicate(reps, workers, [&](int r) {
        RngStream rng(master_seed, static_cast<std::uint64_t>(r));
        auto eigs = symmetric_eigenvalues(sample_goe(dim, rng));
        double gap = eigs[1] - eigs[2];
        if (gap <= 1e-14 * std::max(1.0, std::fabs(eigs[0]))) return; // leave NaN: discarded
        stats[static_cast<std::size_t>(r)] = (eigs[0] - eigs[1]) / gap;
    });
    std::vector<double> kept;
    kept.reserve(stats.size());
    for (double v : stats)
        if (!std::isnan(v)) kept.push_back(v);
    int discarded = reps - static_cast<int>(kept.size());
    require(discarded <= reps / 100, "DegenerateGap",
            "more than 1% of calibration replicates had tied eigenvalue gaps");
    CalibrationResult out;
    out.statistic_kind = StatisticKind::OnatskiRatio;
    out.dim = dim;
    out.reps = reps;
    out.master_seed = master_seed;
    out.discarded = discarded;
    out.created = detail::timestamp_now();
    out.percentile_estimates.push_back({1.0 - alpha, quantile(kept, 1.0 - alpha)});
    return out;
}

// --- calibration cache: structured text, values as hexfloats so a re-read is
// bit-exact.

inline void save_calibration(const CalibrationResult& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), "IoError", "cannot open calibration file for writing: " + path.string());
    char buf[64];
    out << "twedge-calibration v1\n";
    out << "kind = " << statistic_kind_name(c.statistic_kind) << "\n";
    out << "dim = " << c.dim << "\n";
    out << "reps = " << c.reps << "\n";
    out << "master_seed = " << c.master_seed << "\n";
    out << "discarded = " << c.discarded << "\n";
    out << "created = " << c.created << "\n";
    out << "points = " << c.percentile_estimates.size() << "\n";
    for (const auto& [p, v] : c.percentile_estimates) {
        std::snprintf(buf, sizeof buf, "%a %a", p, v);
        out << buf << "\n";
    }
    require(out.good(), "IoError", "write failure on calibration file: " + path.string());
}

inline CalibrationResult load_calibration(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), "MissingCalibration", "calibration file not found: " + path.string());
    std::string line;
    std::getline(in, line);
    require(line == "twedge-calibration v1", "IoError", "bad calibration header in " + path.string());
    CalibrationResult c;
    std::size_t npoints = 0;
    auto value_of = [&](const std::string& l) {
        auto pos = l.find('=');
        require(pos != std::string::npos, "IoError", "malformed calibration line: " + l);
        std::string v = l.substr(pos + 1);
        v.erase(0, v.find_first_not_of(' '));
        return v;
    };
    for (int k = 0; k < 7; ++k) {
        require(static_cast<bool>(std::getline(in, line)), "IoError", "truncated calibration file");
        std::string v = value_of(line);
        if (line.rfind("kind", 0) == 0)
            c.statistic_kind = (v == "TwEdge") ? StatisticKind::TwEdge : StatisticKind::OnatskiRatio;
        else if (line.rfind("dim", 0) == 0) c.dim = std::stoi(v);
        else if (line.rfind("reps", 0) == 0) c.reps = std::stoi(v);
        else if (line.rfind("master_seed", 0) == 0) c.master_seed = std::stoull(v);
        else if (line.rfind("discarded", 0) == 0) c.discarded = std::stoi(v);
        else if (line.rfind("created", 0) == 0) c.created = v;
        else if (line.rfind("points", 0) == 0) npoints = std::stoul(v);
    }
    for (std::size_t k = 0; k < npoints; ++k) {
        require(static_cast<bool>(std::getline(in, line)), "IoError", "truncated calibration points");
        double p, v;
        require(std::sscanf(line.c_str(), "%la %la", &p, &v) == 2, "IoError",
                "malformed calibration point: " + line);
        c.percentile_estimates.push_back({p, v});
    }
    return c;
}

// Canonical cache file name for a calibration configuration.
inline std::filesystem::path calibration_cache_path(const std::filesystem::path& dir,
                                                    StatisticKind kind, int dim, int reps,
                                                    std::uint64_t seed, double alpha = 0.0) {
    char buf[160];
    if (kind == StatisticKind::OnatskiRatio)
        std::snprintf(buf, sizeof buf, "onatski_d%d_r%d_a%g_s%" PRIu64 ".cal", dim, reps, alpha, seed);
    else
        std::snprintf(buf, sizeof buf, "twedge_d%d_r%d_s%" PRIu64 ".cal", dim, reps, seed);
    return dir / buf;
}

} // namespace twedge
