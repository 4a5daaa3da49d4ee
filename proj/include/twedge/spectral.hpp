#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "twedge/errors.hpp"
#include "twedge/mp_law.hpp"
#include "twedge/sampler.hpp"

namespace twedge {

// Descending eigenvalues of one simulated sample covariance matrix. Only the
// min(M,N) eigenvalues of the smaller Gram form are stored; the N x N view
// used by the Stieltjes transform and the counting function pads with zeros
// when M < N (both Gram forms share the nonzero spectrum).
struct SpectralSample {
    std::vector<double> eigenvalues; // descending, size min(M,N)
    int M = 0;
    int N = 0;
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;

    double largest() const {
        require(!eigenvalues.empty(), "EmptySample", "spectral sample has no eigenvalues");
        return eigenvalues.front();
    }
};

namespace detail {

inline std::vector<double> descending_clamped(const Eigen::VectorXd& ascending) {
    std::vector<double> out(ascending.size());
    const double top = ascending.size() ? std::abs(ascending(ascending.size() - 1)) : 0.0;
    const double floor_tol = -1e-10 * std::max(1.0, top);
    for (Eigen::Index i = 0; i < ascending.size(); ++i) {
        double v = ascending(ascending.size() - 1 - i);
        if (v < 0.0) {
            require(v >= floor_tol, "EigenFailure",
                    "eigenvalue " + std::to_string(v) + " below the round-off clamp");
            v = 0.0;
        }
        out[static_cast<std::size_t>(i)] = v;
    }
    return out;
}

} // namespace detail

// Descending eigenvalues of a symmetric matrix (used for GOE draws).
inline std::vector<double> symmetric_eigenvalues(const Eigen::MatrixXd& H) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.compute(H, Eigen::EigenvaluesOnly);
    require(solver.info() == Eigen::Success, "EigenFailure", "symmetric eigensolver did not converge");
    std::vector<double> out(static_cast<std::size_t>(H.rows()));
    const auto& ev = solver.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        out[static_cast<std::size_t>(i)] = ev(ev.size() - 1 - i);
    return out;
}

// Eigenvalues of the sample covariance via the smaller Gram form
// (X^T X if N <= M, else X X^T); optionally truncated to the top k.
inline SpectralSample gram_eigenvalues(const DataMatrix& X, int top_k = -1) {
    require(X.entries.allFinite(), "EigenFailure", "data matrix has non-finite entries");
    Eigen::MatrixXd G;
    if (X.N <= X.M)
        G.noalias() = X.entries.transpose() * X.entries;
    else
        G.noalias() = X.entries * X.entries.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.compute(G, Eigen::EigenvaluesOnly);
    require(solver.info() == Eigen::Success, "EigenFailure", "Gram eigendecomposition did not converge");
    SpectralSample s;
    s.eigenvalues = detail::descending_clamped(solver.eigenvalues());
    if (top_k >= 0 && static_cast<std::size_t>(top_k) < s.eigenvalues.size())
        s.eigenvalues.resize(static_cast<std::size_t>(top_k));
    s.M = X.M;
    s.N = X.N;
    s.master_seed = X.master_seed;
    s.stream_index = X.stream_index;
    return s;
}

// gamma * N^(2/3) * (lambda_1 - lambda_plus), the Tracy-Widom rescaling.
inline double rescale_largest(double lambda1, const EdgeParams& edge, int N) {
    require(N >= 1, "BadDimension", "rescale needs N >= 1");
    return edge.gamma * std::pow(static_cast<double>(N), 2.0 / 3.0) * (lambda1 - edge.lambda_plus);
}

// Eigengap ratio T = (l1 - l2)/(l2 - l3); scale free, needs a strict l2 > l3.
inline double onatski_statistic(const SpectralSample& eigs) {
    require(eigs.eigenvalues.size() >= 3, "BadInput", "ratio statistic needs at least 3 eigenvalues");
    double l1 = eigs.eigenvalues[0], l2 = eigs.eigenvalues[1], l3 = eigs.eigenvalues[2];
    double gap = l2 - l3;
    if (gap <= 1e-14 * std::max(1.0, l1))
        fail("DegenerateGap", "tie between the second and third eigenvalues");
    return (l1 - l2) / gap;
}

// Empirical Stieltjes transform m_N(z) = (1/N) sum_i 1/(lambda_i - z) over the
// N eigenvalues of the N x N Gram form (zero padding when M < N).
inline Complex empirical_stieltjes(const SpectralSample& eigs, ComplexPoint zp) {
    require(zp.eta > 0.0, "BadDomain", "empirical Stieltjes transform needs Im z > 0");
    const Complex z = zp.z();
    Complex acc(0.0, 0.0);
    for (double lam : eigs.eigenvalues) acc += 1.0 / (Complex(lam, 0.0) - z);
    int zeros = eigs.N - static_cast<int>(eigs.eigenvalues.size());
    if (zeros > 0) acc += static_cast<double>(zeros) * (1.0 / (-z));
    return acc / static_cast<double>(eigs.N);
}

// #{ i <= N : lambda_i in [a,b] } on the N x N spectrum.
inline int counting_function(const SpectralSample& eigs, double a, double b) {
    require(a <= b, "BadInput", "counting interval needs a <= b");
    int count = 0;
    for (double lam : eigs.eigenvalues)
        if (lam >= a && lam <= b) ++count;
    int zeros = eigs.N - static_cast<int>(eigs.eigenvalues.size());
    if (zeros > 0 && a <= 0.0 && 0.0 <= b) count += zeros;
    return count;
}

} // namespace twedge
