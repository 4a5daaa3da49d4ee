#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "twedge/errors.hpp"
#include "twedge/model.hpp"

namespace twedge {

using Complex = std::complex<double>;

// Point in the upper half plane where spectral quantities are evaluated.
struct ComplexPoint {
    double E = 0.0;   // real part
    double eta = 0.0; // imaginary part, > 0 on the open upper half plane

    Complex z() const { return {E, eta}; }
};

// Membership in the edge spectral domain: |E - lambda_plus| <= tau_prime and
// N^(tau-1) <= eta <= 1/tau. Local-law statements hold on this window; the
// solver itself accepts all of the upper half plane.
inline bool in_edge_domain(ComplexPoint zp, double lambda_plus, int N, double tau = 0.1,
                           double tau_prime = 1.0) {
    if (std::fabs(zp.E - lambda_plus) > tau_prime) return false;
    double eta_min = std::pow(static_cast<double>(N), tau - 1.0);
    return zp.eta >= eta_min && zp.eta <= 1.0 / tau;
}

// Deterministic edge quantities of the Marchenko-Pastur law for a given
// population spectrum and aspect ratio phi:
//   c            : critical point, f'(-c) = 0 on (0, 1/sigma_max)
//   lambda_plus  : rightmost support edge, f(-c)
//   gamma        : Tracy-Widom scaling, gamma*N^(2/3)*(lambda_1 - lambda_plus)
//   condition_margin : 1 - sigma_max * c, must stay positive
struct EdgeParams {
    double c = 0.0;
    double lambda_plus = 0.0;
    double gamma = 0.0;
    double condition_margin = 0.0;
};

// Self-consistent solution m(z) together with its convergence certificate.
struct StieltjesSolution {
    Complex z;
    Complex m;
    double residual = 0.0; // |f(m) - z|
    int iterations = 0;
};

// f(w) = -1/w + phi * integral x/(1+wx) dpi(x), evaluated as a finite sum.
inline Complex f_eval(Complex w, const PopulationSpectrum& spectrum, double phi) {
    require(w != Complex(0.0, 0.0), "PoleAtZero", "f has a pole at w = 0");
    Complex acc(0.0, 0.0);
    for (const auto& a : spectrum.atoms()) {
        Complex denom = 1.0 + w * a.value;
        if (denom == Complex(0.0, 0.0))
            fail("PoleAtAtom", "f has a pole at 1 + w*x = 0 for atom x = " + std::to_string(a.value));
        acc += a.weight * a.value / denom;
    }
    return -1.0 / w + phi * acc;
}

// f'(w) = 1/w^2 - phi * integral x^2/(1+wx)^2 dpi(x).
inline Complex f_prime(Complex w, const PopulationSpectrum& spectrum, double phi) {
    require(w != Complex(0.0, 0.0), "PoleAtZero", "f' has a pole at w = 0");
    Complex acc(0.0, 0.0);
    for (const auto& a : spectrum.atoms()) {
        Complex denom = 1.0 + w * a.value;
        if (denom == Complex(0.0, 0.0))
            fail("PoleAtAtom", "f' has a pole at 1 + w*x = 0 for atom x = " + std::to_string(a.value));
        acc += a.weight * a.value * a.value / (denom * denom);
    }
    return 1.0 / (w * w) - phi * acc;
}

namespace detail {

// g(c) = phi * integral x^2/(1-cx)^2 dpi - 1/c^2. Strictly increasing on
// (0, 1/sigma_max); its root is the critical point c. Equivalent to f'(-c)=0.
inline double edge_g(double c, const PopulationSpectrum& spectrum, double phi) {
    double acc = 0.0;
    for (const auto& a : spectrum.atoms()) {
        double d = 1.0 - c * a.value;
        acc += a.weight * a.value * a.value / (d * d);
    }
    return phi * acc - 1.0 / (c * c);
}

inline double edge_g_prime(double c, const PopulationSpectrum& spectrum, double phi) {
    double acc = 0.0;
    for (const auto& a : spectrum.atoms()) {
        double d = 1.0 - c * a.value;
        acc += a.weight * a.value * a.value * a.value / (d * d * d);
    }
    return 2.0 * phi * acc + 2.0 / (c * c * c);
}

inline double f_real_neg(double c, const PopulationSpectrum& spectrum, double phi) {
    // f(-c) for real c in (0, 1/sigma_max), all denominators positive
    double acc = 0.0;
    for (const auto& a : spectrum.atoms())
        acc += a.weight * a.value / (1.0 - c * a.value);
    return 1.0 / c + phi * acc;
}

} // namespace detail

// Critical point c: bisection on (eps, (1-eps)/sigma_max) -- g is monotone but
// has a pole at 1/sigma_max, so bisection is unconditionally safe -- followed
// by two Newton polish steps to push |g(c)| to rounding level.
inline double find_c(const PopulationSpectrum& spectrum, double phi) {
    require(phi > 0.0, "BadPhi", "phi must be positive");
    const double sigma1 = spectrum.sigma_max();
    double lo = 1e-12;
    double hi = (1.0 - 1e-12) / sigma1;
    double glo = detail::edge_g(lo, spectrum, phi);
    double ghi = detail::edge_g(hi, spectrum, phi);
    if (!(glo < 0.0 && ghi > 0.0) || !std::isfinite(glo) || !std::isfinite(ghi))
        fail("BracketFailure", "no sign change for the critical-point equation on (0, 1/sigma_max)");
    while (hi - lo > 1e-13) {
        double mid = 0.5 * (lo + hi);
        if (detail::edge_g(mid, spectrum, phi) < 0.0) lo = mid; else hi = mid;
    }
    double c = 0.5 * (lo + hi);
    for (int k = 0; k < 2; ++k) {
        double step = detail::edge_g(c, spectrum, phi) / detail::edge_g_prime(c, spectrum, phi);
        double cn = c - step;
        if (cn > lo - 1e-12 && cn < hi + 1e-12 && cn > 0.0 && cn * sigma1 < 1.0) c = cn;
    }
    return c;
}

inline EdgeParams edge_params(const PopulationSpectrum& spectrum, double phi) {
    EdgeParams e;
    e.c = find_c(spectrum, phi);
    e.lambda_plus = detail::f_real_neg(e.c, spectrum, phi);
    double cube_sum = 0.0;
    for (const auto& a : spectrum.atoms()) {
        double r = a.value * e.c / (1.0 - a.value * e.c);
        cube_sum += a.weight * r * r * r;
    }
    double inv_gamma3 = (1.0 + phi * cube_sum) / (e.c * e.c * e.c);
    e.gamma = std::pow(inv_gamma3, -1.0 / 3.0);
    e.condition_margin = 1.0 - spectrum.sigma_max() * e.c;
    require(e.condition_margin > 0.0, "ConditionViolated",
            "sigma_max * c >= 1: the edge condition fails for this spectrum/phi");
    return e;
}

struct SolveOptions {
    double tolerance = 1e-10;
    int max_iterations = 100000;
};

namespace detail {

// One self-consistent map step: m -> 1/(-z + phi * integral x/(1+xm) dpi).
inline Complex sc_map(Complex m, Complex z, const PopulationSpectrum& spectrum, double phi) {
    Complex acc(0.0, 0.0);
    for (const auto& a : spectrum.atoms())
        acc += a.weight * a.value / (1.0 + a.value * m);
    return 1.0 / (-z + phi * acc);
}

inline double residual_at(Complex m, Complex z, const PopulationSpectrum& spectrum, double phi) {
    if (m == Complex(0.0, 0.0)) return std::numeric_limits<double>::infinity();
    for (const auto& a : spectrum.atoms())
        if (1.0 + m * a.value == Complex(0.0, 0.0)) return std::numeric_limits<double>::infinity();
    return std::abs(f_eval(m, spectrum, phi) - z);
}

// Damped fixed-point iteration: full steps until the residual rises, then the
// step fraction is halved (the map can rotate near the bulk, where a raw
// iteration orbits instead of contracting).
inline bool damped_fixed_point(Complex& m, Complex z, const PopulationSpectrum& spectrum,
                               double phi, double tol, int cap, int& used) {
    double beta = 1.0;
    double res = residual_at(m, z, spectrum, phi);
    int it = 0;
    while (it < cap) {
        if (res <= tol) { used += it; return true; }
        Complex cand = sc_map(m, z, spectrum, phi);
        Complex next = (1.0 - beta) * m + beta * cand;
        double res_next = residual_at(next, z, spectrum, phi);
        ++it;
        if (res_next > res) {
            beta *= 0.5;
            if (beta < 1e-9) break;
            continue;
        }
        m = next;
        res = res_next;
    }
    used += it;
    return res <= tol;
}

// Newton on f(m) - z = 0 with residual backtracking.
inline bool newton_polish(Complex& m, Complex z, const PopulationSpectrum& spectrum,
                          double phi, double tol, int cap, int& used) {
    double res = residual_at(m, z, spectrum, phi);
    for (int it = 0; it < cap; ++it) {
        if (res <= tol) { used += it; return true; }
        Complex r = f_eval(m, spectrum, phi) - z;
        Complex d = f_prime(m, spectrum, phi);
        if (d == Complex(0.0, 0.0)) break;
        Complex step = r / d;
        double t = 1.0;
        Complex next = m;
        double res_next = res;
        while (t > 1e-12) {
            Complex trial = m - t * step;
            double res_trial = residual_at(trial, z, spectrum, phi);
            if (res_trial < res) { next = trial; res_next = res_trial; break; }
            t *= 0.5;
        }
        if (res_next >= res) { used += it; return false; }
        m = next;
        res = res_next;
    }
    used += cap;
    return res <= tol;
}

} // namespace detail

// Solve the self-consistent equation z = f(m) for the Stieltjes transform
// branch with Im m >= 0. Valid for Im z > 0, and for real z < 0 (strictly
// below the support, kept for diagnostics).
//
// Strategy: damped fixed point from m0 = -1/z; Newton polish if it stalls;
// if both stall (small eta inside the bulk), walk eta down from O(1) to the
// target, warm-starting each level.
inline StieltjesSolution solve_m(ComplexPoint zp, const PopulationSpectrum& spectrum,
                                 double phi, const SolveOptions& opts = {}) {
    require(zp.eta > 0.0 || (zp.eta == 0.0 && zp.E < 0.0), "BadDomain",
            "solve_m needs Im z > 0, or real z < 0 below the support");
    const Complex z = zp.z();
    const double tol = opts.tolerance;
    int used = 0;

    // f(m) = z has non-Stieltjes solutions too; a phase only counts as
    // converged when it lands on Im m >= 0 (up to rounding).
    auto on_branch = [&](Complex m) { return zp.eta == 0.0 || m.imag() >= -1e-12; };

    Complex m = -1.0 / z;
    bool ok = detail::damped_fixed_point(m, z, spectrum, phi, tol,
                                         std::min(2000, opts.max_iterations), used) &&
              on_branch(m);
    if (!ok) {
        Complex trial = m;
        if (detail::newton_polish(trial, z, spectrum, phi, tol, 200, used) && on_branch(trial)) {
            m = trial;
            ok = true;
        }
    }

    if (!ok && zp.eta > 0.0) {
        // eta continuation from far above the real axis
        double eta0 = std::max(1.0, 2.0 * zp.eta);
        Complex zc(zp.E, eta0);
        m = -1.0 / zc;
        double eta = eta0;
        while (used < opts.max_iterations) {
            bool last = eta <= zp.eta;
            if (last) zc = z; else zc = Complex(zp.E, eta);
            double level_tol = last ? tol : std::max(tol, 1e-8);
            bool level_ok = detail::damped_fixed_point(m, zc, spectrum, phi, level_tol, 300, used);
            if (!level_ok || !on_branch(m)) {
                Complex trial = m;
                if (detail::newton_polish(trial, zc, spectrum, phi, level_tol, 200, used) &&
                    on_branch(trial)) {
                    m = trial;
                    level_ok = true;
                } else {
                    level_ok = level_ok && on_branch(m);
                }
            }
            if (last) { ok = level_ok; break; }
            eta *= 0.25;
            if (eta < zp.eta) eta = zp.eta;
        }
    }

    // best-effort polish well past the contract: near the edge f' is small,
    // so a residual at tol can still leave an O(tol/|f'|) error in m itself
    {
        Complex trial = m;
        int polish_used = 0;
        detail::newton_polish(trial, z, spectrum, phi, 1e-15, 6, polish_used);
        used += polish_used;
        if (on_branch(trial) &&
            detail::residual_at(trial, z, spectrum, phi) <= detail::residual_at(m, z, spectrum, phi))
            m = trial;
    }

    double res = detail::residual_at(m, z, spectrum, phi);
    if (!(res <= tol))
        fail("NoConvergence", "self-consistent solver stalled at residual " + std::to_string(res) +
                                  " after " + std::to_string(used) + " iterations");
    if (zp.eta > 0.0 && m.imag() < -1e-12)
        fail("WrongBranch", "solver landed on Im m < 0 for Im z > 0");
    return {z, m, res, used};
}

// Smoothed spectral density (1/pi) Im m(x + i eta0) at resolution eta0.
inline double density(double x, const PopulationSpectrum& spectrum, double phi, double eta0 = 1e-6) {
    require(x > 0.0, "BadDomain", "density is evaluated at x > 0");
    require(eta0 > 0.0 && eta0 <= 1e-3, "BadDomain", "eta0 must lie in (0, 1e-3]");
    StieltjesSolution s = solve_m({x, eta0}, spectrum, phi);
    return s.m.imag() / M_PI;
}

// Validation report for the model conditions: the edge margin 1 - sigma_max*c
// (warning band at 0.01) and the aspect-ratio bounds.
struct ConditionReport {
    bool sigma_bounds_ok = false;
    double margin = 0.0;
    bool phi_ok = false;

    bool all_ok() const { return sigma_bounds_ok && phi_ok; }
};

inline ConditionReport validate_conditions(const PopulationSpectrum& spectrum, double phi,
                                           const ConditionBounds& bounds = {}) {
    ConditionReport rep;
    double c = find_c(spectrum, phi);
    rep.margin = 1.0 - spectrum.sigma_max() * c;
    rep.sigma_bounds_ok = rep.margin > 0.01;
    rep.phi_ok = (phi >= bounds.phi_min && phi <= bounds.phi_max);
    return rep;
}

} // namespace twedge
