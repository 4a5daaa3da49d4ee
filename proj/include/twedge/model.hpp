#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "twedge/errors.hpp"

namespace twedge {

struct SpectrumAtom {
    double value;  // population eigenvalue, > 0
    double weight; // mass in (0,1]
};

// Weighted atoms of the population eigenvalue distribution, canonical form:
// weights normalized to sum 1, values sorted descending, duplicates merged.
class PopulationSpectrum {
public:
    static PopulationSpectrum from_atoms(std::vector<SpectrumAtom> atoms) {
        require(!atoms.empty(), "EmptySpectrum", "population spectrum needs at least one atom");
        for (const auto& a : atoms) {
            require(std::isfinite(a.value) && a.value > 0.0, "NonPositiveValue",
                    "population eigenvalue must be positive, got " + std::to_string(a.value));
            require(std::isfinite(a.weight) && a.weight > 0.0, "NonPositiveWeight",
                    "atom weight must be positive, got " + std::to_string(a.weight));
        }
        std::sort(atoms.begin(), atoms.end(),
                  [](const SpectrumAtom& a, const SpectrumAtom& b) { return a.value > b.value; });
        std::vector<SpectrumAtom> merged;
        for (const auto& a : atoms) {
            if (!merged.empty() && merged.back().value == a.value)
                merged.back().weight += a.weight;
            else
                merged.push_back(a);
        }
        double total = 0.0;
        for (const auto& a : merged) total += a.weight;
        for (auto& a : merged) a.weight /= total;
        PopulationSpectrum s;
        s.atoms_ = std::move(merged);
        return s;
    }

    // Finite-sample spectrum: weight 1/M on each listed eigenvalue.
    static PopulationSpectrum from_eigenvalues(const std::vector<double>& eigs) {
        require(!eigs.empty(), "EmptySpectrum", "eigenvalue list is empty");
        std::vector<SpectrumAtom> atoms;
        atoms.reserve(eigs.size());
        double w = 1.0 / static_cast<double>(eigs.size());
        for (double v : eigs) atoms.push_back({v, w});
        return from_atoms(std::move(atoms));
    }

    const std::vector<SpectrumAtom>& atoms() const noexcept { return atoms_; }
    double sigma_max() const noexcept { return atoms_.front().value; }
    double sigma_min() const noexcept { return atoms_.back().value; }

    double trace_mean() const noexcept { // integral of x against the spectrum
        double s = 0.0;
        for (const auto& a : atoms_) s += a.weight * a.value;
        return s;
    }

    PopulationSpectrum scaled(double factor) const {
        require(factor > 0.0, "NonPositiveValue", "scale factor must be positive");
        std::vector<SpectrumAtom> atoms = atoms_;
        for (auto& a : atoms) a.value *= factor;
        return from_atoms(std::move(atoms));
    }

private:
    std::vector<SpectrumAtom> atoms_;
};

inline PopulationSpectrum make_population_spectrum(std::vector<SpectrumAtom> atoms) {
    return PopulationSpectrum::from_atoms(std::move(atoms));
}

// Spectrum file: one "value weight" pair per line, '#' starts a comment.
inline PopulationSpectrum parse_spectrum(std::istream& in) {
    std::vector<SpectrumAtom> atoms;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double value, weight;
        if (!(ls >> value)) continue; // blank or comment-only line
        require(static_cast<bool>(ls >> weight), "SpectrumParse",
                "line " + std::to_string(lineno) + ": expected 'value weight'");
        std::string extra;
        require(!(ls >> extra), "SpectrumParse",
                "line " + std::to_string(lineno) + ": trailing content '" + extra + "'");
        atoms.push_back({value, weight});
    }
    return PopulationSpectrum::from_atoms(std::move(atoms));
}

enum class SigmaName { Identity, Sigma1, Sigma2 };

inline SigmaName parse_sigma_name(const std::string& s) {
    if (s == "identity") return SigmaName::Identity;
    if (s == "sigma1") return SigmaName::Sigma1;
    if (s == "sigma2") return SigmaName::Sigma2;
    fail("UnknownName", "unknown builtin spectrum '" + s + "' (identity|sigma1|sigma2)");
}

// Builtin population spectra. Sigma1 splits mass between eigenvalues 2 and 1
// (floor(M/2) twos); Sigma2 is a single subcritical spike 1 + sqrt(phi)/2 on
// top of an identity bulk.
inline PopulationSpectrum builtin_sigma(SigmaName name, int M, double phi) {
    require(M >= 2, "BadDimension", "builtin spectra need M >= 2");
    require(phi > 0.0, "BadPhi", "phi must be positive");
    switch (name) {
    case SigmaName::Identity:
        return PopulationSpectrum::from_atoms({{1.0, 1.0}});
    case SigmaName::Sigma1: {
        double twos = static_cast<double>(M / 2);
        double m = static_cast<double>(M);
        return PopulationSpectrum::from_atoms({{2.0, twos / m}, {1.0, (m - twos) / m}});
    }
    case SigmaName::Sigma2: {
        double m = static_cast<double>(M);
        double spike = 1.0 + std::sqrt(phi) / 2.0;
        return PopulationSpectrum::from_atoms({{spike, 1.0 / m}, {1.0, (m - 1.0) / m}});
    }
    }
    fail("UnknownName", "unhandled builtin spectrum");
}

// Radius distributions for the elliptical model. Every law is rescaled
// deterministically so that E xi^2 = M/N exactly; the rescaling constants come
// from the law's first two raw moments, never from empirical normalization.
struct RadiusLaw {
    enum class Kind { ChiGaussian, PearsonII, GammaDoubleExp, DiscreteSum };

    Kind kind = Kind::ChiGaussian;
    std::string name = "chi";
    // DiscreteSum only: xi is the rescaled sum of M i.i.d. draws from these atoms.
    std::vector<SpectrumAtom> atoms; // weights normalized at construction

    static RadiusLaw chi_gaussian() { return {Kind::ChiGaussian, "chi", {}}; }
    static RadiusLaw pearson_ii() { return {Kind::PearsonII, "pearson2", {}}; }
    static RadiusLaw gamma_double_exp() { return {Kind::GammaDoubleExp, "gammaexp", {}}; }

    static RadiusLaw discrete_sum(std::vector<SpectrumAtom> atoms, std::string name = "atoms") {
        require(!atoms.empty(), "InvalidLaw", "discrete radius law needs atoms");
        double total = 0.0;
        for (const auto& a : atoms) {
            require(a.value >= 0.0, "InvalidLaw", "discrete radius atoms must be >= 0");
            require(a.weight > 0.0, "NonPositiveWeight", "discrete radius weights must be positive");
            total += a.weight;
        }
        for (auto& a : atoms) a.weight /= total;
        double m1 = 0.0;
        for (const auto& a : atoms) m1 += a.weight * a.value;
        require(m1 > 0.0, "InvalidLaw", "discrete radius law must have positive mean");
        RadiusLaw law{Kind::DiscreteSum, std::move(name), std::move(atoms)};
        return law;
    }

    // d1, d2: discrete summand distributions whose rescaled M-fold sums mimic
    // the chi radius (moment-matched non-Gaussian laws).
    static RadiusLaw discrete_d1() {
        return discrete_sum({{0.0, 0.2870}, {1.0, 0.5971}, {1.5, 0.1000}, {2.0, 0.0063}, {4.0, 0.0095}}, "d1");
    }
    static RadiusLaw discrete_d2() {
        return discrete_sum({{0.0, 0.1409}, {1.0, 0.2906}, {0.5, 0.4217}, {2.0, 0.1454}, {4.0, 0.0014}}, "d2");
    }

    static RadiusLaw by_name(const std::string& s) {
        if (s == "chi") return chi_gaussian();
        if (s == "pearson2") return pearson_ii();
        if (s == "gammaexp") return gamma_double_exp();
        if (s == "d1") return discrete_d1();
        if (s == "d2") return discrete_d2();
        fail("InvalidLaw", "unknown radius law '" + s + "' (chi|pearson2|gammaexp|d1|d2)");
    }

    // First two raw moments of a single discrete summand.
    double summand_mean() const {
        double m1 = 0.0;
        for (const auto& a : atoms) m1 += a.weight * a.value;
        return m1;
    }
    double summand_mean_square() const {
        double m2 = 0.0;
        for (const auto& a : atoms) m2 += a.weight * a.value * a.value;
        return m2;
    }

    // E xi^2 evaluated through the law's sampling recipe (not short-circuited
    // to M/N); equality with M/N is what the rescaling constants guarantee.
    double analytic_mean_square(int M, int N) const {
        double m = static_cast<double>(M), n = static_cast<double>(N);
        switch (kind) {
        case Kind::ChiGaussian:
            // xi^2 = chi^2_M / N
            return m / n;
        case Kind::PearsonII: {
            // xi^2 = Beta(M/2, 1/2) * (M+1)/N; E Beta = M/(M+1)
            double eb = (m / 2.0) / (m / 2.0 + 0.5);
            return eb * (m + 1.0) / n;
        }
        case Kind::GammaDoubleExp: {
            // xi = s * Gamma(shape M/2, scale 1/2), s^2 = (M/N)/E g^2
            double shape = m / 2.0, scale = 0.5;
            double eg2 = shape * scale * scale + shape * shape * scale * scale;
            double s2 = (m / n) / eg2;
            return s2 * eg2;
        }
        case Kind::DiscreteSum: {
            double m1 = summand_mean(), m2 = summand_mean_square();
            double eraw2 = m * m2 + m * (m - 1.0) * m1 * m1;
            double s2 = (m / n) / eraw2;
            return s2 * eraw2;
        }
        }
        fail("InvalidLaw", "unhandled radius law kind");
    }
};

// Bounds for Condition-style validation; phi must stay inside [phi_min, phi_max].
struct ConditionBounds {
    double phi_min = 1.0 / 20.0;
    double phi_max = 20.0;
};

// One complete elliptical data model: dimension M, sample size N, population
// spectrum and radius law. phi = M/N is derived, never stored.
struct ModelSpec {
    int M = 0;
    int N = 0;
    PopulationSpectrum spectrum = PopulationSpectrum::from_atoms({{1.0, 1.0}});
    RadiusLaw radius = RadiusLaw::chi_gaussian();

    double phi() const { return static_cast<double>(M) / static_cast<double>(N); }

    void validate(const ConditionBounds& bounds = {}) const {
        require(M >= 2, "BadDimension", "M must be >= 2");
        require(N >= 2, "BadDimension", "N must be >= 2");
        double p = phi();
        require(p >= bounds.phi_min && p <= bounds.phi_max, "BadPhi",
                "phi = " + std::to_string(p) + " outside configured bounds");
    }
};

} // namespace twedge
