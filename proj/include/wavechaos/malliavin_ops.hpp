#pragma once

#include <cmath>
#include <map>
#include <utility>

#include "chaos_algebra.hpp"

namespace wavechaos {

// Random element of HP in the cell-indicator basis.
struct HPValuedFunctional {
    std::map<CellIndex, PolynomialFunctional> components;

    void add(CellIndex c, const PolynomialFunctional& p)
    {
        if (p.is_zero()) return;
        auto& slot = components[c];
        slot += p;
        if (slot.is_zero()) components.erase(c);
    }

    PolynomialFunctional get(CellIndex c) const
    {
        auto it = components.find(c);
        return it == components.end() ? PolynomialFunctional{} : it->second;
    }

    int degree() const
    {
        int d = 0;
        for (auto& [c, p] : components) d = std::max(d, p.degree());
        return d;
    }
};

// Random element of HP (x) HP; key is (first slot, second slot).
struct HP2ValuedFunctional {
    std::map<std::pair<CellIndex, CellIndex>, PolynomialFunctional> components;

    void add(CellIndex a, CellIndex b, const PolynomialFunctional& p)
    {
        if (p.is_zero()) return;
        auto& slot = components[{a, b}];
        slot += p;
        if (slot.is_zero()) components.erase({a, b});
    }

    PolynomialFunctional get(CellIndex a, CellIndex b) const
    {
        auto it = components.find({a, b});
        return it == components.end() ? PolynomialFunctional{} : it->second;
    }

    int degree() const
    {
        int d = 0;
        for (auto& [k, p] : components) d = std::max(d, p.degree());
        return d;
    }
};

inline std::vector<CellIndex> variables(const PolynomialFunctional& p)
{
    std::vector<CellIndex> v;
    for (auto& [m, c] : p.terms()) v.insert(v.end(), m.begin(), m.end());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

inline double max_abs_diff(const HPValuedFunctional& a, const HPValuedFunctional& b)
{
    double m = 0;
    for (auto& [c, p] : a.components) m = std::max(m, max_abs_diff(p, b.get(c)));
    for (auto& [c, p] : b.components)
        if (!a.components.count(c)) m = std::max(m, max_abs_coeff(p));
    return m;
}

inline double max_abs_diff(const HP2ValuedFunctional& a, const HP2ValuedFunctional& b)
{
    double m = 0;
    for (auto& [k, p] : a.components) m = std::max(m, max_abs_diff(p, b.get(k.first, k.second)));
    for (auto& [k, p] : b.components)
        if (!a.components.count(k)) m = std::max(m, max_abs_coeff(p));
    return m;
}

inline HPValuedFunctional derivative(const PolynomialFunctional& p)
{
    HPValuedFunctional out;
    for (auto c : variables(p)) out.add(c, p.partial(c));
    return out;
}

// D I_n(f) = n I_{n-1}(f(., c)) per cell c.
inline HPValuedFunctional derivative_of_In(const SymmetricKernel& f, const CovarianceOperator& cov)
{
    HPValuedFunctional out;
    if (f.order() == 0) return out;
    for (auto c : f.support()) out.add(c, multiple_wiener_integral(f.slice(c), cov) * static_cast<double>(f.order()));
    return out;
}

// <D G, 1_cell>_HP as a polynomial.
inline PolynomialFunctional directional(const PolynomialFunctional& g, CellIndex cell, const CovarianceOperator& cov)
{
    PolynomialFunctional out;
    for (auto c : variables(g)) {
        double k = cov(c, cell);
        if (k != 0) out += g.partial(c) * k;
    }
    return out;
}

// delta(u) = sum_i u_i W_i - sum_i <D u_i, 1_i>_HP.
inline PolynomialFunctional divergence(const HPValuedFunctional& u, const CovarianceOperator& cov,
                                       int cap = kDefaultDegreeCap)
{
    if (u.degree() > cap - 1) throw CapExceeded("divergence: component degree exceeds cap - 1");
    PolynomialFunctional out;
    for (auto& [i, ui] : u.components) {
        out += ui * PolynomialFunctional::variable(i);
        out -= directional(ui, i, cov);
    }
    return out;
}

// <F, G>_HP = sum F_c G_c' cov(c, c').
inline PolynomialFunctional hp_pairing(const HPValuedFunctional& F, const HPValuedFunctional& G,
                                       const CovarianceOperator& cov)
{
    PolynomialFunctional out;
    for (auto& [c, f] : F.components)
        for (auto& [c2, g] : G.components) {
            double k = cov(c, c2);
            if (k != 0) out += (f * g) * k;
        }
    return out;
}

inline PolynomialFunctional hp2_pairing(const HP2ValuedFunctional& F, const HP2ValuedFunctional& G,
                                        const CovarianceOperator& cov)
{
    PolynomialFunctional out;
    for (auto& [a, f] : F.components)
        for (auto& [b, g] : G.components) {
            double k = cov(a.first, b.first) * cov(a.second, b.second);
            if (k != 0) out += (f * g) * k;
        }
    return out;
}

inline EstimateReport duality_check(const PolynomialFunctional& F, const HPValuedFunctional& u,
                                    const CovarianceOperator& cov, int cap = kDefaultDegreeCap)
{
    double lhs = wick_expectation(F * divergence(u, cov, cap), cov, cap);
    double rhs = wick_expectation(hp_pairing(derivative(F), u, cov), cov, cap);
    EstimateReport r;
    r.name = "duality";
    r.value = lhs;
    r.bound = rhs;
    r.error_estimate = std::fabs(lhs - rhs);
    r.set(r.error_estimate <= 1e-10 * (1 + std::fabs(lhs)));
    r.meta = {{"deg_F", F.degree()}, {"deg_u", u.degree()}};
    return r;
}

// (D^2 p)_{(a,b)} = d/dW_b d/dW_a p.
inline HP2ValuedFunctional second_derivative(const PolynomialFunctional& p)
{
    HP2ValuedFunctional out;
    for (auto& [a, pa] : derivative(p).components)
        for (auto& [b, pab] : derivative(pa).components) out.add(a, b, pab);
    return out;
}

// D of an HP-valued functional: (DF)_{(c, r)} = d/dW_c F_r.
inline HP2ValuedFunctional derivative(const HPValuedFunctional& F)
{
    HP2ValuedFunctional out;
    for (auto& [r, fr] : F.components)
        for (auto& [c, p] : derivative(fr).components) out.add(c, r, p);
    return out;
}

// delta* integrates the first slot and keeps the second.
inline HPValuedFunctional hilbert_divergence(const HP2ValuedFunctional& U, const CovarianceOperator& cov,
                                             int cap = kDefaultDegreeCap)
{
    if (U.degree() > cap - 1) throw CapExceeded("hilbert_divergence: component degree exceeds cap - 1");
    HPValuedFunctional out;
    for (auto& [k, ucr] : U.components) {
        auto [c, r] = k;
        out.add(r, ucr * PolynomialFunctional::variable(c) - directional(ucr, c, cov));
    }
    return out;
}

// E<F, delta*(U)>_HP against E<DF, U>_{HP (x) HP}.
inline EstimateReport hilbert_duality_check(const HPValuedFunctional& F, const HP2ValuedFunctional& U,
                                            const CovarianceOperator& cov, int cap = kDefaultDegreeCap)
{
    double lhs = wick_expectation(hp_pairing(F, hilbert_divergence(U, cov, cap), cov), cov, cap);
    double rhs = wick_expectation(hp2_pairing(derivative(F), U, cov), cov, cap);
    EstimateReport r;
    r.name = "hilbert_duality";
    r.value = lhs;
    r.bound = rhs;
    r.error_estimate = std::fabs(lhs - rhs);
    r.set(r.error_estimate <= 1e-10 * (1 + std::fabs(lhs)));
    return r;
}

// E||U||^2 + E||DU||^2 with DU in HP^{(x)3}.
inline double energy_rhs(const HP2ValuedFunctional& U, const CovarianceOperator& cov, int cap = kDefaultDegreeCap)
{
    double u2 = wick_expectation(hp2_pairing(U, U, cov), cov, cap);
    std::map<std::array<CellIndex, 3>, PolynomialFunctional> DU;
    for (auto& [k, ucr] : U.components)
        for (auto& [b, p] : derivative(ucr).components) DU[{b, k.first, k.second}] += p;
    PolynomialFunctional du2;
    for (auto& [x, f] : DU)
        for (auto& [y, g] : DU) {
            double w = cov(x[0], y[0]) * cov(x[1], y[1]) * cov(x[2], y[2]);
            if (w != 0) du2 += (f * g) * w;
        }
    return u2 + wick_expectation(du2, cov, cap);
}

inline EstimateReport energy_check(const HP2ValuedFunctional& U, const CovarianceOperator& cov,
                                   int cap = kDefaultDegreeCap)
{
    auto d = hilbert_divergence(U, cov, cap);
    double lhs = wick_expectation(hp_pairing(d, d, cov), cov, cap);
    double rhs = energy_rhs(U, cov, cap);
    EstimateReport r;
    r.name = "delta_star_energy";
    r.value = lhs;
    r.bound = rhs;
    r.error_estimate = 1e-12 * (1 + std::fabs(rhs));
    r.set(lhs <= rhs + r.error_estimate);
    return r;
}

// D^h G = <DG, 1_a>_HP applied slotwise to an HP (x) HP functional.
inline HP2ValuedFunctional directional(const HP2ValuedFunctional& U, CellIndex a, const CovarianceOperator& cov)
{
    HP2ValuedFunctional out;
    for (auto& [k, p] : U.components) out.add(k.first, k.second, directional(p, a, cov));
    return out;
}

// D^{h (x) v} delta*(U) - <U, h (x) v> - <delta*(D^h U), v> with h = 1_a, v = 1_b.
inline PolynomialFunctional commutation_residual(const HP2ValuedFunctional& U, CellIndex a, CellIndex b,
                                                 const CovarianceOperator& cov)
{
    PolynomialFunctional lhs, rhs;
    for (auto& [r, p] : hilbert_divergence(U, cov).components) {
        double kb = cov(r, b);
        if (kb != 0) lhs += directional(p, a, cov) * kb;
    }
    for (auto& [k, p] : U.components) {
        double w = cov(k.first, a) * cov(k.second, b);
        if (w != 0) rhs += p * w;
    }
    for (auto& [r, p] : hilbert_divergence(directional(U, a, cov), cov).components) {
        double kb = cov(r, b);
        if (kb != 0) rhs += p * kb;
    }
    return lhs - rhs;
}

} // namespace wavechaos
