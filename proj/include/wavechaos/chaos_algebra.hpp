#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "lattice_gaussian.hpp"
#include "report.hpp"

namespace wavechaos {

inline constexpr int kDefaultDegreeCap = 12;

// Sorted multiset of cell indices; a repeated index is a power.
using Monomial = std::vector<CellIndex>;

inline double factorial(int n)
{
    double f = 1;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

class PolynomialFunctional {
public:
    PolynomialFunctional() = default;
    explicit PolynomialFunctional(double c)
    {
        if (c != 0) terms_[{}] = c;
    }

    static PolynomialFunctional variable(CellIndex i, double c = 1.0)
    {
        PolynomialFunctional p;
        p.add({i}, c);
        return p;
    }

    void add(Monomial m, double c)
    {
        if (c == 0) return;
        std::sort(m.begin(), m.end());
        auto [it, fresh] = terms_.try_emplace(std::move(m), c);
        if (!fresh) {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    const std::map<Monomial, double>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    int degree() const
    {
        int d = 0;
        for (auto& [m, c] : terms_) d = std::max(d, static_cast<int>(m.size()));
        return d;
    }

    double coeff(const Monomial& m) const
    {
        auto it = terms_.find(m);
        return it == terms_.end() ? 0.0 : it->second;
    }

    double constant() const { return coeff({}); }

    PolynomialFunctional& operator+=(const PolynomialFunctional& o)
    {
        for (auto& [m, c] : o.terms_) add(m, c);
        return *this;
    }
    PolynomialFunctional& operator-=(const PolynomialFunctional& o)
    {
        for (auto& [m, c] : o.terms_) add(m, -c);
        return *this;
    }
    PolynomialFunctional& operator*=(double s)
    {
        if (s == 0) {
            terms_.clear();
            return *this;
        }
        for (auto& [m, c] : terms_) c *= s;
        return *this;
    }

    friend PolynomialFunctional operator+(PolynomialFunctional a, const PolynomialFunctional& b) { return a += b; }
    friend PolynomialFunctional operator-(PolynomialFunctional a, const PolynomialFunctional& b) { return a -= b; }
    friend PolynomialFunctional operator*(PolynomialFunctional a, double s) { return a *= s; }
    friend PolynomialFunctional operator*(double s, PolynomialFunctional a) { return a *= s; }

    friend PolynomialFunctional operator*(const PolynomialFunctional& a, const PolynomialFunctional& b)
    {
        PolynomialFunctional out;
        Monomial m;
        for (auto& [ma, ca] : a.terms_)
            for (auto& [mb, cb] : b.terms_) {
                m.clear();
                std::merge(ma.begin(), ma.end(), mb.begin(), mb.end(), std::back_inserter(m));
                out.add(m, ca * cb);
            }
        return out;
    }

    // Formal partial derivative with respect to W(cell i).
    PolynomialFunctional partial(CellIndex i) const
    {
        PolynomialFunctional out;
        for (auto& [m, c] : terms_) {
            auto lo = std::lower_bound(m.begin(), m.end(), i);
            auto hi = std::upper_bound(lo, m.end(), i);
            auto k = hi - lo;
            if (k == 0) continue;
            Monomial r(m.begin(), lo);
            r.insert(r.end(), lo + 1, m.end());
            out.add(std::move(r), c * static_cast<double>(k));
        }
        return out;
    }

    template <class Vec>
    double evaluate(const Vec& w) const
    {
        double s = 0;
        for (auto& [m, c] : terms_) {
            double v = c;
            for (auto i : m) v *= w[i];
            s += v;
        }
        return s;
    }

    nlohmann::json to_json() const
    {
        nlohmann::json terms = nlohmann::json::array();
        for (auto& [m, c] : terms_) {
            nlohmann::json mono = nlohmann::json::array();
            for (std::size_t k = 0; k < m.size();) {
                std::size_t j = k;
                while (j < m.size() && m[j] == m[k]) ++j;
                mono.push_back({m[k], j - k});
                k = j;
            }
            terms.push_back({{"monomial", mono}, {"coeff", c}});
        }
        return {{"type", "polynomial"}, {"terms", terms}};
    }

    static PolynomialFunctional from_json(const nlohmann::json& j)
    {
        if (j.value("type", "") != "polynomial") throw DomainError("not a polynomial document");
        PolynomialFunctional p;
        for (auto& t : j.at("terms")) {
            Monomial m;
            for (auto& vp : t.at("monomial")) {
                auto v = vp.at(0).get<CellIndex>();
                auto e = vp.at(1).get<int>();
                require(e >= 1, "monomial exponents must be positive");
                m.insert(m.end(), e, v);
            }
            p.add(m, t.at("coeff").get<double>());
        }
        return p;
    }

private:
    std::map<Monomial, double> terms_;
};

inline double max_abs_coeff(const PolynomialFunctional& a)
{
    double m = 0;
    for (auto& [mono, c] : a.terms()) m = std::max(m, std::fabs(c));
    return m;
}

inline double max_abs_diff(const PolynomialFunctional& a, const PolynomialFunctional& b)
{
    return max_abs_coeff(a - b);
}

// Symmetric off-diagonal kernel; coefficient on a sorted tuple is the kernel's
// value on every permutation of that tuple.
class SymmetricKernel {
public:
    explicit SymmetricKernel(int order = 0) : order_(order) { require(order >= 0, "kernel order must be >= 0"); }

    int order() const { return order_; }
    const std::map<std::vector<CellIndex>, double>& coeffs() const { return coeffs_; }

    static std::vector<CellIndex> canonical(std::vector<CellIndex> t)
    {
        std::sort(t.begin(), t.end());
        if (std::adjacent_find(t.begin(), t.end()) != t.end())
            throw DomainError("kernel tuple repeats a cell index (diagonal)");
        return t;
    }

    void set(std::vector<CellIndex> t, double v)
    {
        require(static_cast<int>(t.size()) == order_, "tuple length differs from kernel order");
        t = canonical(std::move(t));
        if (v == 0)
            coeffs_.erase(t);
        else
            coeffs_[t] = v;
    }

    void add(std::vector<CellIndex> t, double v)
    {
        require(static_cast<int>(t.size()) == order_, "tuple length differs from kernel order");
        t = canonical(std::move(t));
        double& c = coeffs_[t];
        c += v;
        if (c == 0) coeffs_.erase(t);
    }

    double get(std::vector<CellIndex> t) const
    {
        std::sort(t.begin(), t.end());
        auto it = coeffs_.find(t);
        return it == coeffs_.end() ? 0.0 : it->second;
    }

    // f(., c): order n-1 kernel obtained by fixing one argument at cell c.
    SymmetricKernel slice(CellIndex c) const
    {
        require(order_ >= 1, "cannot slice an order-0 kernel");
        SymmetricKernel out(order_ - 1);
        for (auto& [t, v] : coeffs_) {
            auto it = std::find(t.begin(), t.end(), c);
            if (it == t.end()) continue;
            std::vector<CellIndex> r(t.begin(), it);
            r.insert(r.end(), it + 1, t.end());
            out.coeffs_[r] = v;
        }
        return out;
    }

    std::vector<CellIndex> support() const
    {
        std::vector<CellIndex> s;
        for (auto& [t, v] : coeffs_) s.insert(s.end(), t.begin(), t.end());
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        return s;
    }

    nlohmann::json to_json() const
    {
        nlohmann::json e = nlohmann::json::array();
        for (auto& [t, v] : coeffs_) e.push_back({{"cells", t}, {"coeff", v}});
        return {{"type", "symmetric_kernel"}, {"order", order_}, {"entries", e}};
    }

    static SymmetricKernel from_json(const nlohmann::json& j)
    {
        if (j.value("type", "") != "symmetric_kernel") throw DomainError("not a symmetric_kernel document");
        SymmetricKernel k(j.at("order").get<int>());
        for (auto& e : j.at("entries")) k.add(e.at("cells").get<std::vector<CellIndex>>(), e.at("coeff").get<double>());
        return k;
    }

private:
    int order_;
    std::map<std::vector<CellIndex>, double> coeffs_;
};

inline double max_abs_diff(const SymmetricKernel& a, const SymmetricKernel& b)
{
    require(a.order() == b.order(), "kernel order mismatch");
    double m = 0;
    for (auto& [t, v] : a.coeffs()) m = std::max(m, std::fabs(v - b.get(t)));
    for (auto& [t, v] : b.coeffs()) m = std::max(m, std::fabs(v - a.get(t)));
    return m;
}

struct ChaosVector {
    std::vector<SymmetricKernel> components; // components[k].order() == k
};

enum class DiagonalPolicy { reject, drop };

// Raw kernel: value on ordered tuples. Result: (1/n!) sum over permutations.
inline SymmetricKernel symmetrize(const std::map<std::vector<CellIndex>, double>& raw, int n,
                                  DiagonalPolicy policy = DiagonalPolicy::reject)
{
    require(n >= 1, "symmetrize needs order >= 1");
    SymmetricKernel out(n);
    double nf = factorial(n);
    for (auto& [t, c] : raw) {
        require(static_cast<int>(t.size()) == n, "raw tuple length differs from order");
        auto s = t;
        std::sort(s.begin(), s.end());
        if (std::adjacent_find(s.begin(), s.end()) != s.end()) {
            if (policy == DiagonalPolicy::reject && c != 0)
                throw DomainError("symmetrize: diagonal tuple with nonzero coefficient");
            continue;
        }
        out.add(s, c / nf);
    }
    return out;
}

// Ryser's formula.
inline double permanent(const std::vector<std::vector<double>>& a)
{
    int n = static_cast<int>(a.size());
    if (n == 0) return 1.0;
    if (n == 1) return a[0][0];
    if (n == 2) return a[0][0] * a[1][1] + a[0][1] * a[1][0];
    double total = 0;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        double prod = 1;
        for (int i = 0; i < n; ++i) {
            double row = 0;
            for (int j = 0; j < n; ++j)
                if (mask & (1u << j)) row += a[i][j];
            prod *= row;
        }
        int bits = __builtin_popcount(mask);
        total += ((n - bits) % 2 ? -1.0 : 1.0) * prod;
    }
    return total;
}

// <f, g> in HP^{(x)n}: n! sum_{s,r} a_s b_r per(cov[s, r]).
inline double hp_inner_product(const SymmetricKernel& f, const SymmetricKernel& g, const CovarianceOperator& cov)
{
    if (f.order() != g.order()) throw DomainError("hp_inner_product: order mismatch");
    int n = f.order();
    std::vector<std::vector<double>> m(n, std::vector<double>(n));
    double s = 0;
    for (auto& [ts, a] : f.coeffs())
        for (auto& [tr, b] : g.coeffs()) {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) m[i][j] = cov(ts[i], tr[j]);
            s += a * b * permanent(m);
        }
    return factorial(n) * s;
}

// Wick product :W(s_1)...W(s_k): as an ordinary polynomial.
inline PolynomialFunctional wick_product(const std::vector<CellIndex>& s, const CovarianceOperator& cov)
{
    PolynomialFunctional out;
    std::vector<char> used(s.size(), 0);
    Monomial free;
    std::function<void(std::size_t, double)> rec = [&](std::size_t i, double w) {
        while (i < s.size() && used[i]) ++i;
        if (i == s.size()) {
            out.add(free, w);
            return;
        }
        used[i] = 1;
        free.push_back(s[i]);
        rec(i + 1, w);
        free.pop_back();
        for (std::size_t j = i + 1; j < s.size(); ++j) {
            if (used[j]) continue;
            double c = cov(s[i], s[j]);
            if (c == 0) continue;
            used[j] = 1;
            rec(i + 1, -w * c);
            used[j] = 0;
        }
        used[i] = 0;
    };
    rec(0, 1.0);
    return out;
}

// I_n(f) = n! sum_s a_s :W(s_1)...W(s_n):. Reduces to n! sum a_s prod W(s_k)
// when distinct cells are uncorrelated.
inline PolynomialFunctional multiple_wiener_integral(const SymmetricKernel& f, const CovarianceOperator& cov)
{
    PolynomialFunctional out;
    double nf = factorial(f.order());
    for (auto& [t, a] : f.coeffs()) out += wick_product(t, cov) * (nf * a);
    return out;
}

// Isserlis: sum over perfect matchings of the monomial's variable multiset.
inline double wick_monomial(const Monomial& m, const CovarianceOperator& cov, int cap = kDefaultDegreeCap)
{
    int deg = static_cast<int>(m.size());
    if (deg > cap) throw CapExceeded("wick_expectation: monomial degree " + std::to_string(deg) + " exceeds cap " +
                                     std::to_string(cap));
    if (deg % 2) return 0.0;
    if (deg == 0) return 1.0;
    std::vector<char> used(deg, 0);
    std::function<double(int)> rec = [&](int i) -> double {
        while (i < deg && used[i]) ++i;
        if (i == deg) return 1.0;
        used[i] = 1;
        double s = 0;
        for (int j = i + 1; j < deg; ++j) {
            if (used[j]) continue;
            double c = cov(m[i], m[j]);
            if (c == 0) continue;
            used[j] = 1;
            s += c * rec(i + 1);
            used[j] = 0;
        }
        used[i] = 0;
        return s;
    };
    return rec(0);
}

inline double wick_expectation(const PolynomialFunctional& p, const CovarianceOperator& cov, int cap = kDefaultDegreeCap)
{
    double s = 0;
    for (auto& [m, c] : p.terms()) s += c * wick_monomial(m, cov, cap);
    return s;
}

// E[I_n(f) I_m(g)] against n! <f,g> 1_{n=m}.
inline EstimateReport isometry_check(const SymmetricKernel& f, const SymmetricKernel& g, const CovarianceOperator& cov,
                                     int cap = kDefaultDegreeCap)
{
    if (f.order() + g.order() > cap) throw CapExceeded("isometry_check: orders exceed degree cap");
    EstimateReport r;
    r.name = "isometry";
    auto If = multiple_wiener_integral(f, cov);
    auto Ig = multiple_wiener_integral(g, cov);
    double lhs = wick_expectation(If * Ig, cov, cap);
    double rhs = 0, scale = 0;
    double ff = hp_inner_product(f, f, cov), gg = f.order() == g.order() ? hp_inner_product(g, g, cov) : 0.0;
    if (f.order() == g.order()) {
        rhs = factorial(f.order()) * hp_inner_product(f, g, cov);
        scale = factorial(f.order()) * std::sqrt(std::max(ff * gg, 0.0));
    } else {
        scale = std::sqrt(std::max(factorial(f.order()) * ff * factorial(g.order()) * hp_inner_product(g, g, cov), 0.0));
    }
    double denom = std::max(std::fabs(rhs), scale);
    double err = denom > 0 ? std::fabs(lhs - rhs) / denom : std::fabs(lhs - rhs);
    r.value = lhs;
    r.bound = rhs;
    r.error_estimate = err;
    r.set(err <= 1e-10);
    r.meta = {{"order_f", f.order()}, {"order_g", g.order()}, {"relative_error", err}};
    return r;
}

// Peels off top-degree square-free monomials as I_k kernels.
inline ChaosVector chaos_project(const PolynomialFunctional& p, const CovarianceOperator& cov, int cap = kDefaultDegreeCap)
{
    int deg = p.degree();
    if (deg > cap) throw CapExceeded("chaos_project: degree exceeds cap");
    ChaosVector out;
    out.components.reserve(deg + 1);
    for (int k = 0; k <= deg; ++k) out.components.emplace_back(k);
    PolynomialFunctional rest = p;
    for (int k = deg; k >= 1; --k) {
        SymmetricKernel J(k);
        for (auto& [m, c] : rest.terms()) {
            if (static_cast<int>(m.size()) != k) continue;
            if (std::adjacent_find(m.begin(), m.end()) != m.end())
                throw RequiresRefinement("chaos_project: monomial with a repeated cell has no off-diagonal kernel "
                                         "on this lattice (requires refinement)");
            J.set(m, c / factorial(k));
        }
        rest -= multiple_wiener_integral(J, cov);
        out.components[k] = std::move(J);
    }
    SymmetricKernel J0(0);
    J0.set({}, rest.constant());
    out.components[0] = std::move(J0);
    return out;
}

inline PolynomialFunctional chaos_sum(const ChaosVector& v, const CovarianceOperator& cov)
{
    PolynomialFunctional out;
    for (auto& J : v.components) out += multiple_wiener_integral(J, cov);
    return out;
}

} // namespace wavechaos
