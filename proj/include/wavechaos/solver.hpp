#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "chaos_algebra.hpp"
#include "malliavin_ops.hpp"
#include "propagators.hpp"
#include "mc.hpp"
#include "report.hpp"

namespace wavechaos {

inline constexpr int kMaxTruncation = 3;

inline void check_solver_args(const LatticeSpec& s, int N)
{
    s.validate();
    if (s.d > 2) throw DomainError("solver: d = 3 has no function-valued kernel");
    require(N >= 0, "solver: truncation must be >= 0");
    if (N > kMaxTruncation) throw CapExceeded("solver: truncation depth above " + std::to_string(kMaxTruncation));
}

// 1 + sum_{n <= N} I_n(f~_n(., t, x)).
inline PolynomialFunctional chaos_truncation(const LatticeSpec& s, double t, const Freq& x, int N,
                                             const CovarianceOperator& cov, PropagatorKind k = PropagatorKind::wave)
{
    check_solver_args(s, N);
    PolynomialFunctional u(1.0);
    for (int n = 1; n <= N; ++n) u += multiple_wiener_integral(discretize_fn(k, s, t, x, n), cov);
    return u;
}

// u_{k+1}(t, x) = 1 + delta(sum_c G(t - s_c, x - y_c) u_k(c) 1_c), u_0 = 1.
inline HPValuedFunctional picard_integrand(const LatticeSpec& s, double t, const Freq& x,
                                           const std::vector<PolynomialFunctional>& prev, PropagatorKind k)
{
    HPValuedFunctional v;
    for (std::size_t c = 0; c < prev.size(); ++c) {
        Cell cc = cell_of(s, c);
        double g = lattice_green(k, s, t - time_mid(s, cc), diff(x, mid_point(s, cc)));
        if (g != 0) v.add(static_cast<CellIndex>(c), prev[c] * g);
    }
    return v;
}

// Picard level `level` evaluated at every cell midpoint.
inline std::vector<PolynomialFunctional> picard_cell_levels(const LatticeSpec& s, int level,
                                                            const CovarianceOperator& cov, PropagatorKind k)
{
    std::size_t nc = s.cell_count();
    std::vector<PolynomialFunctional> u(nc, PolynomialFunctional(1.0));
    for (int lv = 1; lv <= level; ++lv) {
        std::vector<PolynomialFunctional> next(nc);
        for (std::size_t c = 0; c < nc; ++c) {
            Cell cc = cell_of(s, c);
            next[c] = PolynomialFunctional(1.0) +
                      divergence(picard_integrand(s, time_mid(s, cc), mid_point(s, cc), u, k), cov);
        }
        u = std::move(next);
    }
    return u;
}

inline PolynomialFunctional picard_iterate(const LatticeSpec& s, double t, const Freq& x, int N,
                                           const CovarianceOperator& cov, PropagatorKind k = PropagatorKind::wave)
{
    check_solver_args(s, N);
    if (N == 0) return PolynomialFunctional(1.0);
    auto prev = picard_cell_levels(s, N - 1, cov, k);
    return PolynomialFunctional(1.0) + divergence(picard_integrand(s, t, x, prev, k), cov);
}

inline double second_moment_exact(const PolynomialFunctional& u, const CovarianceOperator& cov,
                                  int cap = kDefaultDegreeCap)
{
    if (2 * u.degree() > cap) throw CapExceeded("second_moment_exact: degree above cap / 2");
    return wick_expectation(u * u, cov, cap);
}

// 1 + sum_n n! ||f~_n||^2.
inline double orthogonality_sum(const LatticeSpec& s, double t, const Freq& x, int N, const CovarianceOperator& cov,
                                PropagatorKind k = PropagatorKind::wave)
{
    check_solver_args(s, N);
    double m = 1;
    for (int n = 1; n <= N; ++n) {
        auto f = discretize_fn(k, s, t, x, n);
        m += factorial(n) * hp_inner_product(f, f, cov);
    }
    return m;
}

// Lattice points: t_k = k dt at space cell midpoints.
struct FieldPoint {
    int time_index = 0;
    std::array<int, 3> space{0, 0, 0};
};

inline std::size_t space_flat(const LatticeSpec& s, const std::array<int, 3>& sp)
{
    std::size_t j = 0;
    for (int k = 0; k < s.d; ++k) j = j * s.n_x + sp[k];
    return j;
}

inline Freq point_x(const LatticeSpec& s, const FieldPoint& p)
{
    Cell c;
    c.time_index = 0;
    c.space_index = p.space;
    return mid_point(s, c);
}

struct SolutionField {
    int truncation = 0;
    std::map<std::pair<int, std::size_t>, PolynomialFunctional> values;
};

inline SolutionField build_solution_field(const LatticeSpec& s, int N, const CovarianceOperator& cov,
                                          PropagatorKind k = PropagatorKind::wave)
{
    check_solver_args(s, N);
    SolutionField f;
    f.truncation = N;
    for (int ti = 0; ti <= s.n_t; ++ti)
        for (std::size_t j = 0; j < s.space_cells(); ++j) {
            Cell c = cell_of(s, j);
            FieldPoint p{ti, c.space_index};
            f.values[{ti, j}] = chaos_truncation(s, ti * s.dt(), point_x(s, p), N, cov, k);
        }
    return f;
}

struct SampledField {
    LatticeSpec spec;
    std::vector<FieldPoint> points;
    std::size_t samples = 0;
    std::vector<double> values; // [sample * points.size() + point]

    double at(std::size_t sample, std::size_t point) const { return values[sample * points.size() + point]; }

    nlohmann::json header() const
    {
        nlohmann::json pts = nlohmann::json::array();
        for (auto& p : points) pts.push_back({p.time_index, p.space[0], p.space[1], p.space[2]});
        return {{"format", "wavechaos.field.f64"}, {"layout", "sample-major"}, {"samples", samples},
                {"points", points.size()}, {"count", values.size()}, {"spec", spec.canonical()},
                {"spec_hash", spec.hash()}, {"point_index", pts}};
    }
};

inline SampledField sample_field(const LatticeSpec& s, int N, const CovarianceOperator& cov, const MCConfig& mc,
                                 const std::vector<FieldPoint>& points, PropagatorKind k = PropagatorKind::wave)
{
    check_solver_args(s, N);
    require(cov.dim() == s.cell_count(), "sample_field: covariance does not match the lattice");
    std::vector<PolynomialFunctional> polys;
    polys.reserve(points.size());
    for (auto& p : points) {
        require(p.time_index >= 0 && p.time_index <= s.n_t, "sample_field: time index out of range");
        polys.push_back(chaos_truncation(s, p.time_index * s.dt(), point_x(s, p), N, cov, k));
    }
    SampledField out;
    out.spec = s;
    out.points = points;
    out.samples = mc.samples;
    out.values.assign(mc.samples * points.size(), 0.0);
    for_each_noise_chunk(cov, mc.seed, mc.samples, mc.threads,
                         [&](std::size_t, std::size_t first, const Eigen::MatrixXd& blk) {
                             for (Eigen::Index c = 0; c < blk.cols(); ++c) {
                                 const double* w = blk.col(c).data();
                                 double* row = &out.values[(first + c) * points.size()];
                                 for (std::size_t p = 0; p < polys.size(); ++p) row[p] = polys[p].evaluate(w);
                             }
                         });
    return out;
}

enum class HolderAxis { time, space };

// Regress log E|u(p + h) - u(p)|^2 on log h over dyadic lags; exponent = slope / 2.
// max_lag (in cells) caps the lags used; 0 means no cap.
inline EstimateReport holder_fit(const SampledField& f, HolderAxis axis, double target, int max_lag = 0)
{
    EstimateReport r;
    r.name = axis == HolderAxis::time ? "holder_time" : "holder_space";
    const auto& s = f.spec;
    double unit = axis == HolderAxis::time ? s.dt() : s.dx();
    // Index pairs per lag (in cells).
    std::map<std::array<int, 4>, std::size_t> where;
    for (std::size_t p = 0; p < f.points.size(); ++p) {
        auto& q = f.points[p];
        where[{q.time_index, q.space[0], q.space[1], q.space[2]}] = p;
    }
    std::vector<int> lags;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> pairs;
    for (int lag = 1; max_lag <= 0 || lag <= max_lag; lag *= 2) {
        std::vector<std::pair<std::size_t, std::size_t>> pl;
        for (std::size_t p = 0; p < f.points.size(); ++p) {
            auto q = f.points[p];
            std::array<int, 4> key{q.time_index, q.space[0], q.space[1], q.space[2]};
            key[axis == HolderAxis::time ? 0 : 1] += lag;
            auto it = where.find(key);
            if (it != where.end()) pl.emplace_back(p, it->second);
        }
        if (pl.empty()) break;
        lags.push_back(lag);
        pairs.push_back(std::move(pl));
    }
    r.meta = {{"axis", axis == HolderAxis::time ? "time" : "space"}, {"target", target}, {"lags", lags},
              {"samples", f.samples}, {"spec_hash", s.hash()}};
    if (lags.size() < 4)
        throw InsufficientData("holder_fit: " + std::to_string(lags.size()) + " dyadic lags available, need 4");
    std::vector<double> lx, ly, w, m_out, se_out;
    bool degenerate = true;
    for (std::size_t l = 0; l < lags.size(); ++l) {
        auto& pl = pairs[l];
        auto st = sample_stat(f.samples, [&](std::size_t i) {
            double acc = 0;
            for (auto [a, b] : pl) {
                double d = f.at(i, b) - f.at(i, a);
                acc += d * d;
            }
            return acc / static_cast<double>(pl.size());
        });
        m_out.push_back(st.mean);
        se_out.push_back(st.se);
        if (st.mean > 1e-300) degenerate = false;
        lx.push_back(std::log(lags[l] * unit));
        ly.push_back(std::log(std::max(st.mean, 1e-300)));
        double rel = st.mean > 0 ? st.se / st.mean : 1.0;
        w.push_back(1.0 / std::max(rel * rel, 1e-12));
    }
    r.meta["moments"] = m_out;
    r.meta["moment_se"] = se_out;
    if (degenerate) {
        r.value = std::nan("");
        r.pass = false;
        r.status = Status::degenerate;
        return r;
    }
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sw += w[i];
        sx += w[i] * lx[i];
        sy += w[i] * ly[i];
    }
    double xb = sx / sw, yb = sy / sw, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += w[i] * (lx[i] - xb) * (lx[i] - xb);
        sxy += w[i] * (lx[i] - xb) * (ly[i] - yb);
    }
    double slope = sxy / sxx;
    // Residual-scaled slope variance.
    double rss = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        double e = ly[i] - (yb + slope * (lx[i] - xb));
        rss += w[i] * e * e;
    }
    double dof = static_cast<double>(lx.size()) - 2;
    double scale = std::max(1.0, rss / dof);
    double slope_se = std::sqrt(scale / sxx);
    double z = boost::math::quantile(boost::math::normal(), 0.975);
    r.value = slope / 2;
    r.error_estimate = z * slope_se / 2;
    r.bound = target;
    r.meta["slope"] = slope;
    r.meta["ci95"] = {r.value - r.error_estimate, r.value + r.error_estimate};
    if (r.value >= target)
        r.set(true);
    else
        r.set(false, r.value + r.error_estimate >= target ? Status::warning : Status::fail);
    return r;
}

// Du_N = G(t - ., x - *) u_{N-1} + delta*(U), U_{c, r} = G(t - s_c, x - y_c) D_r u_{N-1}(c).
inline EstimateReport derivative_equation_check(const LatticeSpec& s, double t, const Freq& x, int N,
                                                const CovarianceOperator& cov,
                                                PropagatorKind k = PropagatorKind::wave)
{
    check_solver_args(s, N);
    require(N >= 1, "derivative_equation_check: N must be >= 1");
    auto lhs = derivative(picard_iterate(s, t, x, N, cov, k));
    auto prev = picard_cell_levels(s, N - 1, cov, k);
    HPValuedFunctional rhs;
    HP2ValuedFunctional U;
    for (std::size_t c = 0; c < prev.size(); ++c) {
        Cell cc = cell_of(s, c);
        double g = lattice_green(k, s, t - time_mid(s, cc), diff(x, mid_point(s, cc)));
        if (g == 0) continue;
        rhs.add(static_cast<CellIndex>(c), prev[c] * g);
        for (auto& [r, p] : derivative(prev[c]).components) U.add(static_cast<CellIndex>(c), r, p * g);
    }
    for (auto& [r, p] : hilbert_divergence(U, cov).components) rhs.add(r, p);
    double dev = max_abs_diff(lhs, rhs);
    EstimateReport rep;
    rep.name = "derivative_equation";
    rep.value = dev;
    rep.bound = 1e-10;
    rep.error_estimate = 0;
    rep.set(dev <= 1e-10);
    double dn = wick_expectation(hp_pairing(lhs, lhs, cov), cov);
    rep.meta = {{"N", N}, {"t", t}, {"spec_hash", s.hash()}, {"E_norm_Du_sq", dn}};
    return rep;
}

} // namespace wavechaos
