#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <thread>
#include <tuple>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "errors.hpp"
#include "lattice_gaussian.hpp"
#include "mc.hpp"
#include "propagators.hpp"
#include "report.hpp"

namespace wavechaos {

enum class TailMode { analytic_bound, extended };

struct QuadratureConfig {
    double cutoff = 64;  // bulk radius in units of the kernel scale
    int panels = 8;      // panels per 2*pi kernel scales
    TailMode tail_mode = TailMode::extended;
    double rel_tol = 1e-10;

    void validate() const
    {
        require(cutoff > 0, "quadrature cutoff must be > 0");
        require(panels >= 1, "quadrature panels must be >= 1");
        require(rel_tol > 0 && rel_tol <= 1e-2, "quadrature rel_tol must lie in (0, 1e-2]");
    }
};

struct ModelParams {
    int d = 1;
    double alpha = 0.5;
    double H = 0.75;
};

inline double kappa(double alpha, int d) { return alpha - d + 2; }

inline double sphere_area(int d)
{
    switch (d) {
    case 1: return 2.0;
    case 2: return 2 * M_PI;
    case 3: return 4 * M_PI;
    }
    throw DomainError("dimension must be 1, 2 or 3");
}

inline void check_admissible(PropagatorKind k, double alpha, int d)
{
    require(d >= 1 && d <= 3, "d must be 1, 2 or 3");
    if (!(alpha > 0 && alpha < d)) throw DomainError("alpha must lie in (0, d)");
    if (k == PropagatorKind::wave && !(alpha > d - 2))
        throw DomainError("wave estimates need d - 2 < alpha < d");
}

inline void check_model(PropagatorKind k, const ModelParams& m)
{
    check_admissible(k, m.alpha, m.d);
    require(m.H > 0.5 && m.H < 1, "H must lie in (1/2, 1)");
}

// Homogeneity of one level: I(a, rho) = a^e Lambda(a^p rho).
inline double level_exponent(PropagatorKind k, double alpha, int d)
{
    return k == PropagatorKind::wave ? kappa(alpha, d) : -(d - alpha) / 2;
}
inline double level_power(PropagatorKind k) { return k == PropagatorKind::wave ? 1.0 : 0.5; }
// Kernel parameter of |FG(u)|^2: sin^2(u r)/r^2, or exp(-a r^2 / 2) with a = 2u.
inline double level_a(PropagatorKind k, double u) { return k == PropagatorKind::wave ? u : 2 * u; }

namespace detail {

enum class Kernel { wave, heat, uniform };

inline Kernel kernel_of(PropagatorKind k) { return k == PropagatorKind::wave ? Kernel::wave : Kernel::heat; }

inline boost::math::quadrature::tanh_sinh<double>& tanh_sinh_rule()
{
    static thread_local boost::math::quadrature::tanh_sinh<double> ts(12);
    return ts;
}

// 4 int_0^{pi/2} (delta^2 + 4 r rho sin^2 phi)^{-alpha/2} dphi
inline double angular2(double alpha, double r, double rho, double delta)
{
    double M = std::max(r, rho), m = std::min(r, rho), eps = m / M;
    double s = alpha / 2;
    if (eps < 0.5) {
        // 2 pi M^{-alpha} 2F1(s, s; 1; eps^2)
        double term = 1, sum = 1, e2 = eps * eps;
        for (int k = 0; k < 200; ++k) {
            double f = (s + k) / (k + 1.0);
            term *= f * f * e2;
            sum += term;
            if (term < 1e-17 * sum) break;
        }
        return 2 * M_PI * std::pow(M, -alpha) * sum;
    }
    double c = 4 * r * rho, d2 = delta * delta;
    auto f = [&](double phi) {
        double sp = std::sin(phi);
        return std::pow(d2 + c * sp * sp, -s);
    };
    double phi0 = std::min(M_PI / 4, 8 * delta / std::sqrt(c));
    double v = 0;
    if (phi0 > 0) v += tanh_sinh_rule().integrate(f, 0.0, phi0, 1e-12);
    v += tanh_sinh_rule().integrate(f, std::max(phi0, 0.0), M_PI / 2, 1e-12);
    return 4 * v;
}

// Angular integral of |r theta - eta|^{-alpha} over the unit sphere, |eta| = rho, delta = |r - rho|.
inline double angular(int d, double alpha, double r, double rho, double delta)
{
    if (rho == 0) return sphere_area(d) * std::pow(r, -alpha);
    if (r == 0) return sphere_area(d) * std::pow(rho, -alpha);
    delta = std::max(delta, 1e-100 * std::max(r, rho));
    switch (d) {
    case 1: return std::pow(delta, -alpha) + std::pow(r + rho, -alpha);
    case 2: return angular2(alpha, r, rho, delta);
    default: {
        double M = std::max(r, rho), m = std::min(r, rho), eps = m / M, b = 2 - alpha;
        if (eps < 1e-2) {
            double c3 = (b - 1) * (b - 2) / 6, c5 = (b - 1) * (b - 2) * (b - 3) * (b - 4) / 120;
            double e2 = eps * eps;
            return 4 * M_PI * std::pow(M, -alpha) * (1 + c3 * e2 + c5 * e2 * e2);
        }
        return 2 * M_PI * (std::pow(r + rho, b) - std::pow(delta, b)) / (r * rho * b);
    }
    }
}

struct Radial {
    double value = 0;
    double error = 0;
    double tail = 0;
};

// int_0^inf r^{d-1} k(r) w(r) A_d(r, rho) dr, k = sin^2(a r)/r^2, exp(-a r^2/2) or (1 + r^2)^{-a}.
template <class W>
Radial radial(Kernel K, double a, double rho, double alpha, int d, const QuadratureConfig& q, const W& w)
{
    using boost::math::quadrature::gauss_kronrod;
    double scale = K == Kernel::wave ? 1 / a : K == Kernel::heat ? 1 / std::sqrt(a) : 1.0;
    double width = 2 * M_PI * scale / q.panels;
    double R = K == Kernel::heat ? rho + std::sqrt(80.0 / a) : q.cutoff * scale + 2 * rho;
    auto kern = [&](double r) -> double {
        switch (K) {
        case Kernel::wave: {
            double x = a * r;
            if (x < 1e-4) return a * a * (1 - x * x / 3);
            double sn = std::sin(x) / r;
            return sn * sn;
        }
        case Kernel::heat: return std::exp(-0.5 * a * r * r);
        default: return std::pow(1 + r * r, -a);
        }
    };
    double omega = sphere_area(d);
    auto f = [&](double r, double delta) {
        if (rho == 0) return omega * std::pow(r, d - 1 - alpha) * kern(r) * w(r);
        return std::pow(r, d - 1) * kern(r) * w(r) * angular(d, alpha, r, rho, delta);
    };

    std::vector<double> bp;
    std::size_t np = static_cast<std::size_t>(std::ceil(R / width));
    for (std::size_t i = 0; i < np; ++i) bp.push_back(static_cast<double>(i) * width);
    bp.push_back(R);
    if (rho > 0) {
        auto it = std::lower_bound(bp.begin(), bp.end(), rho);
        if (it != bp.end() && std::fabs(*it - rho) < 1e-9 * width)
            *it = rho;
        else if (it != bp.begin() && std::fabs(*(it - 1) - rho) < 1e-9 * width)
            *(it - 1) = rho;
        else
            bp.insert(it, rho);
    }

    Radial out;
    auto& ts = tanh_sinh_rule();
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
        double x0 = bp[i], x1 = bp[i + 1];
        bool left = x0 == rho, right = rho > 0 && x1 == rho;
        double err = 0, v;
        if (left || right) {
            auto g = [&](double x, double xc) {
                double delta;
                if (xc < 0) {
                    delta = left ? -xc : std::fabs(x - rho);
                    x = x0 - xc;
                } else {
                    delta = right ? xc : std::fabs(x - rho);
                    x = x1 - xc;
                }
                if (x <= 0 || (rho > 0 && delta <= 0)) return 0.0;
                return f(x, delta);
            };
            v = ts.integrate(g, x0, x1, q.rel_tol, &err);
        } else {
            v = gauss_kronrod<double, 21>::integrate([&](double x) { return f(x, std::fabs(x - rho)); }, x0, x1, 10,
                                                     q.rel_tol, &err);
        }
        out.value += v;
        out.error += err;
    }

    if (K == Kernel::heat) {
        out.error += std::pow(R, d) * std::exp(-0.5 * a * R * R) * w(R) * angular(d, alpha, R, rho, R - rho);
        return out;
    }
    // Tail r > R, mapped to v = R / r in (0, 1].
    auto F = [&](double r) {
        double base = std::pow(r, d - 1) * w(r) * angular(d, alpha, r, rho, r - rho);
        return K == Kernel::wave ? base / (r * r) : base * std::pow(1 + r * r, -a);
    };
    auto mapped = [&](double v) {
        double r = R / v;
        if (!(r < 1e150)) return 0.0;
        return F(r) * R / (v * v);
    };
    double terr = 0;
    double mean = ts.integrate(mapped, 0.0, 1.0, q.rel_tol, &terr);
    if (K == Kernel::uniform) {
        out.tail = mean;
        out.value += mean;
        out.error += terr;
        return out;
    }
    // sin^2 = 1/2 - cos(2 a r)/2
    mean *= 0.5;
    terr *= 0.5;
    if (q.tail_mode == TailMode::analytic_bound) {
        out.tail = 2 * mean;
        out.value += out.tail;
        out.error += out.tail;
        return out;
    }
    // int_R^inf cos(w r) F = -sin F / w - cos F' / w^2 + sin F'' / w^3 + cos F''' / w^4 + ...
    double h = 1e-2 * R;
    double f0 = F(R), fp1 = F(R + h), fm1 = F(R - h), fp2 = F(R + 2 * h), fm2 = F(R - 2 * h);
    double d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h);
    double d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h);
    double d3 = (fp2 - 2 * fp1 + 2 * fm1 - fm2) / (2 * h * h * h);
    double w2 = 2 * a, sn = std::sin(w2 * R), cs = std::cos(w2 * R);
    double osc = -0.5 * (-sn * f0 / w2 - cs * d1 / (w2 * w2) + sn * d2 / (w2 * w2 * w2) + cs * d3 / std::pow(w2, 4));
    out.tail = mean + osc;
    out.value += out.tail;
    out.error += terr + 0.5 * std::fabs(d3) / std::pow(w2, 4);
    return out;
}

inline double one(double) { return 1.0; }

} // namespace detail

// int sin^2(t|xi|)/|xi|^2 |xi - eta|^{-alpha} dxi (wave) or int exp(-t|xi|^2/2) |xi - eta|^{-alpha} dxi (heat).
inline detail::Radial lemma_integral_detail(PropagatorKind k, double t, const Freq& eta, double alpha, int d,
                                            const QuadratureConfig& q = {})
{
    check_admissible(k, alpha, d);
    q.validate();
    require(t > 0, "lemma_integral: t must be > 0");
    require(eta.empty() || static_cast<int>(eta.size()) == d, "lemma_integral: eta dimension differs from d");
    double rho = eta.empty() ? 0.0 : norm(eta);
    return detail::radial(detail::kernel_of(k), t, rho, alpha, d, q, detail::one);
}

inline double lemma_integral(PropagatorKind k, double t, const Freq& eta, double alpha, int d,
                             const QuadratureConfig& q = {})
{
    return lemma_integral_detail(k, t, eta, alpha, d, q).value;
}

inline Freq along_axis(int d, double v)
{
    Freq e(d, 0.0);
    e[0] = v;
    return e;
}

// Sup of lemma_integral(1, eta) over a grid of eta = v e_1.
inline EstimateReport lemma_sup_constant(PropagatorKind k, double alpha, int d, const std::vector<double>& eta_grid,
                                         const QuadratureConfig& q = {})
{
    check_admissible(k, alpha, d);
    require(!eta_grid.empty(), "lemma_sup_constant: empty eta grid");
    std::vector<double> vals;
    double best = -1, err = 0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < eta_grid.size(); ++i) {
        auto r = lemma_integral_detail(k, 1.0, along_axis(d, eta_grid[i]), alpha, d, q);
        vals.push_back(r.value);
        if (r.value > best) {
            best = r.value;
            arg = i;
            err = r.error;
        }
    }
    double amax = 0;
    for (double e : eta_grid) amax = std::max(amax, std::fabs(e));
    EstimateReport rep;
    rep.name = std::string("lemma_sup_constant_") + to_string(k);
    rep.value = best;
    rep.error_estimate = err;
    rep.bound = std::numeric_limits<double>::infinity();
    bool at_edge = std::fabs(eta_grid[arg]) >= amax;
    // Values at the two outermost |eta| levels still increasing outward.
    double outer = -1, inner = -1, r1 = -1, r2 = -1;
    for (std::size_t i = 0; i < eta_grid.size(); ++i) {
        double m = std::fabs(eta_grid[i]);
        if (m > r1) {
            r2 = r1;
            inner = outer;
            r1 = m;
            outer = vals[i];
        } else if (m < r1 && m > r2) {
            r2 = m;
            inner = vals[i];
        }
    }
    bool rising = inner >= 0 && outer > inner;
    rep.set(std::isfinite(best) && !at_edge && !rising, Status::warning);
    rep.meta = {{"kind", to_string(k)}, {"alpha", alpha}, {"d", d}, {"argmax_eta", eta_grid[arg]},
                {"grid_points", eta_grid.size()}, {"boundary_rising", rising || at_edge}, {"values", vals}};
    return rep;
}

namespace detail {

// Lambda(rho) = I(1, rho) on a z = log(1 + rho) grid; rho^{-alpha} decay beyond the grid.
class LevelTable {
public:
    LevelTable(PropagatorKind k, double alpha, int d, double rho_max = 200, std::size_t nodes = 512)
        : alpha_(alpha), rho_max_(rho_max)
    {
        QuadratureConfig q;
        double zmax = std::log1p(rho_max);
        double h = zmax / static_cast<double>(nodes - 1);
        std::vector<double> v(nodes);
        for (std::size_t i = 0; i < nodes; ++i) {
            double rho = std::expm1(static_cast<double>(i) * h);
            v[i] = radial(kernel_of(k), 1.0, i == 0 ? 0.0 : rho, alpha, d, q, one).value;
        }
        zero_ = v[0];
        end_ = v.back();
        spline_ = std::make_unique<boost::math::interpolators::cardinal_cubic_b_spline<double>>(v.data(), v.size(), 0.0,
                                                                                                 h, 0.0);
    }

    double operator()(double rho) const
    {
        rho = std::fabs(rho);
        if (rho >= rho_max_) return end_ * std::pow(rho / rho_max_, -alpha_);
        return (*spline_)(std::log1p(rho));
    }

    double at_zero() const { return zero_; }

private:
    double alpha_, rho_max_, zero_ = 0, end_ = 0;
    std::unique_ptr<boost::math::interpolators::cardinal_cubic_b_spline<double>> spline_;
};

inline const LevelTable& level_table(PropagatorKind k, double alpha, int d)
{
    static std::mutex mu;
    static std::map<std::tuple<int, double, int>, std::unique_ptr<LevelTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{static_cast<int>(k), alpha, d}];
    if (!slot) slot = std::make_unique<LevelTable>(k, alpha, d);
    return *slot;
}

// One level: int |FG(u)(xi)|^2 |xi - eta|^{-alpha} dxi at |eta| = r.
inline double level_I(PropagatorKind k, double u, double r, const LevelTable& tab, double alpha, int d)
{
    if (u <= 0) return 0.0;
    double a = level_a(k, u);
    return std::pow(a, level_exponent(k, alpha, d)) * tab(std::pow(a, level_power(k)) * r);
}

// Radial interpolant on a log grid, even in its argument.
class LogGridFunction {
public:
    template <class F>
    LogGridFunction(F&& f, double s0, double smax, double alpha, std::size_t nodes) : s0_(s0), smax_(smax), alpha_(alpha)
    {
        double zmax = std::log1p(smax / s0);
        double h = zmax / static_cast<double>(nodes - 1);
        std::vector<double> v(nodes);
        for (std::size_t i = 0; i < nodes; ++i) v[i] = f(i == 0 ? 0.0 : s0 * std::expm1(static_cast<double>(i) * h));
        end_ = v.back();
        spline_ = std::make_unique<boost::math::interpolators::cardinal_cubic_b_spline<double>>(v.data(), v.size(), 0.0,
                                                                                                 h, 0.0);
    }

    double operator()(double s) const
    {
        s = std::fabs(s);
        if (s >= smax_) return end_ * std::pow(s / smax_, -alpha_);
        return (*spline_)(std::log1p(s / s0_));
    }

private:
    double s0_, smax_, alpha_, end_ = 0;
    std::unique_ptr<boost::math::interpolators::cardinal_cubic_b_spline<double>> spline_;
};

} // namespace detail

// Innermost level as sum_c coef_c |FG(u_c)|^2.
using LevelCombo = std::vector<std::pair<double, double>>;

// Nested diagonal integral with outer gaps u_1..u_{n-1} and a combination in the innermost level.
inline double psi_nested(PropagatorKind k, const std::vector<double>& outer, const LevelCombo& inner, double alpha,
                         int d, const QuadratureConfig& q = {})
{
    check_admissible(k, alpha, d);
    if (outer.size() > 2) throw CapExceeded("nested integrals are limited to 3 levels");
    if (!outer.empty()) require(d == 1, "nested levels beyond the first need d = 1");
    for (double u : outer) require(u > 0, "gaps must be positive");
    const auto& tab = detail::level_table(k, alpha, d);
    auto last = [&](double r) {
        double s = 0;
        for (auto [c, u] : inner) s += c * detail::level_I(k, u, r, tab, alpha, d);
        return s;
    };
    auto K = detail::kernel_of(k);
    if (outer.empty()) return last(0.0);
    if (outer.size() == 1) return detail::radial(K, level_a(k, outer[0]), 0.0, alpha, d, q, last).value;
    double umax = outer[1], umin = outer[1];
    for (auto [c, u] : inner)
        if (u > 0) {
            umax = std::max(umax, u);
            umin = std::min(umin, u);
        }
    double p = level_power(k);
    double s0 = 1 / std::pow(level_a(k, umax), p);
    double smax = 256 / std::pow(level_a(k, umin), p);
    detail::LogGridFunction M(
        [&](double sigma) { return detail::radial(K, level_a(k, outer[1]), sigma, alpha, d, q, last).value; }, s0,
        smax, alpha, 128);
    return detail::radial(K, level_a(k, outer[0]), 0.0, alpha, d, q, M).value;
}

// Gaps of sorted times relative to the horizon: u_j = t_{j+1} - t_j, u_n = t - t_n.
inline std::vector<double> gaps_of(std::vector<double> times, double t)
{
    std::sort(times.begin(), times.end());
    std::vector<double> u(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) u[j] = (j + 1 < times.size() ? times[j + 1] : t) - times[j];
    return u;
}

inline double psi_tilde_diagonal(PropagatorKind k, const std::vector<double>& times, double t, double alpha, int d,
                                 const QuadratureConfig& q = {})
{
    check_admissible(k, alpha, d);
    std::size_t n = times.size();
    require(n >= 1, "psi_tilde_diagonal: need at least one time");
    if (n > 3) throw CapExceeded("psi_tilde_diagonal: n above 3");
    for (double s : times) require(s > 0 && s < t, "psi_tilde_diagonal: times must lie in (0, t)");
    auto u = gaps_of(times, t);
    if (n == 1) return lemma_integral(k, level_a(k, u[0]), {}, alpha, d, q);
    std::vector<double> outer(u.begin(), u.end() - 1);
    return psi_nested(k, outer, {{1.0, u.back()}}, alpha, d, q);
}

namespace detail {

// psi~^{(n)} diagonal divided by prod a_j^e as a function of the gap shape.
class ShapeTable {
public:
    ShapeTable(PropagatorKind k, double alpha, int n) : k_(k), alpha_(alpha), n_(n)
    {
        QuadratureConfig q;
        q.rel_tol = 1e-8;
        if (n == 2) {
            std::vector<double> v(kN2);
            for (int i = 0; i < kN2; ++i) {
                double s = (i + 0.5) / kN2;
                v[i] = normalized({s, 1 - s}, q);
            }
            h2_ = 1.0 / kN2;
            spline_ = std::make_unique<boost::math::interpolators::cardinal_cubic_b_spline<double>>(v.data(), v.size(),
                                                                                                     0.5 * h2_, h2_);
        } else {
            grid_.resize(kN3 * kN3);
            for (int i = 0; i < kN3; ++i)
                for (int j = 0; j < kN3; ++j) {
                    double x = (i + 0.5) / kN3, y = (j + 0.5) / kN3;
                    grid_[i * kN3 + j] = normalized({x, (1 - x) * y, (1 - x) * (1 - y)}, q);
                }
        }
    }

    double operator()(const std::vector<double>& u) const
    {
        double tot = 0;
        for (double v : u) tot += v;
        double norm = 1, e = level_exponent(k_, alpha_, 1);
        for (double v : u) norm *= std::pow(level_a(k_, v), e);
        if (n_ == 2) {
            double s = std::clamp(u[0] / tot, 0.5 * h2_, 1 - 0.5 * h2_);
            return norm * (*spline_)(s);
        }
        double x = u[0] / tot, y = u[1] + u[2] > 0 ? u[1] / (u[1] + u[2]) : 0.5;
        auto idx = [](double c, int& i, double& f) {
            double g = std::clamp(c * kN3 - 0.5, 0.0, kN3 - 1.0);
            i = std::min(static_cast<int>(g), kN3 - 2);
            f = g - i;
        };
        int i, j;
        double fx, fy;
        idx(x, i, fx);
        idx(y, j, fy);
        auto G = [&](int a, int b) { return grid_[a * kN3 + b]; };
        double v = (1 - fx) * ((1 - fy) * G(i, j) + fy * G(i, j + 1)) + fx * ((1 - fy) * G(i + 1, j) + fy * G(i + 1, j + 1));
        return norm * v;
    }

private:
    static constexpr int kN2 = 48;
    static constexpr int kN3 = 12;

    double normalized(const std::vector<double>& u, const QuadratureConfig& q) const
    {
        std::vector<double> outer(u.begin(), u.end() - 1);
        double v = psi_nested(k_, outer, {{1.0, u.back()}}, alpha_, 1, q);
        double e = level_exponent(k_, alpha_, 1);
        for (double x : u) v /= std::pow(level_a(k_, x), e);
        return v;
    }

    PropagatorKind k_;
    double alpha_;
    int n_;
    double h2_ = 0;
    std::unique_ptr<boost::math::interpolators::cardinal_cubic_b_spline<double>> spline_;
    std::vector<double> grid_;
};

inline const ShapeTable& shape_table(PropagatorKind k, double alpha, int n)
{
    static std::mutex mu;
    static std::map<std::tuple<int, double, int>, std::unique_ptr<ShapeTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{static_cast<int>(k), alpha, n}];
    if (!slot) slot = std::make_unique<ShapeTable>(k, alpha, n);
    return *slot;
}

// Mixed first-order integral int FG(u) FG(v) mu(dxi).
inline double mixed_P(PropagatorKind k, double C0, double u, double v, double alpha, int d)
{
    double e = level_exponent(k, alpha, d);
    if (k == PropagatorKind::wave) {
        double s = 0.5 * (u + v), m = 0.5 * std::fabs(u - v);
        return C0 * (std::pow(s, e) - (m > 0 ? std::pow(m, e) : 0.0));
    }
    return C0 * std::pow(u + v, e);
}

// Importance sampler for pairs (t_j, s_j) on [0, t]^2 with weight |t_j - s_j|^{2H - 2}.
struct PairSampler {
    double t, H, beta;

    // Returns weight (zero when s falls outside (lo, t)).
    template <class Rng>
    double draw(Rng& rng, double& tj, double& sj, double lo = 0.0) const
    {
        std::uniform_real_distribution<double> U(0.0, 1.0);
        tj = lo + (t - lo) * U(rng);
        double g = t * std::pow(U(rng), 1 / (beta + 1));
        if (U(rng) < 0.5) g = -g;
        sj = tj + g;
        double ag = std::fabs(g);
        double w = (t - lo) * 2 * std::pow(t, beta + 1) / (beta + 1) * std::pow(ag, 2 * H - 2 - beta);
        if (!(sj > lo && sj < t)) return 0.0;
        return w;
    }
};

inline double sampler_beta(const MCConfig& mc, double H)
{
    double b = std::isnan(mc.importance_beta) ? 2 * H - 2 : mc.importance_beta;
    require(b > -1 && b <= 0, "importance_beta must lie in (-1, 0]");
    return b;
}

// Chunked MC: fn(rng) returns one sample value; deterministic in (seed, samples).
template <class F>
MeanSE mc_mean(const MCConfig& mc, std::size_t samples, F&& fn)
{
    std::size_t chunks = (samples + kNoiseChunk - 1) / kNoiseChunk;
    std::vector<double> s1(chunks, 0.0), s2(chunks, 0.0);
    auto work = [&](std::size_t c) {
        auto rng = chunk_rng(mc.seed, c);
        std::size_t m = std::min(kNoiseChunk, samples - c * kNoiseChunk);
        for (std::size_t i = 0; i < m; ++i) {
            double v = fn(rng);
            s1[c] += v;
            s2[c] += v * v;
        }
    };
    if (mc.threads <= 1 || chunks <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) work(c);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < mc.threads; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t c = w; c < chunks; c += mc.threads) work(c);
            });
        for (auto& th : pool) th.join();
    }
    double a = 0, b = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
        a += s1[c];
        b += s2[c];
    }
    double n = static_cast<double>(samples);
    MeanSE r;
    r.mean = a / n;
    double var = std::max(0.0, (b - n * r.mean * r.mean) / (n - 1));
    r.se = std::sqrt(var / n);
    return r;
}

} // namespace detail

// alpha~_n(t) = alpha_H^n int_{[0,t]^{2n}} prod |t_j - s_j|^{2H-2} psi~^{(n)}(t, s) dt ds.
// n = 1 uses the exact mixed integral; n = 2, 3 the Cauchy-Schwarz diagonal surrogate.
inline EstimateReport alpha_tilde_mc(PropagatorKind k, int n, double t, const ModelParams& m, const MCConfig& mc,
                                     const QuadratureConfig& q = {})
{
    check_model(k, m);
    mc.validate();
    q.validate();
    require(t > 0, "alpha_tilde_mc: t must be > 0");
    require(n >= 0, "alpha_tilde_mc: n must be >= 0");
    if (n > 3) throw CapExceeded("alpha_tilde_mc: n above 3");
    if (n >= 2) require(m.d == 1, "alpha_tilde_mc: n >= 2 needs d = 1");
    EstimateReport r;
    r.name = "alpha_tilde";
    r.meta = {{"kind", to_string(k)}, {"n", n}, {"t", t}, {"d", m.d}, {"alpha", m.alpha}, {"H", m.H},
              {"samples", mc.samples}, {"seed", mc.seed}};
    if (n == 0) {
        r.value = 1;
        r.set(true);
        return r;
    }
    double aH = m.H * (2 * m.H - 1);
    detail::PairSampler ps{t, m.H, detail::sampler_beta(mc, m.H)};
    MeanSE st;
    if (n == 1) {
        double C0 = lemma_integral(k, 1.0, {}, m.alpha, m.d, q);
        st = detail::mc_mean(mc, mc.samples, [&](auto& rng) {
            double tj, sj;
            double w = ps.draw(rng, tj, sj);
            if (w == 0) return 0.0;
            return aH * w * detail::mixed_P(k, C0, t - tj, t - sj, m.alpha, m.d);
        });
    } else {
        const auto& tab = detail::shape_table(k, m.alpha, n);
        st = detail::mc_mean(mc, mc.samples, [&](auto& rng) {
            std::vector<double> ts(n), ss(n);
            double w = 1;
            for (int j = 0; j < n; ++j) w *= aH * ps.draw(rng, ts[j], ss[j]);
            if (w == 0) return 0.0;
            return w * std::sqrt(tab(gaps_of(ts, t)) * tab(gaps_of(ss, t)));
        });
        r.meta["upper_bound_estimate"] = true;
    }
    r.value = st.mean;
    r.error_estimate = st.se;
    r.set(st.se <= 0.2 * std::fabs(st.mean), Status::low_confidence);
    return r;
}

inline double hypercontractive_bound(double p, int n)
{
    if (!(p > 2)) throw DomainError("hypercontractive_bound: p must be > 2");
    require(n >= 0, "hypercontractive_bound: n must be >= 0");
    return std::pow(p - 1, 0.5 * n);
}

// Factorial exponent gamma in alpha~_n <= C^n / (n!)^gamma.
inline double factorial_exponent(PropagatorKind k, double alpha, int d) { return level_exponent(k, alpha, d); }

// S(t) = sum_n alpha~_n(t) / n!; measured terms for n <= min(N, 3), bound terms above,
// tail from sum C^n / (n!)^{gamma + 1} with C(t) = max_n (alpha~_n (n!)^gamma)^{1/n}.
inline EstimateReport series_S(PropagatorKind k, double t, const ModelParams& m, int N, const MCConfig& mc,
                               const QuadratureConfig& q = {})
{
    check_model(k, m);
    require(N >= 0, "series_S: N must be >= 0");
    EstimateReport r;
    r.name = std::string("series_S_") + to_string(k);
    double gamma = factorial_exponent(k, m.alpha, m.d);
    int measured = std::min(N, m.d == 1 ? 3 : 1);
    std::vector<double> terms{1.0}, ses{0.0}, partial{1.0};
    double C = 0, var = 0;
    bool confident = true, upper = false;
    for (int n = 1; n <= measured; ++n) {
        MCConfig mcn = mc;
        mcn.seed = mc.seed + static_cast<std::uint64_t>(n);
        auto a = alpha_tilde_mc(k, n, t, m, mcn, q);
        confident = confident && a.status != Status::low_confidence;
        upper = upper || a.meta.contains("upper_bound_estimate");
        double term = a.value / factorial(n);
        terms.push_back(term);
        ses.push_back(a.error_estimate / factorial(n));
        var += ses.back() * ses.back();
        partial.push_back(partial.back() + term);
        C = std::max(C, std::pow(std::max(a.value, 0.0) * std::pow(factorial(n), gamma), 1.0 / n));
    }
    auto comparison = [&](int n) { return std::pow(C, n) / std::pow(factorial(n), gamma + 1); };
    std::vector<double> bound_terms;
    double extra = 0;
    for (int n = measured + 1; n <= N; ++n) {
        bound_terms.push_back(comparison(n));
        extra += comparison(n);
    }
    double tail = 0;
    if (measured >= 1) {
        for (int n = N + 1; n < N + 400; ++n) {
            double c = comparison(n);
            tail += c;
            if (c < 1e-17 * (partial.back() + tail)) break;
        }
    } else {
        tail = std::numeric_limits<double>::infinity();
    }
    bool increasing = true, below = true;
    std::vector<double> ratios;
    for (std::size_t n = 1; n < terms.size(); ++n) {
        increasing = increasing && terms[n] >= 0;
        below = below && terms[n] <= comparison(static_cast<int>(n)) * (1 + 1e-12);
        if (n >= 2 && terms[n - 1] > 0) ratios.push_back(terms[n] / terms[n - 1]);
    }
    r.value = partial.back();
    r.bound = partial.back() + extra + tail;
    r.error_estimate = std::sqrt(var);
    if (!confident)
        r.set(false, Status::low_confidence);
    else
        r.set(increasing && below);
    r.meta = {{"kind", to_string(k)}, {"t", t}, {"N", N}, {"measured_terms", measured}, {"terms", terms},
              {"term_se", ses}, {"partial_sums", partial}, {"C_t", C}, {"gamma", gamma},
              {"bound_terms", bound_terms}, {"tail", tail}, {"decay_ratios", ratios},
              {"upper_bound_estimate", upper}};
    return r;
}

namespace detail {

// Term coef * (lambda |u + v + c|)^p (sum) or coef * (lambda |u - v + c|)^p (diff).
struct PTerm {
    double coef;
    bool sum;
    double c;
    double lambda;
    double p;
};

// int_{[0,T]^2} |u - v|^{2H-2} sum_terms du dv, reduced to one dimension in g = v - u.
inline double pair_integral(const std::vector<PTerm>& terms, double T, double H, double tol = 1e-12)
{
    if (T <= 0) return 0.0;
    auto G = [](double y, double p) { return (y < 0 ? -1.0 : 1.0) * std::pow(std::fabs(y), p + 1) / (p + 1); };
    auto f = [&](double g) {
        double lo = std::max(0.0, -g), hi = std::min(T, T - g);
        if (hi <= lo) return 0.0;
        double s = 0;
        for (auto& tm : terms) {
            double lp = std::pow(tm.lambda, tm.p);
            if (tm.sum)
                s += tm.coef * lp * (G(2 * hi + g + tm.c, tm.p) - G(2 * lo + g + tm.c, tm.p)) / 2;
            else
                s += tm.coef * lp * (hi - lo) * std::pow(std::fabs(tm.c - g), tm.p);
        }
        return std::pow(std::fabs(g), 2 * H - 2) * s;
    };
    std::vector<double> bp{-T, 0.0, T};
    for (auto& tm : terms) {
        for (double b : tm.sum ? std::vector<double>{-tm.c, tm.c, -2 * T - tm.c, 2 * T + tm.c} : std::vector<double>{tm.c})
            if (b > -T && b < T) bp.push_back(b);
    }
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    double total = 0;
    auto& ts = tanh_sinh_rule();
    for (std::size_t i = 0; i + 1 < bp.size(); ++i)
        if (bp[i + 1] > bp[i]) total += ts.integrate(f, bp[i], bp[i + 1], tol);
    return total;
}

// P(u + c1, v + c2) as PTerms.
inline std::vector<PTerm> shifted_P(PropagatorKind k, double C0, double coef, double c1, double c2, double alpha, int d)
{
    double e = level_exponent(k, alpha, d);
    if (k == PropagatorKind::wave)
        return {{coef * C0, true, c1 + c2, 0.5, e}, {-coef * C0, false, c1 - c2, 0.5, e}};
    return {{coef * C0, true, c1 + c2, 1.0, e}};
}

} // namespace detail

enum class IncrementAxis { time, space };

// Second moment of u(t + h, x) - u(t, x) (time) or u(t, x + z) - u(t, x) (space) as
// sum_n (1/n!) 2 (E1 + E2), respectively sum_n (1/n!) E3. n = 1 is exact, n = 2 uses
// the Cauchy-Schwarz diagonal surrogate with MC over times.
inline EstimateReport increment_second_moment(PropagatorKind k, double t, double shift, IncrementAxis axis,
                                              const ModelParams& m, int N, const MCConfig& mc,
                                              const QuadratureConfig& q = {})
{
    check_model(k, m);
    require(t > 0, "increment_second_moment: t must be > 0");
    require(N >= 1, "increment_second_moment: N must be >= 1");
    if (N > 2) throw CapExceeded("increment_second_moment: only n <= 2 terms are evaluated");
    if (axis == IncrementAxis::space) {
        require(m.d == 1, "space increments need d = 1");
        require(k == PropagatorKind::wave, "space increments are implemented for the wave kernel");
    }
    if (N >= 2) {
        require(m.d == 1, "n = 2 increments need d = 1");
        require(k == PropagatorKind::wave, "n = 2 increments are implemented for the wave kernel");
    }
    double h = std::fabs(shift);
    double aH = m.H * (2 * m.H - 1);
    double e = level_exponent(k, m.alpha, m.d);
    double C0 = lemma_integral(k, 1.0, {}, m.alpha, m.d, q);
    EstimateReport r;
    r.name = axis == IncrementAxis::time ? "increment_time" : "increment_space";
    r.meta = {{"kind", to_string(k)}, {"t", t}, {"shift", shift}, {"N", N}, {"d", m.d}, {"alpha", m.alpha},
              {"H", m.H}};
    nlohmann::json levels = nlohmann::json::array();
    double total = 0, var = 0;
    for (int n = 1; n <= N; ++n) {
        double E1 = 0, E2 = 0, E3 = 0, se = 0;
        if (h == 0) {
        } else if (n == 1) {
            using detail::shifted_P;
            if (axis == IncrementAxis::time) {
                std::vector<detail::PTerm> T1;
                for (auto [coef, c1, c2] : std::vector<std::array<double, 3>>{{1, h, h}, {-1, h, 0}, {-1, 0, h}, {1, 0, 0}}) {
                    auto p = shifted_P(k, C0, coef, c1, c2, m.alpha, m.d);
                    T1.insert(T1.end(), p.begin(), p.end());
                }
                E1 = aH * detail::pair_integral(T1, t, m.H);
                E2 = aH * detail::pair_integral(shifted_P(k, C0, 1, 0, 0, m.alpha, m.d), h, m.H);
            } else {
                // C0 sum sigma_i |c_i / 2|^kappa over u - v and u + v shifted by 0, +-z.
                std::vector<detail::PTerm> T3{{-2 * C0, false, 0, 0.5, e}, {2 * C0, true, 0, 0.5, e},
                                              {C0, false, -h, 0.5, e},      {C0, false, h, 0.5, e},
                                              {-C0, true, -h, 0.5, e},      {-C0, true, h, 0.5, e}};
                E3 = aH * detail::pair_integral(T3, t, m.H);
            }
        } else {
            MCConfig mcn = mc;
            mcn.seed = mc.seed + 1000 + static_cast<std::uint64_t>(n);
            std::size_t S = std::max<std::size_t>(mc.nested_samples, 1000);
            detail::PairSampler ps{t, m.H, detail::sampler_beta(mc, m.H)};
            auto diag = [&](const std::vector<double>& times, double horizon, const std::vector<std::array<double, 2>>& combo) {
                auto u = gaps_of(times, horizon);
                LevelCombo lc;
                for (auto [c, du] : combo) lc.push_back({c, du < 0 ? u.back() + (-du - 1) : du});
                return psi_nested(k, {u[0]}, lc, m.alpha, m.d, q);
            };
            // Innermost gap placeholder: -1 - s encodes u_n + s.
            auto innermost = [&](double s) { return -1 - s; };
            if (axis == IncrementAxis::time) {
                std::vector<std::array<double, 2>> c1{{1, innermost(h)}, {1, innermost(0)}, {-2, innermost(h / 2)}, {2, h / 2}};
                auto s1 = detail::mc_mean(mcn, S, [&](auto& rng) {
                    std::vector<double> ts(2), ss(2);
                    double w = 1;
                    for (int j = 0; j < 2; ++j) w *= aH * ps.draw(rng, ts[j], ss[j]);
                    if (w == 0) return 0.0;
                    return w * std::sqrt(std::max(0.0, diag(ts, t, c1)) * std::max(0.0, diag(ss, t, c1)));
                });
                // E2: times in [0, t + h]^2 with at least one coordinate in [t, t + h].
                detail::PairSampler pe{t + h, m.H, detail::sampler_beta(mc, m.H)};
                std::vector<std::array<double, 2>> c2{{1, innermost(0)}};
                MCConfig mce = mcn;
                mce.seed += 7;
                auto s2 = detail::mc_mean(mce, S, [&](auto& rng) {
                    std::vector<double> ts(2), ss(2);
                    double w = 1;
                    for (int j = 0; j < 2; ++j) w *= aH * pe.draw(rng, ts[j], ss[j]);
                    bool inA_t = std::max(ts[0], ts[1]) > t, inA_s = std::max(ss[0], ss[1]) > t;
                    if (w == 0 || !inA_t || !inA_s) return 0.0;
                    return w * std::sqrt(diag(ts, t + h, c2) * diag(ss, t + h, c2));
                });
                E1 = s1.mean;
                E2 = s2.mean;
                se = 2 * std::sqrt(s1.se * s1.se + s2.se * s2.se);
            } else {
                std::vector<std::array<double, 2>> c3{{2, innermost(0)}, {2, h / 2}, {-1, innermost(h / 2)}, {-1, innermost(-h / 2)}};
                auto s3 = detail::mc_mean(mcn, S, [&](auto& rng) {
                    std::vector<double> ts(2), ss(2);
                    double w = 1;
                    for (int j = 0; j < 2; ++j) w *= aH * ps.draw(rng, ts[j], ss[j]);
                    if (w == 0) return 0.0;
                    auto fix = [&](std::vector<double> tt) {
                        auto u = gaps_of(tt, t);
                        LevelCombo lc{{2, u[1]}, {2, h / 2}, {-1, u[1] + h / 2}, {-1, std::fabs(u[1] - h / 2)}};
                        return psi_nested(k, {u[0]}, lc, m.alpha, m.d, q);
                    };
                    return w * std::sqrt(std::max(0.0, fix(ts)) * std::max(0.0, fix(ss)));
                });
                E3 = s3.mean;
                se = s3.se;
            }
        }
        double lvl = axis == IncrementAxis::time ? 2 * (E1 + E2) : E3;
        total += lvl / factorial(n);
        var += se * se / (factorial(n) * factorial(n));
        levels.push_back({{"n", n}, {"E1", E1}, {"E2", E2}, {"E3", E3}, {"se", se}, {"exact", n == 1}});
    }
    r.value = total;
    r.error_estimate = std::sqrt(var);
    r.meta["levels"] = levels;
    r.set(std::isfinite(total) && total >= -r.error_estimate * 3 - 1e-14 &&
              !(r.error_estimate > 0.2 * std::fabs(total) && total != 0),
          Status::low_confidence);
    return r;
}

// sup over eta of int |xi|^{-alpha} (1 + |xi + eta|^2)^{-beta} dxi.
inline EstimateReport uniform_beta_integral(double alpha, int d, double beta, const std::vector<double>& eta_grid,
                                            const QuadratureConfig& q = {})
{
    require(d >= 1 && d <= 3, "d must be 1, 2 or 3");
    if (!(alpha > 0 && alpha < d)) throw DomainError("alpha must lie in (0, d)");
    if (!(beta > (d - alpha) / 2 && beta < 1)) throw DomainError("beta must lie in ((d - alpha)/2, 1)");
    require(!eta_grid.empty(), "uniform_beta_integral: empty eta grid");
    std::vector<double> vals;
    double best = -1, err = 0, amax = 0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < eta_grid.size(); ++i) {
        auto r = detail::radial(detail::Kernel::uniform, beta, std::fabs(eta_grid[i]), alpha, d, q, detail::one);
        vals.push_back(r.value);
        amax = std::max(amax, std::fabs(eta_grid[i]));
        if (r.value > best) {
            best = r.value;
            arg = i;
            err = r.error;
        }
    }
    EstimateReport rep;
    rep.name = "uniform_beta_integral";
    rep.value = best;
    rep.error_estimate = err;
    bool at_edge = std::fabs(eta_grid[arg]) >= amax && eta_grid.size() > 1;
    rep.set(std::isfinite(best) && !at_edge, Status::warning);
    rep.meta = {{"alpha", alpha}, {"d", d}, {"beta", beta}, {"argmax_eta", eta_grid[arg]}, {"values", vals}};
    return rep;
}

} // namespace wavechaos
