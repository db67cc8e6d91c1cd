#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "chaos_algebra.hpp"
#include "errors.hpp"
#include "lattice_gaussian.hpp"

namespace wavechaos {

enum class PropagatorKind { wave, heat };

inline const char* to_string(PropagatorKind k) { return k == PropagatorKind::wave ? "wave" : "heat"; }

inline PropagatorKind parse_kind(const std::string& s)
{
    if (s == "wave") return PropagatorKind::wave;
    if (s == "heat") return PropagatorKind::heat;
    throw DomainError("unknown propagator kind: " + s);
}

struct OrderedTimes {
    double t = 1;
    std::vector<double> times;

    void validate() const
    {
        for (std::size_t j = 0; j < times.size(); ++j) {
            require(times[j] > 0 && times[j] < t, "ordered times must lie in (0, t)");
            if (j) require(times[j] > times[j - 1], "ordered times must be strictly increasing");
        }
    }
};

using Freq = std::vector<double>;

inline double norm(const Freq& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

inline double fourier_G_radial(PropagatorKind k, double t, double r)
{
    require(t >= 0, "fourier_G: t must be >= 0");
    if (k == PropagatorKind::heat) return std::exp(-0.5 * t * r * r);
    if (r * t < 1e-8) return t * (1 - (r * t) * (r * t) / 6);
    return std::sin(t * r) / r;
}

inline double fourier_G(PropagatorKind k, double t, const Freq& xi) { return fourier_G_radial(k, t, norm(xi)); }

// e^{-i (sum xi_j) . x} prod_j conj(FG(t_{j+1} - t_j)(xi_1 + ... + xi_j)), t_{n+1} = t.
inline std::complex<double> fourier_fn(PropagatorKind k, const OrderedTimes& ot, const Freq& x,
                                       const std::vector<Freq>& xi)
{
    ot.validate();
    std::size_t n = ot.times.size();
    require(n >= 1 && xi.size() == n, "fourier_fn: need n >= 1 frequencies, one per time");
    Freq acc(x.size(), 0.0);
    double prod = 1;
    for (std::size_t j = 0; j < n; ++j) {
        require(xi[j].size() == x.size(), "fourier_fn: dimension mismatch");
        for (std::size_t m = 0; m < acc.size(); ++m) acc[m] += xi[j][m];
        double next = j + 1 < n ? ot.times[j + 1] : ot.t;
        prod *= fourier_G(k, next - ot.times[j], acc);
    }
    double phase = -std::inner_product(acc.begin(), acc.end(), x.begin(), 0.0);
    return std::polar(prod, phase);
}

// Fourier transform of g_t^{(n)} = n! f~_n: only the ordering of the given
// times contributes, with xi permuted alongside.
inline std::complex<double> fourier_gt_sym(PropagatorKind k, double t, const std::vector<double>& times,
                                           const Freq& x, const std::vector<Freq>& xi)
{
    require(times.size() == xi.size() && !times.empty(), "fourier_gt_sym: need one frequency per time");
    std::vector<std::size_t> p(times.size());
    std::iota(p.begin(), p.end(), 0);
    std::sort(p.begin(), p.end(), [&](auto a, auto b) { return times[a] < times[b]; });
    OrderedTimes ot{t, {}};
    std::vector<Freq> sx;
    for (auto i : p) {
        if (!ot.times.empty() && times[i] == ot.times.back()) throw DomainError("fourier_gt_sym: coincident times");
        ot.times.push_back(times[i]);
        sx.push_back(xi[i]);
    }
    return fourier_fn(k, ot, x, sx);
}

inline double green_physical(PropagatorKind k, int d, double t, const Freq& x)
{
    require(t > 0, "green_physical: t must be > 0");
    require(static_cast<int>(x.size()) == d, "green_physical: point dimension differs from d");
    double r = norm(x);
    if (k == PropagatorKind::heat) {
        require(d >= 1 && d <= 3, "green_physical: d must be 1, 2 or 3");
        return std::pow(2 * M_PI * t, -0.5 * d) * std::exp(-r * r / (2 * t));
    }
    if (d == 1) return r <= t ? 0.5 : 0.0;
    if (d == 2) return r < t ? 1.0 / (2 * M_PI * std::sqrt(t * t - r * r)) : 0.0;
    throw DomainError("green_physical: the wave kernel for d >= 3 is not a function");
}

// Causal lattice kernel: 0 for t <= 0; in d = 2 the wave singularity at the
// light cone is clipped to its value half a cell inside.
inline double lattice_green(PropagatorKind k, const LatticeSpec& s, double t, const Freq& x)
{
    if (t <= 0) return 0.0;
    if (k == PropagatorKind::wave && s.d == 2) {
        double r = norm(x);
        if (r >= t) return 0.0;
        double rc = std::min(r, std::max(0.0, t - 0.5 * s.dx()));
        return 1.0 / (2 * M_PI * std::sqrt(t * t - rc * rc));
    }
    return green_physical(k, s.d, t, x);
}

inline Freq mid_point(const LatticeSpec& s, const Cell& c)
{
    auto m = space_mid(s, c);
    return Freq(m.begin(), m.begin() + s.d);
}

inline Freq diff(const Freq& a, const Freq& b)
{
    Freq r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

// f~_n(., t, x): on a tuple with strictly increasing time cells the value is
// (1/n!) G(t - s_n, x - y_n) G(s_n - s_{n-1}, y_n - y_{n-1}) ... at midpoints.
inline SymmetricKernel discretize_fn(PropagatorKind k, const LatticeSpec& s, double t, const Freq& x, int n)
{
    s.validate();
    if (s.d > 2) throw DomainError("discretize_fn: d = 3 has no function-valued kernel");
    require(n >= 1, "discretize_fn: n must be >= 1");
    require(static_cast<int>(x.size()) == s.d, "discretize_fn: point dimension differs from d");
    std::size_t ns = s.space_cells();
    std::size_t nc = s.cell_count();
    std::vector<double> tm(nc);
    std::vector<Freq> ym(nc);
    for (std::size_t i = 0; i < nc; ++i) {
        Cell c = cell_of(s, i);
        tm[i] = time_mid(s, c);
        ym[i] = mid_point(s, c);
    }
    SymmetricKernel out(n);
    double inv = 1.0 / factorial(n);
    std::vector<CellIndex> tuple(n);
    // Fill slots n-1 .. 0 walking backwards in time from (t, x).
    std::function<void(int, double, const Freq&, std::size_t, double)> rec =
        [&](int slot, double tt, const Freq& xx, std::size_t limit, double w) {
            if (slot < 0) {
                out.set(tuple, w * inv);
                return;
            }
            for (std::size_t i = 0; i < limit * ns && i < nc; ++i) {
                double g = lattice_green(k, s, tt - tm[i], diff(xx, ym[i]));
                if (g == 0) continue;
                tuple[slot] = static_cast<CellIndex>(i);
                rec(slot - 1, tm[i], ym[i], i / ns, w * g);
            }
        };
    rec(n - 1, t, x, static_cast<std::size_t>(s.n_t), 1.0);
    return out;
}

} // namespace wavechaos
