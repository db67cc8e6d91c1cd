#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "config.hpp"
#include "errors.hpp"

namespace wavechaos {

using CellIndex = std::uint32_t;

struct LatticeSpec {
    int d = 1;
    double H = 0.75;
    double alpha = 0.5;
    double T = 1.0;
    double L = 1.0;
    int n_t = 1;
    int n_x = 1;

    void validate(bool wave_run = false) const
    {
        require(d >= 1 && d <= 3, "d must be 1, 2 or 3");
        require(H > 0.5 && H < 1.0, "H must lie in (1/2, 1)");
        require(alpha > 0.0 && alpha < d, "alpha must lie in (0, d)");
        if (wave_run) require(alpha > d - 2.0, "wave runs need alpha > d - 2");
        require(T > 0.0 && L > 0.0, "T and L must be positive");
        require(n_t >= 1 && n_x >= 1, "n_t and n_x must be at least 1");
    }

    std::size_t space_cells() const
    {
        std::size_t n = 1;
        for (int k = 0; k < d; ++k) n *= static_cast<std::size_t>(n_x);
        return n;
    }
    std::size_t cell_count() const { return space_cells() * static_cast<std::size_t>(n_t); }
    double dt() const { return T / n_t; }
    double dx() const { return 2.0 * L / n_x; }

    std::string canonical() const
    {
        return "d=" + std::to_string(d) + ";H=" + fmt_g17(H) + ";alpha=" + fmt_g17(alpha) +
               ";T=" + fmt_g17(T) + ";L=" + fmt_g17(L) + ";n_t=" + std::to_string(n_t) +
               ";n_x=" + std::to_string(n_x);
    }
    std::string hash() const { return fnv1a_hex(canonical()); }

    static LatticeSpec from_config(const Config& c)
    {
        LatticeSpec s;
        s.d = static_cast<int>(c.get_int("d", s.d));
        s.H = c.get_double("H", s.H);
        s.alpha = c.get_double("alpha", s.alpha);
        s.T = c.get_double("T", s.T);
        s.L = c.get_double("L", s.L);
        s.n_t = static_cast<int>(c.get_int("n_t", s.n_t));
        s.n_x = static_cast<int>(c.get_int("n_x", s.n_x));
        return s;
    }
};

struct Cell {
    int time_index = 0;
    std::array<int, 3> space_index{0, 0, 0};
};

// Cells are ordered time-major; within a time slab the space index is row-major.
inline Cell cell_of(const LatticeSpec& s, std::size_t idx)
{
    Cell c;
    std::size_t ns = s.space_cells();
    c.time_index = static_cast<int>(idx / ns);
    std::size_t r = idx % ns;
    for (int k = s.d - 1; k >= 0; --k) {
        c.space_index[k] = static_cast<int>(r % s.n_x);
        r /= s.n_x;
    }
    return c;
}

inline std::size_t index_of(const LatticeSpec& s, const Cell& c)
{
    std::size_t r = 0;
    for (int k = 0; k < s.d; ++k) r = r * s.n_x + c.space_index[k];
    return static_cast<std::size_t>(c.time_index) * s.space_cells() + r;
}

struct Box {
    int d = 1;
    std::array<double, 3> lo{0, 0, 0};
    std::array<double, 3> hi{0, 0, 0};
};

inline Box space_box(const LatticeSpec& s, const Cell& c)
{
    Box b;
    b.d = s.d;
    double h = s.dx();
    for (int k = 0; k < s.d; ++k) {
        b.lo[k] = -s.L + c.space_index[k] * h;
        b.hi[k] = b.lo[k] + h;
    }
    return b;
}

inline double time_mid(const LatticeSpec& s, const Cell& c) { return (c.time_index + 0.5) * s.dt(); }

inline std::array<double, 3> space_mid(const LatticeSpec& s, const Cell& c)
{
    std::array<double, 3> m{0, 0, 0};
    for (int k = 0; k < s.d; ++k) m[k] = -s.L + (c.space_index[k] + 0.5) * s.dx();
    return m;
}

// R_H(t,s) = alpha_H * int_0^t int_0^s |u-v|^{2H-2} du dv.
inline double rh_covariance(double t, double s, double H)
{
    if (!(H > 0.5 && H < 1.0)) throw DomainError("rh_covariance: H must lie in (1/2, 1)");
    require(t >= 0 && s >= 0, "rh_covariance: times must be nonnegative");
    double e = 2 * H;
    return 0.5 * (std::pow(t, e) + std::pow(s, e) - std::pow(std::fabs(t - s), e));
}

// alpha_H * int_a^b int_c^e |u-v|^{2H-2} du dv, four-corner form of R_H increments.
inline double rh_increment(double a, double b, double c, double e, double H)
{
    if (!(H > 0.5 && H < 1.0)) throw DomainError("rh_increment: H must lie in (1/2, 1)");
    double p = 2 * H;
    auto f = [p](double z) { return std::pow(std::fabs(z), p); };
    return 0.5 * (f(b - c) + f(a - e) - f(b - e) - f(a - c));
}

namespace detail {

// Linear piece of the overlap length w(z) = |[alo,ahi] cap ([blo,bhi]+z)|.
struct AxisPiece {
    double lo, hi;
    double p, q; // w(z) = p + q z on [lo,hi]
};

inline std::vector<AxisPiece> overlap_pieces(double alo, double ahi, double blo, double bhi)
{
    auto w = [&](double z) { return std::max(0.0, std::min(ahi, bhi + z) - std::max(alo, blo + z)); };
    std::vector<double> bp{alo - bhi, alo - blo, ahi - bhi, ahi - blo};
    std::sort(bp.begin(), bp.end());
    if (bp.front() < 0.0 && bp.back() > 0.0) bp.push_back(0.0);
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    std::vector<AxisPiece> out;
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
        double lo = bp[i], hi = bp[i + 1];
        if (hi - lo <= 0) continue;
        double wl = w(lo), wh = w(hi);
        double q = (wh - wl) / (hi - lo);
        double p = wl - q * lo;
        if (wl == 0.0 && wh == 0.0) continue;
        out.push_back({lo, hi, p, q});
    }
    return out;
}

template <int N, class F>
double gl(F f, double a, double b)
{
    return boost::math::quadrature::gauss<double, N>::integrate(f, a, b);
}

// int over a box of |z|^{alpha-d} prod_k (p_k + q_k z_k), origin at a corner.
inline double duffy_corner(int d, double alpha, const std::array<AxisPiece, 3>& ax)
{
    std::array<double, 3> sgn{}, c{};
    double vol = 1;
    for (int k = 0; k < d; ++k) {
        sgn[k] = (ax[k].lo == 0.0) ? 1.0 : -1.0;
        c[k] = ax[k].hi - ax[k].lo;
        vol *= c[k];
    }
    double total = 0;
    for (int m = 0; m < d; ++m) {
        // y = lambda * v(tau); integrate lambda exactly.
        auto inner = [&](const std::array<double, 3>& v) {
            std::array<double, 4> poly{1, 0, 0, 0};
            int deg = 0;
            for (int k = 0; k < d; ++k) {
                double a0 = ax[k].p, a1 = ax[k].q * sgn[k] * v[k];
                std::array<double, 4> nxt{0, 0, 0, 0};
                for (int j = 0; j <= deg; ++j) {
                    nxt[j] += poly[j] * a0;
                    nxt[j + 1] += poly[j] * a1;
                }
                poly = nxt;
                ++deg;
            }
            double lam = 0;
            for (int j = 0; j <= deg; ++j) lam += poly[j] / (alpha + j);
            double r2 = 0;
            for (int k = 0; k < d; ++k) r2 += v[k] * v[k];
            return std::pow(r2, 0.5 * (alpha - d)) * lam;
        };
        std::array<int, 2> others{};
        int no = 0;
        for (int k = 0; k < d; ++k)
            if (k != m) others[no++] = k;
        double part = 0;
        if (d == 1) {
            std::array<double, 3> v{c[0], 0, 0};
            part = inner(v);
        } else if (d == 2) {
            part = gl<20>([&](double t1) {
                std::array<double, 3> v{};
                v[m] = c[m];
                v[others[0]] = t1 * c[others[0]];
                return inner(v);
            }, 0.0, 1.0);
        } else {
            part = gl<16>([&](double t1) {
                return gl<16>([&](double t2) {
                    std::array<double, 3> v{};
                    v[m] = c[m];
                    v[others[0]] = t1 * c[others[0]];
                    v[others[1]] = t2 * c[others[1]];
                    return inner(v);
                }, 0.0, 1.0);
            }, 0.0, 1.0);
        }
        total += part;
    }
    return vol * total;
}

template <int N>
double tensor_box(int d, double alpha, const std::array<AxisPiece, 3>& ax)
{
    auto f = [&](double z0, double z1, double z2) {
        double r2 = z0 * z0 + z1 * z1 + z2 * z2;
        double w = (ax[0].p + ax[0].q * z0);
        if (d > 1) w *= (ax[1].p + ax[1].q * z1);
        if (d > 2) w *= (ax[2].p + ax[2].q * z2);
        return std::pow(r2, 0.5 * (alpha - d)) * w;
    };
    if (d == 2)
        return gl<N>([&](double a) { return gl<N>([&](double b) { return f(a, b, 0); }, ax[1].lo, ax[1].hi); },
                     ax[0].lo, ax[0].hi);
    return gl<N>([&](double a) {
        return gl<N>([&](double b) { return gl<N>([&](double c) { return f(a, b, c); }, ax[2].lo, ax[2].hi); },
                     ax[1].lo, ax[1].hi);
    }, ax[0].lo, ax[0].hi);
}

inline double box_integral(int d, double alpha, std::array<AxisPiece, 3> ax, int depth = 0)
{
    bool corner = true;
    double dist2 = 0, diam2 = 0;
    int longest = 0;
    for (int k = 0; k < d; ++k) {
        bool touches = (ax[k].lo == 0.0 || ax[k].hi == 0.0);
        corner = corner && touches;
        double dk = (ax[k].lo > 0) ? ax[k].lo : (ax[k].hi < 0 ? -ax[k].hi : 0.0);
        dist2 += dk * dk;
        double len = ax[k].hi - ax[k].lo;
        diam2 += len * len;
        if (len > ax[longest].hi - ax[longest].lo) longest = k;
    }
    if (corner) return duffy_corner(d, alpha, ax);
    double dist = std::sqrt(dist2), diam = std::sqrt(diam2);
    if (dist > 2 * diam) return tensor_box<4>(d, alpha, ax);
    if (dist >= 0.5 * diam || depth > 40) return tensor_box<16>(d, alpha, ax);
    auto a = ax, b = ax;
    double mid = 0.5 * (ax[longest].lo + ax[longest].hi);
    a[longest].hi = mid;
    b[longest].lo = mid;
    return box_integral(d, alpha, a, depth + 1) + box_integral(d, alpha, b, depth + 1);
}

} // namespace detail

// int_A int_B |x-y|^{-(d-alpha)} dx dy for axis-aligned boxes (Riesz constant 1).
inline double riesz_cell_integral(const Box& A, const Box& B, double alpha, int d)
{
    require(d >= 1 && d <= 3, "riesz_cell_integral: d must be 1, 2 or 3");
    if (!(alpha > 0 && alpha < d)) throw DomainError("riesz_cell_integral: alpha must lie in (0, d)");
    for (int k = 0; k < d; ++k)
        require(A.hi[k] > A.lo[k] && B.hi[k] > B.lo[k], "riesz_cell_integral: boxes need positive volume");
    if (d == 1) {
        auto F = [alpha](double z) { return std::pow(std::fabs(z), alpha + 1) / (alpha * (alpha + 1)); };
        double a1 = A.lo[0], a2 = A.hi[0], b1 = B.lo[0], b2 = B.hi[0];
        return F(a2 - b1) + F(a1 - b2) - F(a2 - b2) - F(a1 - b1);
    }
    // Change variables to z = x - y; the overlap length factorizes over axes.
    std::array<std::vector<detail::AxisPiece>, 3> pieces;
    for (int k = 0; k < d; ++k) pieces[k] = detail::overlap_pieces(A.lo[k], A.hi[k], B.lo[k], B.hi[k]);
    double total = 0;
    std::array<detail::AxisPiece, 3> cur{};
    std::function<void(int)> rec = [&](int k) {
        if (k == d) {
            total += detail::box_integral(d, alpha, cur);
            return;
        }
        for (auto& p : pieces[k]) {
            cur[k] = p;
            rec(k + 1);
        }
    };
    rec(0);
    return total;
}

// HP covariance of lattice cells. Entries factor as temporal x spatial
// (Kronecker product); a general matrix is stored with a 1x1 temporal factor.
class CovarianceOperator {
public:
    CovarianceOperator() = default;

    static CovarianceOperator from_factors(Eigen::MatrixXd time, Eigen::MatrixXd space, std::string spec_hash = {})
    {
        CovarianceOperator c;
        c.time_ = std::move(time);
        c.space_ = std::move(space);
        c.spec_hash_ = std::move(spec_hash);
        c.factorize();
        return c;
    }

    static CovarianceOperator from_dense(const Eigen::MatrixXd& m)
    {
        require(m.rows() == m.cols(), "covariance must be square");
        Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
        return from_factors(Eigen::MatrixXd::Ones(1, 1), sym);
    }

    std::size_t dim() const { return static_cast<std::size_t>(time_.rows() * space_.rows()); }
    std::size_t time_dim() const { return static_cast<std::size_t>(time_.rows()); }
    std::size_t space_dim() const { return static_cast<std::size_t>(space_.rows()); }

    double operator()(std::size_t i, std::size_t j) const
    {
        std::size_t ns = space_dim();
        return time_(i / ns, j / ns) * space_(i % ns, j % ns);
    }

    Eigen::MatrixXd dense() const
    {
        std::size_t n = dim();
        Eigen::MatrixXd m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) m(i, j) = (*this)(i, j);
        return m;
    }

    const Eigen::MatrixXd& time_factor() const { return time_; }
    const Eigen::MatrixXd& space_factor() const { return space_; }
    const std::string& spec_hash() const { return spec_hash_; }
    double max_eigenvalue() const { return lam_max_; }
    double min_eigenvalue() const { return lam_min_; }
    int clipped() const { return clipped_; }

    // W = (T_root kron S_root) z, z standard normal.
    Eigen::VectorXd apply_root(const Eigen::VectorXd& z) const
    {
        Eigen::Map<const Eigen::MatrixXd> Z(z.data(), space_dim(), time_dim());
        Eigen::MatrixXd W = space_root_ * Z * time_root_.transpose();
        return Eigen::Map<Eigen::VectorXd>(W.data(), W.size());
    }

private:
    void factorize()
    {
        require(time_.rows() == time_.cols() && space_.rows() == space_.cols(), "covariance factors must be square");
        clipped_ = 0;
        double tmin, tmax, smin, smax;
        time_root_ = root(time_, tmin, tmax);
        space_root_ = root(space_, smin, smax);
        lam_max_ = std::max({tmax * smax, tmin * smin, 0.0});
        lam_min_ = std::min({tmin * smax, tmax * smin, tmin * smin, tmax * smax});
    }

    Eigen::MatrixXd root(const Eigen::MatrixXd& m, double& lmin, double& lmax)
    {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < i; ++j)
                if (m(i, j) != m(j, i)) throw DomainError("covariance factor is not symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        if (es.info() != Eigen::Success) throw PsdError("eigendecomposition failed");
        Eigen::VectorXd lam = es.eigenvalues();
        lmin = lam.minCoeff();
        lmax = lam.maxCoeff();
        double eps = 1e-10 * std::max(lmax, 0.0);
        for (Eigen::Index i = 0; i < lam.size(); ++i) {
            if (lam(i) < -eps) throw PsdError("covariance eigenvalue " + fmt_g17(lam(i)) + " below -eps_psd");
            if (lam(i) < 0) {
                lam(i) = 0;
                ++clipped_;
            }
        }
        return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    }

    Eigen::MatrixXd time_, space_, time_root_, space_root_;
    std::string spec_hash_;
    double lam_max_ = 0, lam_min_ = 0;
    int clipped_ = 0;
};

inline Eigen::MatrixXd temporal_covariance(const LatticeSpec& s)
{
    Eigen::MatrixXd K(s.n_t, s.n_t);
    double h = s.dt();
    for (int k = 0; k < s.n_t; ++k)
        for (int l = 0; l <= k; ++l) K(k, l) = K(l, k) = rh_increment(k * h, (k + 1) * h, l * h, (l + 1) * h, s.H);
    return K;
}

inline Eigen::MatrixXd spatial_covariance(const LatticeSpec& s)
{
    std::size_t ns = s.space_cells();
    Eigen::MatrixXd K(ns, ns);
    double h = s.dx();
    std::map<std::array<int, 3>, double> cache;
    auto value = [&](std::array<int, 3> off) {
        for (auto& o : off) o = std::abs(o);
        std::sort(off.begin(), off.begin() + s.d);
        auto it = cache.find(off);
        if (it != cache.end()) return it->second;
        Box a, b;
        a.d = b.d = s.d;
        for (int k = 0; k < s.d; ++k) {
            a.lo[k] = 0;
            a.hi[k] = h;
            b.lo[k] = off[k] * h;
            b.hi[k] = b.lo[k] + h;
        }
        double v = riesz_cell_integral(a, b, s.alpha, s.d);
        cache[off] = v;
        return v;
    };
    for (std::size_t i = 0; i < ns; ++i) {
        Cell ci = cell_of(s, i);
        for (std::size_t j = 0; j <= i; ++j) {
            Cell cj = cell_of(s, j);
            std::array<int, 3> off{0, 0, 0};
            for (int k = 0; k < s.d; ++k) off[k] = ci.space_index[k] - cj.space_index[k];
            K(i, j) = K(j, i) = value(off);
        }
    }
    return K;
}

inline CovarianceOperator build_covariance(const LatticeSpec& s)
{
    s.validate();
    return CovarianceOperator::from_factors(temporal_covariance(s), spatial_covariance(s), s.hash());
}

struct NoiseSample {
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
};

inline constexpr std::size_t kNoiseChunk = 1024;

// Independent stream per (seed, chunk).
inline std::mt19937_64 chunk_rng(std::uint64_t seed, std::uint64_t chunk)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32), 0x5eedu};
    return std::mt19937_64(seq);
}

// Samples [chunk*kNoiseChunk, chunk*kNoiseChunk + m) as columns.
inline Eigen::MatrixXd noise_chunk(const CovarianceOperator& cov, std::uint64_t seed, std::uint64_t chunk, std::size_t m)
{
    auto rng = chunk_rng(seed, chunk);
    std::normal_distribution<double> nd;
    std::size_t n = cov.dim();
    Eigen::MatrixXd out(n, m);
    Eigen::VectorXd z(n);
    for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t i = 0; i < n; ++i) z(i) = nd(rng);
        out.col(c) = cov.apply_root(z);
    }
    return out;
}

// Runs fn(chunk, first_sample, block) over the chunk plan for `count` samples.
// Chunks are distributed over `threads` workers; output does not depend on it.
inline void for_each_noise_chunk(const CovarianceOperator& cov, std::uint64_t seed, std::size_t count, int threads,
                                 const std::function<void(std::size_t, std::size_t, const Eigen::MatrixXd&)>& fn)
{
    std::size_t chunks = (count + kNoiseChunk - 1) / kNoiseChunk;
    auto work = [&](std::size_t c) {
        std::size_t first = c * kNoiseChunk;
        std::size_t m = std::min(kNoiseChunk, count - first);
        fn(c, first, noise_chunk(cov, seed, c, m));
    };
    if (threads <= 1 || chunks <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) work(c);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t c = w; c < chunks; c += threads) work(c);
        });
    for (auto& t : pool) t.join();
}

inline std::vector<NoiseSample> sample_noise(const CovarianceOperator& cov, std::uint64_t seed, std::size_t count,
                                             int threads = 1)
{
    std::vector<NoiseSample> out(count);
    for_each_noise_chunk(cov, seed, count, threads, [&](std::size_t, std::size_t first, const Eigen::MatrixXd& blk) {
        for (Eigen::Index c = 0; c < blk.cols(); ++c) {
            auto& ns = out[first + c];
            ns.values.assign(blk.col(c).data(), blk.col(c).data() + blk.rows());
            ns.seed = seed;
            ns.index = first + c;
        }
    });
    return out;
}

} // namespace wavechaos
