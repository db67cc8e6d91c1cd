#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include <boost/math/quadrature/gauss.hpp>

#include <wavechaos/io.hpp>
#include <wavechaos/lattice_gaussian.hpp>

using namespace wavechaos;
using Catch::Approx;

namespace {

// alpha_H int_0^t int_0^s |u-v|^{2H-2} by Gauss-Legendre after splitting at the diagonal
// and substituting |u - v| = w^{1/(2H-1)}.
double rh_bruteforce(double t, double s, double H)
{
    // int_0^t du int_0^s dv |u-v|^{2H-2} = int overlap(g) |g|^{2H-2} dg with g = v - u
    double aH = H * (2 * H - 1), p = 1 / (2 * H - 1);
    auto overlap = [&](double g) { return std::max(0.0, std::min(t, s - g) - std::max(0.0, -g)); };
    double total = 0;
    for (double sign : {1.0, -1.0}) {
        double gmax = sign > 0 ? s : t;
        // |g| = gmax y^p so |g|^{2H-2} dg = gmax^{2H-1} p dy; split at the kink g = s - t
        std::vector<double> cuts{0.0, 1.0};
        double kink = (s - t) * sign;
        if (kink > 0 && kink < gmax) cuts.insert(cuts.begin() + 1, std::pow(kink / gmax, 1 / p));
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
            total += boost::math::quadrature::gauss<double, 30>::integrate(
                [&](double y) { return overlap(sign * gmax * std::pow(y, p)) * std::pow(gmax, 2 * H - 1) * p; },
                cuts[k], cuts[k + 1]);
    }
    return aH * total;
}

Box interval(double a, double b)
{
    Box B;
    B.d = 1;
    B.lo[0] = a;
    B.hi[0] = b;
    return B;
}

Box box(int d, std::array<double, 3> lo, double h)
{
    Box B;
    B.d = d;
    for (int k = 0; k < d; ++k) {
        B.lo[k] = lo[k];
        B.hi[k] = lo[k] + h;
    }
    return B;
}

// Tensor Gauss-Legendre over A x B; valid for well-separated boxes.
double riesz_smooth_oracle(const Box& A, const Box& B, double alpha, int d)
{
    std::vector<double> x, w;
    const auto& ax = boost::math::quadrature::gauss<double, 8>::abscissa();
    const auto& aw = boost::math::quadrature::gauss<double, 8>::weights();
    for (std::size_t i = 0; i < ax.size(); ++i) {
        x.push_back(ax[i]);
        w.push_back(aw[i]);
        if (ax[i] != 0) {
            x.push_back(-ax[i]);
            w.push_back(aw[i]);
        }
    }
    int q = static_cast<int>(x.size());
    int dims = 2 * d;
    long long total = 1;
    for (int k = 0; k < dims; ++k) total *= q;
    double acc = 0;
    for (long long idx = 0; idx < total; ++idx) {
        long long r = idx;
        double wt = 1, dist2 = 0;
        std::array<double, 3> pa{}, pb{};
        for (int k = 0; k < dims; ++k) {
            int i = static_cast<int>(r % q);
            r /= q;
            const Box& bx = k < d ? A : B;
            int ax_ = k % d;
            double half = 0.5 * (bx.hi[ax_] - bx.lo[ax_]);
            double c = 0.5 * (bx.hi[ax_] + bx.lo[ax_]) + half * x[i];
            wt *= w[i] * half;
            (k < d ? pa : pb)[ax_] = c;
        }
        for (int k = 0; k < d; ++k) dist2 += (pa[k] - pb[k]) * (pa[k] - pb[k]);
        acc += wt * std::pow(dist2, -(d - alpha) / 2);
    }
    return acc;
}

} // namespace

TEST_CASE("rh_covariance closed form and oracle", "[lattice]")
{
    CHECK(rh_covariance(0, 1, 0.75) == 0.0);
    CHECK(rh_covariance(1, 1, 0.75) == Approx(1.0).epsilon(1e-14));
    CHECK(rh_covariance(1, 2, 0.75) == Approx(1.414214).epsilon(1e-6));
    for (double H : {0.55, 0.7, 0.75, 0.9})
        for (double t : {0.3, 1.0, 2.5})
            for (double s : {0.1, 1.0, 1.7}) {
                double v = rh_covariance(t, s, H);
                CHECK(v == Approx(rh_bruteforce(t, s, H)).epsilon(1e-6));
                CHECK(v == rh_covariance(s, t, H));
                CHECK(rh_covariance(t + 0.1, s, H) >= v);
            }
    CHECK_THROWS_AS(rh_covariance(1, 1, 0.5), DomainError);
    CHECK_THROWS_AS(rh_covariance(1, 1, 1.0), DomainError);
}

TEST_CASE("rh_increment matches differences of rh_covariance", "[lattice]")
{
    double H = 0.7;
    double a = 0.2, b = 0.5, c = 0.4, e = 0.9;
    double four = rh_covariance(b, e, H) - rh_covariance(a, e, H) - rh_covariance(b, c, H) + rh_covariance(a, c, H);
    CHECK(rh_increment(a, b, c, e, H) == Approx(four).epsilon(1e-12));
}

TEST_CASE("riesz_cell_integral in d = 1", "[lattice]")
{
    CHECK(riesz_cell_integral(interval(0, 1), interval(0, 1), 0.5, 1) == Approx(2 / (0.5 * 1.5)).epsilon(1e-14));
    double far = riesz_cell_integral(interval(0, 1), interval(10, 11), 0.5, 1);
    double mid = std::pow(10.0, -0.5);
    CHECK(std::fabs(far - mid) / mid < 0.01);
    CHECK(riesz_cell_integral(interval(3, 4), interval(13, 14), 0.5, 1) == Approx(far).epsilon(1e-12));
    CHECK_THROWS_AS(riesz_cell_integral(interval(0, 1), interval(0, 1), 1.0, 1), DomainError);
    CHECK_THROWS_AS(riesz_cell_integral(interval(0, 1), interval(0, 1), 0.0, 1), DomainError);
}

TEST_CASE("riesz_cell_integral in d = 2, 3", "[lattice]")
{
    for (int d : {2, 3}) {
        double alpha = d - 0.5;
        auto A = box(d, {0, 0, 0}, 1.0);
        auto B = box(d, {4, 1, 0}, 1.0);
        double v = riesz_cell_integral(A, B, alpha, d);
        CHECK(v == Approx(riesz_smooth_oracle(A, B, alpha, d)).epsilon(1e-8));
        // additivity: the self-integral of a box splits over its 2^d halves
        double whole = riesz_cell_integral(A, A, alpha, d);
        std::vector<Box> parts;
        for (int m = 0; m < (1 << d); ++m) {
            std::array<double, 3> lo{0, 0, 0};
            for (int k = 0; k < d; ++k) lo[k] = (m >> k) & 1 ? 0.5 : 0.0;
            parts.push_back(box(d, lo, 0.5));
        }
        double sum = 0;
        for (auto& p : parts)
            for (auto& q : parts) sum += riesz_cell_integral(p, q, alpha, d);
        CHECK(sum == Approx(whole).epsilon(1e-8));
        // homogeneous of degree d + alpha
        auto A2 = box(d, {0, 0, 0}, 2.0);
        CHECK(riesz_cell_integral(A2, A2, alpha, d) == Approx(std::pow(2.0, d + alpha) * whole).epsilon(1e-8));
        // symmetric and decreasing with separation
        CHECK(riesz_cell_integral(B, A, alpha, d) == Approx(v).epsilon(1e-12));
        double prev = whole;
        for (double sep : {1.0, 2.0, 3.0, 5.0}) {
            double cur = riesz_cell_integral(A, box(d, {sep, 0, 0}, 1.0), alpha, d);
            CHECK(cur < prev);
            prev = cur;
        }
    }
}

TEST_CASE("build_covariance examples and invariants", "[lattice]")
{
    LatticeSpec one;
    one.L = 0.5;
    auto c1 = build_covariance(one);
    REQUIRE(c1.dim() == 1);
    CHECK(c1(0, 0) == Approx(2 / (0.5 * 1.5)).epsilon(1e-12));

    for (int d : {1, 2}) {
        LatticeSpec s;
        s.d = d;
        s.alpha = d - 0.5;
        s.n_t = 3;
        s.n_x = 3;
        auto cov = build_covariance(s);
        auto M = cov.dense();
        REQUIRE(static_cast<std::size_t>(M.rows()) == s.cell_count());
        CHECK((M - M.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
        for (Eigen::Index i = 0; i < M.rows(); ++i) CHECK(M(i, i) > 0);
        // same time cell, disjoint space cells
        CHECK(M(0, 2) > 0);
        // entry = R_H increment x Riesz cell integral
        Cell a = cell_of(s, 1), b = cell_of(s, s.space_cells() + 2);
        double h = s.dt();
        double rt = rh_increment(a.time_index * h, (a.time_index + 1) * h, b.time_index * h, (b.time_index + 1) * h, s.H);
        double rs = riesz_cell_integral(space_box(s, a), space_box(s, b), s.alpha, d);
        CHECK(M(1, s.space_cells() + 2) == Approx(rt * rs).epsilon(1e-12));
    }
}

TEST_CASE("lattice spec validation", "[lattice]")
{
    LatticeSpec s;
    s.alpha = 1.0;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s.alpha = 0.5;
    s.H = 0.5;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s.H = 0.75;
    s.n_t = 0;
    CHECK_THROWS_AS(s.validate(), DomainError);
    LatticeSpec w;
    w.d = 3;
    w.alpha = 0.5;
    CHECK_NOTHROW(w.validate(false));
    CHECK_THROWS_AS(w.validate(true), DomainError);
    CHECK_THROWS_AS(build_covariance(s), DomainError);
}

TEST_CASE("cell indexing is time-major", "[lattice]")
{
    LatticeSpec s;
    s.d = 2;
    s.alpha = 1.5;
    s.n_t = 2;
    s.n_x = 3;
    for (std::size_t i = 0; i < s.cell_count(); ++i) CHECK(index_of(s, cell_of(s, i)) == i);
    auto c = cell_of(s, 9 + 5);
    CHECK(c.time_index == 1);
    CHECK(c.space_index[0] == 1);
    CHECK(c.space_index[1] == 2);
}

TEST_CASE("PSD repair clips roundoff and rejects real negatives", "[lattice]")
{
    Eigen::MatrixXd m(2, 2);
    m << 1, 1, 1, 1;
    auto c = CovarianceOperator::from_dense(m);
    CHECK(c.max_eigenvalue() == Approx(2.0));
    Eigen::MatrixXd bad(2, 2);
    bad << 1, 2, 2, 1;
    CHECK_THROWS_AS(CovarianceOperator::from_dense(bad), PsdError);
}

TEST_CASE("sample_noise statistics and determinism", "[lattice]")
{
    auto I = CovarianceOperator::from_dense(Eigen::MatrixXd::Identity(2, 2));
    CHECK(sample_noise(I, 1, 0).empty());
    auto big = sample_noise(I, 11, 1000000);
    for (int k = 0; k < 2; ++k) {
        double s2 = 0;
        for (auto& x : big) s2 += x.values[k] * x.values[k];
        s2 /= big.size();
        CHECK(s2 > 0.99);
        CHECK(s2 < 1.01);
    }

    LatticeSpec s;
    s.n_t = 2;
    s.n_x = 3;
    auto cov = build_covariance(s);
    auto a = sample_noise(cov, 5, 3000);
    auto b = sample_noise(cov, 5, 3000, 3);
    REQUIRE(a.size() == b.size());
    bool same = true;
    for (std::size_t i = 0; i < a.size(); ++i) same = same && a[i].values == b[i].values;
    CHECK(same);

    auto xs = sample_noise(cov, 9, 100000);
    auto M = cov.dense();
    std::size_t n = cov.dim();
    int bad = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double m = 0, m2 = 0;
            for (auto& x : xs) {
                double v = x.values[i] * x.values[j];
                m += v;
                m2 += v * v;
            }
            m /= xs.size();
            double se = std::sqrt((m2 / xs.size() - m * m) / xs.size());
            if (std::fabs(m - M(i, j)) > 5 * se) ++bad;
        }
    CHECK(bad == 0);
}

TEST_CASE("covariance export round trip", "[lattice][io]")
{
    LatticeSpec s;
    s.n_t = 2;
    s.n_x = 2;
    auto cov = build_covariance(s);
    auto path = (std::filesystem::temp_directory_path() / "wavechaos_cov_roundtrip.bin").string();
    export_covariance(path, cov);
    auto back = import_covariance(path);
    CHECK((back.dense() - cov.dense()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.spec_hash() == cov.spec_hash());
    std::filesystem::remove(path);
}

TEST_CASE("config grammar", "[config]")
{
    auto c = Config::parse("# comment\nd = 2\nalpha = 1.5  # trailing\nlist = 1, 2.5,3\n");
    CHECK(c.get_int("d", 0) == 2);
    CHECK(c.get_double("alpha", 0) == 1.5);
    CHECK(c.get_list("list", {}) == std::vector<double>{1, 2.5, 3});
    CHECK(c.unused_keys().empty());
    CHECK_THROWS_AS(Config::parse("d = 1\nd = 2\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("D = 1\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("novalue\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("x = abc\n").get_double("x", 0), ConfigError);
    auto s = LatticeSpec::from_config(Config::parse("n_t = 4\nn_x = 5\n"));
    CHECK(s.n_t == 4);
    CHECK(s.n_x == 5);
}
