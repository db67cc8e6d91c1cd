#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include <wavechaos/chaos_algebra.hpp>
#include <wavechaos/instances.hpp>

using namespace wavechaos;
using Catch::Approx;

namespace {

CovarianceOperator lattice_cov(int n_t = 3, int n_x = 2)
{
    LatticeSpec s;
    s.n_t = n_t;
    s.n_x = n_x;
    return build_covariance(s);
}

CovarianceOperator diag_cov(std::vector<double> v)
{
    Eigen::VectorXd d = Eigen::Map<Eigen::VectorXd>(v.data(), v.size());
    return CovarianceOperator::from_dense(d.asDiagonal());
}

// Probabilists' Gauss-Hermite nodes by Golub-Welsch; exact for polynomial degree < 2q.
void hermite_rule(int q, std::vector<double>& x, std::vector<double>& w)
{
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(q, q);
    for (int k = 1; k < q; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    x.resize(q);
    w.resize(q);
    for (int k = 0; k < q; ++k) {
        x[k] = es.eigenvalues()(k);
        w[k] = es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
    }
}

// E p(W) by tensor Gauss-Hermite over W = C^{1/2} Z.
double gauss_hermite_expectation(const PolynomialFunctional& p, const CovarianceOperator& cov, int q)
{
    std::vector<double> x, w;
    hermite_rule(q, x, w);
    Eigen::MatrixXd M = cov.dense();
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    Eigen::MatrixXd Lc = llt.matrixL();
    int n = static_cast<int>(M.rows());
    std::vector<int> idx(n, 0);
    double acc = 0;
    for (;;) {
        Eigen::VectorXd z(n);
        double wt = 1;
        for (int k = 0; k < n; ++k) {
            z(k) = x[idx[k]];
            wt *= w[idx[k]];
        }
        Eigen::VectorXd W = Lc * z;
        acc += wt * p.evaluate(W);
        int k = 0;
        while (k < n && ++idx[k] == q) idx[k++] = 0;
        if (k == n) break;
    }
    return acc;
}

double brute_inner(const SymmetricKernel& f, const SymmetricKernel& g, const CovarianceOperator& cov)
{
    double s = 0;
    for (auto& [tf0, a] : f.coeffs()) {
        auto tf = tf0;
        do {
            for (auto& [tg, b] : g.coeffs()) {
                auto t = tg;
                do {
                    double prod = a * b;
                    for (std::size_t k = 0; k < t.size(); ++k) prod *= cov(tf[k], t[k]);
                    s += prod;
                } while (std::next_permutation(t.begin(), t.end()));
            }
        } while (std::next_permutation(tf.begin(), tf.end()));
    }
    return s;
}

} // namespace

TEST_CASE("polynomial ring structure", "[chaos]")
{
    InstanceGenerator gen(3, 5);
    for (int trial = 0; trial < 20; ++trial) {
        auto a = gen.polynomial(2), b = gen.polynomial(3), c = gen.polynomial(1);
        CHECK(max_abs_diff(a * (b + c), a * b + a * c) < 1e-12);
        CHECK(max_abs_diff(a * b, b * a) < 1e-12);
        CHECK(max_abs_diff((a * b) * c, a * (b * c)) < 1e-12);
        CHECK((a - a).is_zero());
        CHECK((a * b).degree() == a.degree() + b.degree());
        std::vector<double> w{0.3, -1.2, 0.7, 2.0, -0.4};
        CHECK((a * b).evaluate(w) == Approx(a.evaluate(w) * b.evaluate(w)).epsilon(1e-12));
    }
    auto x = PolynomialFunctional::variable(2, 3.0);
    auto x3 = x * x * x;
    CHECK(x3.partial(2).coeff({2, 2}) == Approx(81.0));
    CHECK(x3.partial(1).is_zero());
}

TEST_CASE("symmetrize", "[chaos]")
{
    std::map<std::vector<CellIndex>, double> raw{{{0, 1}, 1.0}};
    auto f = symmetrize(raw, 2);
    CHECK(f.coeffs().size() == 1);
    CHECK(f.get({1, 0}) == 0.5);
    CHECK(f.get({0, 1}) == 0.5);

    std::map<std::vector<CellIndex>, double> diag{{{1, 1}, 2.0}, {{0, 2}, 1.0}};
    CHECK_THROWS_AS(symmetrize(diag, 2), DomainError);
    auto dropped = symmetrize(diag, 2, DiagonalPolicy::drop);
    CHECK(dropped.coeffs().size() == 1);

    // brute-force permutation average
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    std::map<std::vector<CellIndex>, double> r3;
    std::vector<std::vector<CellIndex>> tuples{{0, 1, 2}, {2, 0, 1}, {1, 3, 4}, {4, 2, 0}, {3, 1, 0}};
    for (auto& t : tuples) r3[t] += nd(rng);
    auto s3 = symmetrize(r3, 3);
    auto raw_at = [&](const std::vector<CellIndex>& t) {
        auto it = r3.find(t);
        return it == r3.end() ? 0.0 : it->second;
    };
    for (auto& t0 : tuples) {
        auto t = t0;
        std::sort(t.begin(), t.end());
        double avg = 0;
        auto p = t;
        do avg += raw_at(p);
        while (std::next_permutation(p.begin(), p.end()));
        avg /= 6;
        auto q = t;
        do CHECK(s3.get(q) == Approx(avg).epsilon(1e-14));
        while (std::next_permutation(q.begin(), q.end()));
    }
    // idempotent on already-symmetric input
    std::map<std::vector<CellIndex>, double> full;
    for (auto& [t, v] : s3.coeffs()) {
        auto p = t;
        do full[p] = v;
        while (std::next_permutation(p.begin(), p.end()));
    }
    CHECK(max_abs_diff(symmetrize(full, 3), s3) < 1e-15);
}

TEST_CASE("kernel storage rejects diagonals", "[chaos]")
{
    SymmetricKernel f(2);
    CHECK_THROWS_AS(f.set({1, 1}, 1.0), DomainError);
    CHECK_THROWS_AS(f.set({1, 2, 3}, 1.0), DomainError);
    f.set({3, 1}, 2.0);
    CHECK(f.get({1, 3}) == 2.0);
    CHECK(f.support() == std::vector<CellIndex>{1, 3});
    CHECK(f.slice(3).get({1}) == 2.0);
}

TEST_CASE("hp_inner_product", "[chaos]")
{
    auto cov = lattice_cov();
    SymmetricKernel e(1);
    e.set({2}, 1.0);
    CHECK(hp_inner_product(e, e, cov) == Approx(cov(2, 2)).epsilon(1e-14));
    InstanceGenerator gen(11, cov.dim());
    for (int n : {1, 2, 3})
        for (int trial = 0; trial < 10; ++trial) {
            auto f = gen.kernel(n), g = gen.kernel(n);
            double v = hp_inner_product(f, g, cov);
            CHECK(v == Approx(hp_inner_product(g, f, cov)).epsilon(1e-13));
            CHECK(v == Approx(brute_inner(f, g, cov)).epsilon(1e-12).margin(1e-14));
            CHECK(hp_inner_product(f, f, cov) >= 0);
        }
    CHECK_THROWS_AS(hp_inner_product(gen.kernel(1), gen.kernel(2), cov), DomainError);
}

TEST_CASE("multiple_wiener_integral examples", "[chaos]")
{
    auto cov = lattice_cov();
    SymmetricKernel f0(0);
    f0.set({}, 2.5);
    CHECK(multiple_wiener_integral(f0, cov).constant() == 2.5);
    CHECK(multiple_wiener_integral(f0, cov).degree() == 0);

    SymmetricKernel f1(1);
    f1.set({4}, 1.0);
    CHECK(max_abs_diff(multiple_wiener_integral(f1, cov), PolynomialFunctional::variable(4)) == 0);

    std::map<std::vector<CellIndex>, double> raw{{{0, 1}, 1.0}};
    auto f2 = symmetrize(raw, 2);
    auto ind = diag_cov({1.0, 2.0, 0.5});
    CHECK(max_abs_diff(multiple_wiener_integral(f2, ind), PolynomialFunctional::variable(0) * PolynomialFunctional::variable(1)) <
          1e-15);
    // correlated cells: Wick product
    auto I2 = multiple_wiener_integral(f2, cov);
    auto expect = PolynomialFunctional::variable(0) * PolynomialFunctional::variable(1) - PolynomialFunctional(cov(0, 1));
    CHECK(max_abs_diff(I2, expect) < 1e-15);
    CHECK(std::fabs(wick_expectation(I2, cov)) < 1e-15);
    CHECK(wick_expectation(I2 * I2, cov) == Approx(2 * hp_inner_product(f2, f2, cov)).epsilon(1e-12));
}

TEST_CASE("wick_expectation examples and oracle", "[chaos]")
{
    auto cov = lattice_cov(2, 2);
    auto A = PolynomialFunctional::variable(0), B = PolynomialFunctional::variable(1);
    CHECK(wick_expectation(A, cov) == 0);
    CHECK(wick_expectation(A * A * A * A, cov) == Approx(3 * cov(0, 0) * cov(0, 0)).epsilon(1e-14));
    auto ind = diag_cov({1.5, 0.7});
    CHECK(wick_expectation(A * A * B * B, ind) == Approx(1.5 * 0.7).epsilon(1e-14));
    PolynomialFunctional big(1.0);
    for (int k = 0; k < 13; ++k) big = big * A;
    CHECK_THROWS_AS(wick_expectation(big, cov), CapExceeded);
    CHECK_NOTHROW(wick_expectation(big, cov, 14));

    InstanceGenerator gen(5, cov.dim());
    for (int trial = 0; trial < 15; ++trial) {
        auto p = gen.polynomial(4, 5), q = gen.polynomial(3, 5);
        double ep = wick_expectation(p, cov), eq = wick_expectation(q, cov);
        CHECK(ep == Approx(gauss_hermite_expectation(p, cov, 6)).epsilon(1e-10).margin(1e-12));
        CHECK(wick_expectation(2.0 * p - 3.0 * q, cov) == Approx(2 * ep - 3 * eq).epsilon(1e-12).margin(1e-12));
        Monomial odd;
        int len = 2 * gen.uniform_int(0, 2) + 1;
        for (int k = 0; k < len; ++k) odd.push_back(gen.cell());
        std::sort(odd.begin(), odd.end());
        CHECK(wick_monomial(odd, cov) == 0);
    }
}

TEST_CASE("isometry and orthogonality", "[chaos][property]")
{
    auto cov = lattice_cov();
    SymmetricKernel e(1);
    e.set({0}, 1.0);
    auto r = isometry_check(e, e, cov);
    CHECK(r.pass);
    CHECK(r.value == Approx(cov(0, 0)).epsilon(1e-14));

    InstanceGenerator gen(21, cov.dim());
    for (int trial = 0; trial < 30; ++trial) {
        int n = gen.uniform_int(1, 3), m = gen.uniform_int(1, 3);
        auto f = gen.kernel(n), g = gen.kernel(m);
        auto rep = isometry_check(f, g, cov);
        CHECK(rep.pass);
        if (n != m) CHECK(std::fabs(rep.value) <= 1e-10 * std::max(1.0, rep.meta["relative_error"].get<double>()) + 1e-10);
    }
    // disjoint cells, zero cross-covariance
    auto ind = diag_cov({1, 1, 1, 1});
    SymmetricKernel f(2), g(2);
    f.set({0, 1}, 1.0);
    g.set({2, 3}, 1.0);
    auto rep = isometry_check(f, g, ind);
    CHECK(rep.value == 0);
    CHECK(rep.bound == 0);
    CHECK(rep.pass);
}

TEST_CASE("chaos_project", "[chaos][property]")
{
    auto cov = lattice_cov();
    PolynomialFunctional c(4.0);
    auto v = chaos_project(c, cov);
    REQUIRE(v.components.size() == 1);
    CHECK(v.components[0].get({}) == 4.0);

    auto A = PolynomialFunctional::variable(0);
    CHECK_THROWS_AS(chaos_project(A * A, cov), RequiresRefinement);

    InstanceGenerator gen(31, cov.dim());
    for (int trial = 0; trial < 20; ++trial) {
        int n = gen.uniform_int(1, 3);
        auto f = gen.kernel(n);
        auto back = chaos_project(multiple_wiener_integral(f, cov), cov);
        REQUIRE(static_cast<int>(back.components.size()) == n + 1);
        CHECK(max_abs_diff(back.components[n], f) <= 1e-12);
        for (int k = 0; k < n; ++k) CHECK(back.components[k].coeffs().empty());
    }
    // mixed sum: J0 is the expectation and the sum reproduces p
    auto f = gen.kernel(2), g = gen.kernel(1);
    auto p = multiple_wiener_integral(f, cov) + multiple_wiener_integral(g, cov) + PolynomialFunctional(0.5);
    auto dec = chaos_project(p, cov);
    CHECK(dec.components[0].get({}) == Approx(wick_expectation(p, cov)).epsilon(1e-12));
    CHECK(max_abs_diff(chaos_sum(dec, cov), p) < 1e-12);
}

TEST_CASE("JSON round trips", "[chaos]")
{
    InstanceGenerator gen(41, 6);
    auto f = gen.kernel(3);
    CHECK(max_abs_diff(SymmetricKernel::from_json(f.to_json()), f) == 0);
    auto p = gen.polynomial(4);
    CHECK(max_abs_diff(PolynomialFunctional::from_json(p.to_json()), p) == 0);
    CHECK_THROWS_AS(PolynomialFunctional::from_json(f.to_json()), DomainError);
}
