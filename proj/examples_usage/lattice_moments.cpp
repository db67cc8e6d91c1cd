// Truncated chaos solution at one lattice point: exact and sampled moments.
#include <cstdio>

#include <wavechaos/solver.hpp>

using namespace wavechaos;

int main()
{
    LatticeSpec s;
    s.n_t = 3;
    s.n_x = 3;
    auto cov = build_covariance(s);
    Freq x{0.0};
    for (int N = 0; N <= 3; ++N) {
        auto u = chaos_truncation(s, s.T, x, N, cov);
        auto p = picard_iterate(s, s.T, x, N, cov);
        std::printf("N=%d  terms=%zu  |picard - chaos|=%.2e  E u^2=%.12f  orthogonality=%.12f\n", N, u.terms().size(),
                    max_abs_diff(u, p), second_moment_exact(u, cov), orthogonality_sum(s, s.T, x, N, cov));
    }
    MCConfig mc;
    mc.samples = 20000;
    auto field = sample_field(s, 2, cov, mc, {{3, {1, 0, 0}}});
    double m = 0, m2 = 0;
    for (std::size_t i = 0; i < field.samples; ++i) {
        double v = field.at(i, 0);
        m += v;
        m2 += v * v;
    }
    std::printf("sampled mean %.4f, second moment %.4f over %zu samples\n", m / field.samples, m2 / field.samples,
                field.samples);
}
