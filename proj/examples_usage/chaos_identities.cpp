// Multiple integrals, Malliavin derivative and divergence on a 3 x 2 lattice.
#include <iostream>

#include <wavechaos/chaos_algebra.hpp>
#include <wavechaos/malliavin_ops.hpp>

using namespace wavechaos;

int main()
{
    LatticeSpec s;
    s.n_t = 3;
    s.n_x = 2;
    auto cov = build_covariance(s);

    SymmetricKernel f(2);
    f.set({0, 3}, 1.0);
    f.set({1, 4}, -0.5);
    auto I2 = multiple_wiener_integral(f, cov);
    std::cout << "I_2(f) = " << I2.to_json().dump() << "\n";
    std::cout << "E[I_2(f)^2] = " << wick_expectation(I2 * I2, cov) << ", 2 <f,f> = " << 2 * hp_inner_product(f, f, cov)
              << "\n";

    auto DI = derivative(I2);
    auto rule = derivative_of_In(f, cov);
    std::cout << "max |D I_2 - 2 I_1(f(., c))| = " << max_abs_diff(DI, rule) << "\n";

    HPValuedFunctional u;
    u.add(0, PolynomialFunctional::variable(2));
    u.add(5, PolynomialFunctional(1.0));
    auto F = PolynomialFunctional::variable(0) * PolynomialFunctional::variable(2);
    auto rep = duality_check(F, u, cov);
    std::cout << "E[F delta(u)] = " << rep.value << ", E<DF, u> = " << rep.bound << "\n";
}
