// Oscillatory lemma integral for the wave kernel and its scaling in t.
#include <cstdio>

#include <wavechaos/estimates.hpp>

using namespace wavechaos;

int main()
{
    const int d = 1;
    const double alpha = 0.5;
    auto k = PropagatorKind::wave;
    std::printf("%6s %8s %16s %16s\n", "t", "eta", "I(t,eta)", "t^k I(1,t eta)");
    for (double t : {0.5, 1.0, 4.0})
        for (double eta : {0.0, 2.0}) {
            double lhs = lemma_integral(k, t, {eta}, alpha, d);
            double rhs = std::pow(t, kappa(alpha, d)) * lemma_integral(k, 1.0, {t * eta}, alpha, d);
            std::printf("%6.2f %8.2f %16.10f %16.10f\n", t, eta, lhs, rhs);
        }
    std::vector<double> grid;
    for (int i = -50; i <= 50; ++i) grid.push_back(i);
    auto sup = lemma_sup_constant(k, alpha, d, grid);
    std::printf("sup over |eta| <= 50: %.10f at eta = %g (%s)\n", sup.value, sup.meta["argmax_eta"].get<double>(),
                to_string(sup.status));
}
