#pragma once

#include <cmath>
#include <vector>

#include "estimates.hpp"

namespace wavechaos {

// Partial sums of sum_n n^k alpha~_n(t) / n! against sum_n [2^k C(t)]^n / (n!)^{gamma + 1}.
inline EstimateReport sobolev_norm_series(PropagatorKind k, double t, int order, const ModelParams& m, int N,
                                          const MCConfig& mc, const QuadratureConfig& q = {})
{
    check_model(k, m);
    require(order >= 0, "sobolev_norm_series: k must be >= 0");
    require(N >= 1, "sobolev_norm_series: N must be >= 1");
    double gamma = factorial_exponent(k, m.alpha, m.d);
    int measured = std::min(N, m.d == 1 ? 3 : 1);
    std::vector<double> alphas{1.0}, ses{0.0};
    double C = 0;
    bool confident = true, upper = false;
    for (int n = 1; n <= measured; ++n) {
        MCConfig mcn = mc;
        mcn.seed = mc.seed + static_cast<std::uint64_t>(n);
        auto a = alpha_tilde_mc(k, n, t, m, mcn, q);
        confident = confident && a.status != Status::low_confidence;
        upper = upper || a.meta.contains("upper_bound_estimate");
        alphas.push_back(a.value);
        ses.push_back(a.error_estimate);
        C = std::max(C, std::pow(std::max(a.value, 0.0) * std::pow(factorial(n), gamma), 1.0 / n));
    }
    double ck = std::pow(2.0, order) * C;
    std::vector<double> partial, comparison, terms;
    double s = order == 0 ? 1.0 : 0.0, cs = s, var = 0;
    bool below = true, monotone = true;
    for (int n = 1; n <= N; ++n) {
        double w = std::pow(static_cast<double>(n), order) / factorial(n);
        // Beyond the measured levels alpha~_n is replaced by its factorial bound.
        double an = n <= measured ? alphas[n] : std::pow(C, n) / std::pow(factorial(n), gamma);
        double term = w * an;
        if (n <= measured) var += w * w * ses[n] * ses[n];
        monotone = monotone && term >= 0;
        s += term;
        cs += std::pow(ck, n) / std::pow(factorial(n), gamma + 1);
        terms.push_back(term);
        partial.push_back(s);
        comparison.push_back(cs);
        below = below && s <= cs * (1 + 1e-12);
    }
    EstimateReport r;
    r.name = std::string("sobolev_norm_series_") + to_string(k);
    r.value = s;
    r.bound = cs;
    r.error_estimate = std::sqrt(var);
    if (!confident)
        r.set(false, Status::low_confidence);
    else
        r.set(below && monotone);
    r.meta = {{"kind", to_string(k)}, {"t", t}, {"k", order}, {"N", N}, {"measured_terms", measured},
              {"C_t", C}, {"terms", terms}, {"partial_sums", partial}, {"comparison", comparison},
              {"upper_bound_estimate", upper}};
    return r;
}

} // namespace wavechaos
