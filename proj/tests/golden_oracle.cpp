// Brute-force reference values, independent of the library.
// Usage: golden_oracle OUT.json
//
// Each entry records the method used. Regenerate only when a method changes.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>

#include <json.hpp>

using F = std::function<long double(long double)>;

// Composite Simpson on [a, b] with n (even) panels.
static long double simpson(const F& f, long double a, long double b, long long n)
{
    if (n % 2) ++n;
    long double h = (b - a) / n, s = f(a) + f(b);
    for (long long i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0L : 2.0L);
    return s * h / 3;
}

// Gauss-Legendre nodes on [-1, 1] by Newton iteration.
static void gauss_legendre(int n, std::vector<long double>& x, std::vector<long double>& w)
{
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        long double z = std::cos(M_PIl * (i + 0.75L) / (n + 0.5L)), dp = 0;
        for (int it = 0; it < 100; ++it) {
            long double p0 = 1, p1 = z;
            for (int k = 2; k <= n; ++k) {
                long double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1);
            long double dz = p1 / dp;
            z -= dz;
            if (std::fabs(dz) < 1e-19L) break;
        }
        x[i] = z;
        w[i] = 2 / ((1 - z * z) * dp * dp);
    }
}

static long double sinc2(long double z)
{
    if (std::fabs(z) < 1e-6L) return 1 - z * z / 3;
    long double s = std::sin(z) / z;
    return s * s;
}

// int_0^inf x^{s-1} sin^2 x dx = -Gamma(s) cos(pi s / 2) / 2^{s+1}, -2 < s < 0.
static double mellin_sin2(double s) { return -std::tgamma(s) * std::cos(M_PI * s / 2) / std::pow(2.0, s + 1); }

static double sphere(int d) { return d == 1 ? 2.0 : d == 2 ? 2 * M_PI : 4 * M_PI; }

int main(int argc, char** argv)
{
    if (argc != 2) {
        std::cerr << "usage: golden_oracle OUT.json\n";
        return 2;
    }
    nlohmann::json out;
    out["version"] = 1;
    auto put = [&](const std::string& key, double v, const std::string& method, nlohmann::json params) {
        out["values"][key] = {{"value", v}, {"method", method}, {"params", params}};
        std::printf("%-40s %.15g\n", key.c_str(), v);
    };

    // Wave, d = 1, alpha = 1/2, t = 1, eta = 0: with xi = s^2 the integral is 4 int_0^inf sin^2(s^2)/s^4 ds.
    {
        const long double S = 100;
        long double bulk = 4 * simpson([](long double s) { return sinc2(s * s); }, 0, S, 10000000);
        long double tail = 4 * (1 / (6 * S * S * S));
        put("lemma_wave_d1_a0.5_t1_eta0", static_cast<double>(bulk + tail),
            "Simpson 1e7 panels of 4 sin^2(s^2)/s^4 on [0,100] + mean tail", {{"d", 1}, {"alpha", 0.5}, {"t", 1}, {"eta", 0}});
        put("lemma_wave_d1_a0.5_t1_eta0_mellin", 2 * mellin_sin2(-1.5), "closed form 2 M[sin^2](-3/2)",
            {{"d", 1}, {"alpha", 0.5}});
    }
    // Wave, d = 1, alpha = 1/2, t = 1, eta = 2: xi = eta +- v^2.
    {
        const long double eta = 2, V = 100;
        auto f = [&](long double v) {
            long double a = eta + v * v, b = eta - v * v;
            return 2 * (sinc2(a) + sinc2(b));
        };
        long double bulk = simpson(f, 0, V, 10000000);
        long double tail = 2 / (3 * V * V * V);
        put("lemma_wave_d1_a0.5_t1_eta2", static_cast<double>(bulk + tail),
            "Simpson 1e7 panels after xi = eta +- v^2 on [0,100] + mean tail", {{"d", 1}, {"alpha", 0.5}, {"t", 1}, {"eta", 2}});
    }
    // Wave at eta = 0 in d = 2, 3 with alpha = d - 1/2: omega_d M[sin^2](-3/2).
    for (int d : {2, 3})
        put("lemma_wave_d" + std::to_string(d) + "_a" + std::to_string(d) + "-0.5_t1_eta0", sphere(d) * mellin_sin2(-1.5),
            "closed form omega_d M[sin^2](-3/2)", {{"d", d}, {"alpha", d - 0.5}});
    // Heat at eta = 0: omega_d 2^{(d-alpha)/2 - 1} Gamma((d-alpha)/2).
    for (int d : {1, 2, 3}) {
        double a = d - 0.5, b = (d - a) / 2;
        put("lemma_heat_d" + std::to_string(d) + "_t1_eta0", sphere(d) * std::pow(2.0, b - 1) * std::tgamma(b),
            "closed form Gaussian moment", {{"d", d}, {"alpha", a}});
    }
    // Heat, d = 1, alpha = 1/2, eta = 0.5 via xi = eta +- v^2.
    {
        const long double eta = 0.5L;
        auto f = [&](long double v) {
            long double a = eta + v * v, b = eta - v * v;
            return 2 * (std::exp(-a * a / 2) + std::exp(-b * b / 2));
        };
        put("lemma_heat_d1_a0.5_t1_eta0.5", static_cast<double>(simpson(f, 0, 12, 2000000)),
            "Simpson 2e6 panels after xi = eta +- v^2 on [0,12]", {{"d", 1}, {"alpha", 0.5}, {"eta", 0.5}});
    }
    // Uniform-beta integral at eta = 0: (omega_d / 2) B((d-alpha)/2, beta - (d-alpha)/2).
    for (auto [d, a, beta] : {std::tuple{1, 0.5, 0.5}, std::tuple{2, 1.0, 0.75}, std::tuple{3, 2.0, 0.9}}) {
        double p = (d - a) / 2, q = beta - p;
        double B = std::tgamma(p) * std::tgamma(q) / std::tgamma(p + q);
        put("uniform_beta_d" + std::to_string(d), sphere(d) / 2 * B, "closed form Beta function",
            {{"d", d}, {"alpha", a}, {"beta", beta}});
    }
    // alpha~_1(1), wave, d = 1, alpha = 1/2, H = 3/4:
    // alpha_H C0 int_{[0,1]^2} |u - v|^{-1/2} [((u+v)/2)^{3/2} - (|u-v|/2)^{3/2}] du dv
    // with v - u = w^2 (both signs), Gauss-Legendre 400 x 400.
    {
        double H = 0.75, alpha = 0.5, kap = alpha + 1, aH = H * (2 * H - 1);
        double C0 = 2 * mellin_sin2(-1.5);
        std::vector<long double> x, w;
        gauss_legendre(400, x, w);
        long double acc = 0;
        for (int i = 0; i < 400; ++i) {
            long double ww = (x[i] + 1) / 2, wi = w[i] / 2;
            long double g = ww * ww, len = 1 - g;
            for (int j = 0; j < 400; ++j) {
                long double u = len * (x[j] + 1) / 2, wj = w[j] / 2 * len;
                long double P = std::pow((2 * u + g) / 2, (long double)kap) - std::pow(g / 2, (long double)kap);
                acc += wi * wj * P;
            }
        }
        // 2 (sign of v - u) * 2 (Jacobian 2w, weight 1/w)
        put("alpha_tilde1_wave_d1_t1", static_cast<double>(aH * C0 * 4 * acc),
            "Gauss-Legendre 400^2 after v - u = w^2, C0 from closed form", {{"d", 1}, {"alpha", alpha}, {"H", H}, {"t", 1}});
        // Heat: alpha_H C0h int |u-v|^{2H-2} (u+v)^{-(d-alpha)/2}, C0h = 2^{1/4} Gamma(1/4)
        double C0h = 2 * std::pow(2.0, 0.25 - 1) * std::tgamma(0.25);
        long double acc2 = 0;
        for (int i = 0; i < 400; ++i) {
            long double ww = (x[i] + 1) / 2, wi = w[i] / 2;
            long double g = ww * ww, len = 1 - g;
            for (int j = 0; j < 400; ++j) {
                long double u = len * (x[j] + 1) / 2, wj = w[j] / 2 * len;
                acc2 += wi * wj * std::pow(2 * u + g, -0.25L);
            }
        }
        put("alpha_tilde1_heat_d1_t1", static_cast<double>(aH * C0h * 4 * acc2),
            "Gauss-Legendre 400^2 after v - u = w^2, C0 from closed form", {{"d", 1}, {"alpha", alpha}, {"H", H}, {"t", 1}});
    }
    std::ofstream(argv[1]) << out.dump(2) << "\n";
}
