#pragma once

// Verification suites behind the wavechaos command-line tool.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "chaos_algebra.hpp"
#include "config.hpp"
#include "estimates.hpp"
#include "instances.hpp"
#include "io.hpp"
#include "lattice_gaussian.hpp"
#include "malliavin_ops.hpp"
#include "report.hpp"
#include "sobolev.hpp"
#include "solver.hpp"

namespace wavechaos {

enum class Command { verify_lemma, chaos, simulate, series };

inline const char* to_string(Command c)
{
    switch (c) {
    case Command::verify_lemma: return "verify-lemma";
    case Command::chaos: return "chaos";
    case Command::simulate: return "simulate";
    case Command::series: return "series";
    }
    return "?";
}

inline Command parse_command(const std::string& s)
{
    for (auto c : {Command::verify_lemma, Command::chaos, Command::simulate, Command::series})
        if (s == to_string(c)) return c;
    throw ConfigError("unknown command: " + s);
}

struct LemmaKnobs {
    std::vector<double> t_grid{0.5, 1.0, 2.0};
    std::vector<double> eta_grid{0.0, 0.3, 1.0, 3.0, 10.0};
    std::vector<double> sweep_radii{25, 50, 100};
    int sweep_points = 201;
    double scaling_tol = 1e-6;
    double stabilize_tol = 1e-6;
};

struct ChaosKnobs {
    int trials = 200;
    int max_order = 3;
    int max_cells = 6;
    int degree_cap = kDefaultDegreeCap;
    double tol = 1e-10;
};

struct SimulateKnobs {
    int N = 2;
    int check_n_t = 3;
    int check_n_x = 3;
    int holder_N = 1;
    std::size_t holder_samples = 4000;
    double holder_target = 0.60;
    double holder_max_lag = 0.25;
    bool export_field = true;
};

struct SeriesKnobs {
    double t = 1.0;
    int N = 3;
    int sobolev_k = 2;
    int sobolev_N = 4;
};

struct RunConfig {
    Command command = Command::verify_lemma;
    LatticeSpec spec;
    PropagatorKind kind = PropagatorKind::wave;
    QuadratureConfig quad;
    MCConfig mc;
    std::string out_dir = ".";
    bool malliavin = false;
    LemmaKnobs lemma;
    ChaosKnobs chaos;
    SimulateKnobs simulate;
    SeriesKnobs series;
    std::string canonical;

    static RunConfig from(Command cmd, const Config& c)
    {
        RunConfig r;
        r.command = cmd;
        if (cmd == Command::chaos) {
            r.spec.n_t = 3;
            r.spec.n_x = 2;
        } else if (cmd == Command::simulate) {
            r.spec.n_t = 64;
            r.spec.n_x = 136;
            r.spec.L = 1.0625;
        }
        auto& sp = r.spec;
        sp.d = static_cast<int>(c.get_int("d", sp.d));
        sp.H = c.get_double("H", sp.H);
        sp.alpha = c.get_double("alpha", sp.alpha);
        sp.T = c.get_double("T", sp.T);
        sp.L = c.get_double("L", sp.L);
        sp.n_t = static_cast<int>(c.get_int("n_t", sp.n_t));
        sp.n_x = static_cast<int>(c.get_int("n_x", sp.n_x));
        for (auto& [key, val] : c.values())
            if (key != "out" && key != "threads") r.canonical += key + "=" + val + ";";
        r.kind = parse_kind(c.get_string("kind", "wave"));
        r.quad.cutoff = c.get_double("quad.cutoff", r.quad.cutoff);
        r.quad.panels = static_cast<int>(c.get_int("quad.panels", r.quad.panels));
        auto tm = c.get_string("quad.tail_mode", "extended");
        if (tm == "extended")
            r.quad.tail_mode = TailMode::extended;
        else if (tm == "analytic_bound")
            r.quad.tail_mode = TailMode::analytic_bound;
        else
            throw ConfigError("quad.tail_mode must be extended or analytic_bound");
        r.quad.rel_tol = c.get_double("quad.rel_tol", r.quad.rel_tol);
        r.mc.samples = static_cast<std::size_t>(c.get_int("mc.samples", static_cast<long long>(r.mc.samples)));
        r.mc.seed = static_cast<std::uint64_t>(c.get_int("seed", static_cast<long long>(r.mc.seed)));
        if (c.has("mc.importance_beta")) r.mc.importance_beta = c.get_double("mc.importance_beta", 0);
        r.mc.nested_samples =
            static_cast<std::size_t>(c.get_int("mc.nested_samples", static_cast<long long>(r.mc.nested_samples)));
        r.mc.threads = static_cast<int>(c.get_int("threads", r.mc.threads));
        r.out_dir = c.get_string("out", r.out_dir);
        r.malliavin = c.get_bool("malliavin", r.malliavin);

        auto& L = r.lemma;
        L.t_grid = c.get_list("lemma.t_grid", L.t_grid);
        L.eta_grid = c.get_list("lemma.eta_grid", L.eta_grid);
        L.sweep_radii = c.get_list("lemma.sweep_radii", L.sweep_radii);
        L.sweep_points = static_cast<int>(c.get_int("lemma.sweep_points", L.sweep_points));
        L.scaling_tol = c.get_double("lemma.scaling_tol", L.scaling_tol);
        L.stabilize_tol = c.get_double("lemma.stabilize_tol", L.stabilize_tol);

        auto& C = r.chaos;
        C.trials = static_cast<int>(c.get_int("chaos.trials", C.trials));
        C.max_order = static_cast<int>(c.get_int("chaos.max_order", C.max_order));
        C.max_cells = static_cast<int>(c.get_int("chaos.max_cells", C.max_cells));
        C.degree_cap = static_cast<int>(c.get_int("chaos.degree_cap", C.degree_cap));
        C.tol = c.get_double("chaos.tol", C.tol);

        auto& S = r.simulate;
        S.N = static_cast<int>(c.get_int("simulate.N", S.N));
        S.check_n_t = static_cast<int>(c.get_int("simulate.check_n_t", S.check_n_t));
        S.check_n_x = static_cast<int>(c.get_int("simulate.check_n_x", S.check_n_x));
        S.holder_N = static_cast<int>(c.get_int("holder.N", S.holder_N));
        S.holder_samples = static_cast<std::size_t>(c.get_int("holder.samples", static_cast<long long>(S.holder_samples)));
        S.holder_target = c.get_double("holder.target", S.holder_target);
        S.holder_max_lag = c.get_double("holder.max_lag", S.holder_max_lag);
        S.export_field = c.get_bool("simulate.export_field", S.export_field);

        auto& E = r.series;
        E.t = c.get_double("series.t", E.t);
        E.N = static_cast<int>(c.get_int("series.N", E.N));
        E.sobolev_k = static_cast<int>(c.get_int("sobolev.k", E.sobolev_k));
        E.sobolev_N = static_cast<int>(c.get_int("sobolev.N", E.sobolev_N));

        auto unused = c.unused_keys();
        if (!unused.empty()) {
            std::string msg = "unknown config keys:";
            for (auto& k : unused) msg += " " + k;
            throw ConfigError(msg);
        }
        r.validate();
        return r;
    }

    void validate() const
    {
        spec.validate(kind == PropagatorKind::wave);
        quad.validate();
        mc.validate();
        require(mc.threads >= 1, "threads must be >= 1");
        require(chaos.trials >= 1 && chaos.max_order >= 1 && chaos.max_cells >= chaos.max_order + 1,
                "chaos: need trials >= 1, max_order >= 1, max_cells > max_order");
        require(lemma.sweep_points >= 3 && !lemma.t_grid.empty() && !lemma.eta_grid.empty(),
                "lemma: grids must be non-empty, sweep_points >= 3");
        for (double t : lemma.t_grid) require(t > 0, "lemma.t_grid entries must be > 0");
        require(series.t > 0 && series.N >= 0 && series.sobolev_N >= 1 && series.sobolev_k >= 0,
                "series: need t > 0, N >= 0, sobolev.N >= 1, sobolev.k >= 0");
        require(simulate.holder_samples >= 2, "holder.samples must be >= 2");
    }

    std::string hash() const { return fnv1a_hex(std::string(to_string(command)) + "|" + canonical); }
};

struct CommandResult {
    std::vector<EstimateReport> reports;
    std::vector<std::string> files;
    int exit_code = 0;
};

inline std::string unique_path(const std::string& dir, const std::string& stem, const std::string& ext)
{
    namespace fs = std::filesystem;
    fs::path p = fs::path(dir) / (stem + ext);
    for (int k = 1; fs::exists(p); ++k) p = fs::path(dir) / (stem + "-" + std::to_string(k) + ext);
    return p.string();
}

inline int exit_code_of(const std::vector<EstimateReport>& reps)
{
    for (auto& r : reps)
        if (r.status == Status::fail) return 1;
    return 0;
}

namespace suites {

inline double rel_diff(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(a), std::fabs(b)); }

inline std::vector<double> linspace(double lo, double hi, int n)
{
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    return v;
}

// lemma_integral(t, eta) against t^e lemma_integral(1, t^p eta) on the configured grid.
inline EstimateReport scaling_identity(PropagatorKind k, double alpha, int d, const LemmaKnobs& L,
                                       const QuadratureConfig& q)
{
    double e = level_exponent(k, alpha, d), p = level_power(k);
    double worst = 0;
    nlohmann::json rows = nlohmann::json::array();
    for (double t : L.t_grid)
        for (double eta : L.eta_grid) {
            double lhs = lemma_integral(k, t, along_axis(d, eta), alpha, d, q);
            double rhs = std::pow(t, e) * lemma_integral(k, 1.0, along_axis(d, std::pow(t, p) * eta), alpha, d, q);
            double rel = rel_diff(lhs, rhs);
            worst = std::max(worst, rel);
            rows.push_back({{"t", t}, {"eta", eta}, {"lhs", lhs}, {"rhs", rhs}, {"rel", rel}});
        }
    EstimateReport r;
    r.name = std::string("scaling_identity_") + to_string(k) + "_d" + std::to_string(d);
    r.value = worst;
    r.bound = L.scaling_tol;
    r.set(worst <= L.scaling_tol);
    r.meta = {{"kind", to_string(k)}, {"d", d}, {"alpha", alpha}, {"exponent", e}, {"points", rows}};
    return r;
}

// Sup over symmetric eta grids of growing radius: interior argmax and a stable value.
inline EstimateReport sup_sweep(PropagatorKind k, double alpha, int d, const LemmaKnobs& L, const QuadratureConfig& q)
{
    std::vector<double> sups;
    bool localized = true;
    nlohmann::json sweeps = nlohmann::json::array();
    for (double R : L.sweep_radii) {
        auto rep = lemma_sup_constant(k, alpha, d, linspace(-R, R, L.sweep_points), q);
        sups.push_back(rep.value);
        localized = localized && rep.status == Status::pass;
        sweeps.push_back({{"radius", R}, {"sup", rep.value}, {"argmax_eta", rep.meta["argmax_eta"]},
                          {"status", to_string(rep.status)}});
    }
    double drift = 0;
    for (std::size_t i = 1; i < sups.size(); ++i) drift = std::max(drift, rel_diff(sups[i], sups[i - 1]));
    EstimateReport r;
    r.name = std::string("sup_constant_") + to_string(k) + "_d" + std::to_string(d);
    r.value = sups.back();
    r.error_estimate = drift * sups.back();
    bool finite = std::isfinite(sups.back());
    if (!finite)
        r.set(false);
    else
        r.set(localized && drift <= L.stabilize_tol, Status::warning);
    r.meta = {{"kind", to_string(k)}, {"d", d}, {"alpha", alpha}, {"sweeps", sweeps}, {"relative_drift", drift}};
    return r;
}

inline std::vector<EstimateReport> verify_lemma(const RunConfig& rc)
{
    const auto& s = rc.spec;
    check_admissible(rc.kind, s.alpha, s.d);
    std::vector<EstimateReport> out;
    out.push_back(scaling_identity(rc.kind, s.alpha, s.d, rc.lemma, rc.quad));
    out.push_back(sup_sweep(rc.kind, s.alpha, s.d, rc.lemma, rc.quad));
    if (rc.kind == PropagatorKind::wave) {
        out.push_back(scaling_identity(PropagatorKind::heat, s.alpha, s.d, rc.lemma, rc.quad));
        out.push_back(sup_sweep(PropagatorKind::heat, s.alpha, s.d, rc.lemma, rc.quad));
    }
    return out;
}

inline EstimateReport aggregate(const std::string& name, const std::vector<double>& errs, double tol,
                                nlohmann::json meta = nlohmann::json::object())
{
    double worst = 0;
    for (double e : errs) worst = std::max(worst, e);
    EstimateReport r;
    r.name = name;
    r.value = worst;
    r.bound = tol;
    r.set(worst <= tol);
    meta["trials"] = errs.size();
    r.meta = meta;
    return r;
}

// Randomized exact identities of the chaos and Malliavin layers.
inline std::vector<EstimateReport> chaos(const RunConfig& rc)
{
    const auto& C = rc.chaos;
    if (2 * (C.max_order + 1) > C.degree_cap)
        throw CapExceeded("chaos: degree_cap " + std::to_string(C.degree_cap) + " is below 2 (max_order + 1) = " +
                          std::to_string(2 * (C.max_order + 1)));
    auto cov = build_covariance(rc.spec);
    std::size_t cells = std::min<std::size_t>(cov.dim(), static_cast<std::size_t>(C.max_cells));
    int cap = C.degree_cap;
    std::vector<EstimateReport> out;

    InstanceGenerator g(rc.mc.seed, cells);
    std::vector<double> e;
    for (int i = 0; i < C.trials; ++i) {
        int n = g.uniform_int(1, C.max_order), m = g.uniform_int(1, C.max_order);
        auto rep = isometry_check(g.kernel(n), g.kernel(m), cov, cap);
        e.push_back(rep.error_estimate);
    }
    out.push_back(aggregate("isometry", e, C.tol, {{"cells", cells}}));

    InstanceGenerator gd(rc.mc.seed + 1, std::min<std::size_t>(cells, 5));
    e.clear();
    for (int i = 0; i < C.trials; ++i) {
        auto F = gd.polynomial(gd.uniform_int(0, 3));
        auto u = gd.hp(gd.uniform_int(0, 2));
        auto rep = duality_check(F, u, cov, cap);
        e.push_back(rep.error_estimate / (1 + std::fabs(rep.value)));
    }
    out.push_back(aggregate("duality", e, C.tol));

    InstanceGenerator gr(rc.mc.seed + 2, cells);
    std::vector<double> ed, es;
    for (int i = 0; i < C.trials; ++i) {
        int n = 1 + i % C.max_order;
        auto f = gr.kernel(n);
        auto In = multiple_wiener_integral(f, cov);
        ed.push_back(max_abs_diff(derivative(In), derivative_of_In(f, cov)));
        // delta(I_{n-1}(f(., c)) 1_c) = I_n(f)
        HPValuedFunctional u;
        for (auto c : f.support()) u.add(c, multiple_wiener_integral(f.slice(c), cov));
        es.push_back(max_abs_diff(divergence(u, cov, cap), In));
    }
    out.push_back(aggregate("derivative_rule", ed, C.tol));
    out.push_back(aggregate("delta_shift", es, C.tol));

    InstanceGenerator gh(rc.mc.seed + 3, std::min<std::size_t>(cells, 4));
    std::vector<double> eh, ec;
    int energy_fail = 0, hilbert_trials = std::max(1, C.trials / 2);
    double worst_gap = 0, worst_tol = 0;
    for (int i = 0; i < hilbert_trials; ++i) {
        auto U = gh.hp2(gh.uniform_int(0, 2));
        auto F = gh.hp(gh.uniform_int(0, 2));
        auto hd = hilbert_duality_check(F, U, cov, cap);
        eh.push_back(hd.error_estimate / (1 + std::fabs(hd.value)));
        auto en = energy_check(U, cov, cap);
        if (!en.pass) ++energy_fail;
        worst_gap = std::max(worst_gap, en.value - en.bound);
        worst_tol = std::max(worst_tol, en.error_estimate);
        ec.push_back(max_abs_coeff(commutation_residual(U, gh.cell(), gh.cell(), cov)));
    }
    out.push_back(aggregate("hilbert_duality", eh, C.tol));
    out.push_back(aggregate("commutation_rule", ec, C.tol));
    EstimateReport en;
    en.name = "delta_star_energy";
    en.value = worst_gap;
    en.bound = 0;
    en.error_estimate = worst_tol;
    en.set(energy_fail == 0);
    en.meta = {{"trials", hilbert_trials}, {"violations", energy_fail}};
    out.push_back(en);
    return out;
}

// Center space cell of the lattice.
inline std::array<int, 3> center_cell(const LatticeSpec& s)
{
    std::array<int, 3> c{0, 0, 0};
    for (int k = 0; k < s.d; ++k) c[k] = s.n_x / 2;
    return c;
}

// Time points from n_t/2 to n_t at the center cell and space points at time n_t/2 along axis 0.
inline std::vector<FieldPoint> holder_points(const LatticeSpec& s)
{
    std::vector<FieldPoint> pts;
    auto c = center_cell(s);
    int k0 = s.n_t / 2;
    for (int k = k0; k <= s.n_t; ++k) pts.push_back({k, c});
    double half = 0.5 * k0 * s.dt();
    for (int i = 0; i < s.n_x; ++i) {
        auto sp = c;
        sp[0] = i;
        double xm = -s.L + (i + 0.5) * s.dx();
        if (std::fabs(xm) <= half + 1e-12 && i != c[0]) pts.push_back({k0, sp});
    }
    return pts;
}

// E X^4 <= c (E X^2)^2 as a delta-method z-test on samples of X.
inline EstimateReport hypercontractive_sample_check(const std::string& name, const std::vector<double>& x, int n)
{
    double c = std::pow(hypercontractive_bound(4.0, n), 4);
    auto m2 = sample_stat(x.size(), [&](std::size_t i) { return x[i] * x[i]; });
    auto m4 = sample_stat(x.size(), [&](std::size_t i) { return std::pow(x[i], 4); });
    auto g = sample_stat(x.size(), [&](std::size_t i) { return std::pow(x[i], 4) - 2 * c * m2.mean * x[i] * x[i]; });
    double gap = m4.mean - c * m2.mean * m2.mean;
    EstimateReport r;
    r.name = name;
    r.value = std::pow(m4.mean, 0.25) / std::sqrt(m2.mean);
    r.bound = hypercontractive_bound(4.0, n);
    r.error_estimate = g.se;
    r.set(gap <= 3 * g.se);
    r.meta = {{"n", n}, {"m2", m2.mean}, {"m4", m4.mean}, {"m4_se", m4.se}, {"gap", gap}};
    return r;
}

struct SimulateOutput {
    std::vector<EstimateReport> reports;
    SampledField field;
};

inline SimulateOutput simulate(const RunConfig& rc)
{
    const auto& S = rc.simulate;
    SimulateOutput out;
    auto& reps = out.reports;
    PropagatorKind k = rc.kind;

    LatticeSpec cs = rc.spec;
    cs.n_t = S.check_n_t;
    cs.n_x = S.check_n_x;
    auto ccov = build_covariance(cs);
    double t = cs.T;
    Freq x = mid_point(cs, Cell{0, center_cell(cs)});

    std::vector<double> pe, me;
    for (int N = 0; N <= std::min(S.N, kMaxTruncation); ++N) {
        auto a = picard_iterate(cs, t, x, N, ccov, k);
        auto b = chaos_truncation(cs, t, x, N, ccov, k);
        pe.push_back(max_abs_diff(a, b));
        me.push_back(std::fabs(wick_expectation(b, ccov) - 1));
    }
    reps.push_back(aggregate("picard_identity", pe, 1e-10, {{"spec_hash", cs.hash()}}));
    reps.push_back(aggregate("mean_preservation", me, 1e-10));

    auto u = chaos_truncation(cs, t, x, S.N, ccov, k);
    double exact = second_moment_exact(u, ccov);
    double orth = orthogonality_sum(cs, t, x, S.N, ccov, k);
    reps.push_back(aggregate("second_moment_orthogonality", {rel_diff(exact, orth)}, 1e-10,
                             {{"exact", exact}, {"orthogonality_sum", orth}, {"N", S.N}}));

    // Sampled u_N and the chaos components J_n at the same point.
    std::vector<PolynomialFunctional> J;
    for (int n = 1; n <= S.N; ++n) J.push_back(multiple_wiener_integral(discretize_fn(k, cs, t, x, n), ccov));
    std::size_t M = rc.mc.samples;
    std::vector<double> us(M);
    std::vector<std::vector<double>> js(J.size(), std::vector<double>(M));
    for_each_noise_chunk(ccov, rc.mc.seed, M, rc.mc.threads,
                         [&](std::size_t, std::size_t first, const Eigen::MatrixXd& blk) {
                             for (Eigen::Index c = 0; c < blk.cols(); ++c) {
                                 const double* w = blk.col(c).data();
                                 us[first + c] = u.evaluate(w);
                                 for (std::size_t n = 0; n < J.size(); ++n) js[n][first + c] = J[n].evaluate(w);
                             }
                         });
    auto m1 = sample_stat(M, [&](std::size_t i) { return us[i]; });
    auto m2 = sample_stat(M, [&](std::size_t i) { return us[i] * us[i]; });
    EstimateReport sm;
    sm.name = "sampled_moments";
    double z1 = std::fabs(m1.mean - 1) / m1.se, z2 = std::fabs(m2.mean - exact) / m2.se;
    sm.value = std::max(z1, z2);
    sm.bound = 3;
    sm.set(sm.value <= 3);
    sm.meta = {{"samples", M}, {"mean", m1.mean}, {"mean_se", m1.se}, {"second", m2.mean}, {"second_se", m2.se},
               {"second_exact", exact}};
    reps.push_back(sm);
    for (std::size_t n = 0; n < J.size() && n < 2; ++n)
        reps.push_back(hypercontractive_sample_check("hypercontractivity_J" + std::to_string(n + 1), js[n],
                                                     static_cast<int>(n + 1)));

    if (rc.malliavin)
        for (int N = 1; N <= std::min(S.N, 2); ++N) {
            auto r = derivative_equation_check(cs, t, x, N, ccov, k);
            r.name += "_N" + std::to_string(N);
            reps.push_back(r);
        }

    // Field on the full lattice and Hoelder fits.
    const auto& s = rc.spec;
    auto cov = build_covariance(s);
    MCConfig hm = rc.mc;
    hm.samples = S.holder_samples;
    hm.seed = rc.mc.seed + 17;
    out.field = sample_field(s, S.holder_N, cov, hm, holder_points(s), k);
    for (auto axis : {HolderAxis::time, HolderAxis::space}) {
        double unit = axis == HolderAxis::time ? s.dt() : s.dx();
        int max_lag = std::max(1, static_cast<int>(std::floor(S.holder_max_lag / unit + 1e-9)));
        try {
            reps.push_back(holder_fit(out.field, axis, S.holder_target, max_lag));
        } catch (const InsufficientData& ex) {
            EstimateReport r;
            r.name = axis == HolderAxis::time ? "holder_time" : "holder_space";
            r.value = std::nan("");
            r.pass = false;
            r.status = Status::degenerate;
            r.meta = {{"reason", ex.what()}, {"spec_hash", s.hash()}};
            reps.push_back(r);
        }
    }
    return out;
}

inline std::vector<EstimateReport> series(const RunConfig& rc)
{
    const auto& E = rc.series;
    ModelParams m{rc.spec.d, rc.spec.alpha, rc.spec.H};
    PropagatorKind k = rc.kind;
    std::vector<EstimateReport> out;
    int nmax = std::min(E.N, m.d == 1 ? 3 : 1);
    for (int n = 0; n <= nmax; ++n) {
        MCConfig mc = rc.mc;
        mc.seed = rc.mc.seed + static_cast<std::uint64_t>(n);
        auto r = alpha_tilde_mc(k, n, E.t, m, mc, rc.quad);
        r.name += "_" + std::to_string(n);
        out.push_back(r);
    }

    // alpha~_1(2t) / alpha~_1(t) with independent streams.
    MCConfig m1 = rc.mc, m2 = rc.mc;
    m1.seed = rc.mc.seed + 101;
    m2.seed = rc.mc.seed + 202;
    auto a = alpha_tilde_mc(k, 1, E.t, m, m1, rc.quad);
    auto b = alpha_tilde_mc(k, 1, 2 * E.t, m, m2, rc.quad);
    double expo = 2 * m.H + level_exponent(k, m.alpha, m.d);
    double expect = std::pow(2.0, expo);
    double ratio = b.value / a.value;
    double se = ratio * std::hypot(a.error_estimate / a.value, b.error_estimate / b.value);
    EstimateReport sc;
    sc.name = "alpha_tilde_1_time_scaling";
    sc.value = ratio;
    sc.bound = expect;
    sc.error_estimate = se;
    sc.set(std::fabs(ratio - expect) <= 3 * se);
    sc.meta = {{"t", E.t}, {"exponent", expo}, {"alpha_t", a.value}, {"alpha_2t", b.value}};
    out.push_back(sc);

    auto S = series_S(k, E.t, m, E.N, rc.mc, rc.quad);
    out.push_back(S);
    EstimateReport dec;
    dec.name = "term_decay";
    auto ratios = S.meta["decay_ratios"].get<std::vector<double>>();
    bool decreasing = true;
    for (std::size_t i = 1; i < ratios.size(); ++i) decreasing = decreasing && ratios[i] < ratios[i - 1];
    dec.value = ratios.empty() ? 0.0 : ratios.back();
    dec.set(decreasing, Status::warning);
    dec.meta = {{"ratios", ratios}};
    out.push_back(dec);

    out.push_back(sobolev_norm_series(k, E.t, E.sobolev_k, m, E.sobolev_N, rc.mc, rc.quad));
    return out;
}

} // namespace suites

inline nlohmann::json config_json(const RunConfig& rc)
{
    return {{"command", to_string(rc.command)}, {"kind", to_string(rc.kind)}, {"spec", rc.spec.canonical()},
            {"seed", rc.mc.seed}, {"samples", rc.mc.samples}, {"threads", rc.mc.threads}, {"canonical", rc.canonical}};
}

// Writes <cmd>-<hash>.json and .csv; never overwrites.
inline std::vector<std::string> write_reports(const RunConfig& rc, const std::vector<EstimateReport>& reps)
{
    std::filesystem::create_directories(rc.out_dir);
    std::string stem = std::string(to_string(rc.command)) + "-" + rc.hash();
    nlohmann::json arr = nlohmann::json::array();
    for (auto& r : reps) arr.push_back(r.to_json());
    nlohmann::json doc = {{"config", config_json(rc)}, {"reports", arr}, {"exit_code", exit_code_of(reps)}};
    auto jp = unique_path(rc.out_dir, stem, ".json");
    std::ofstream(jp) << doc.dump(2) << "\n";
    auto cp = unique_path(rc.out_dir, stem, ".csv");
    std::ofstream csv(cp);
    csv << EstimateReport::csv_header() << ",status\n";
    for (auto& r : reps) csv << r.csv_row() << "," << to_string(r.status) << "\n";
    return {jp, cp};
}

inline CommandResult run_command(const RunConfig& rc)
{
    CommandResult res;
    switch (rc.command) {
    case Command::verify_lemma: res.reports = suites::verify_lemma(rc); break;
    case Command::chaos: res.reports = suites::chaos(rc); break;
    case Command::series: res.reports = suites::series(rc); break;
    case Command::simulate: {
        auto sim = suites::simulate(rc);
        res.reports = std::move(sim.reports);
        if (rc.simulate.export_field) {
            std::filesystem::create_directories(rc.out_dir);
            auto fp = unique_path(rc.out_dir, "field-" + rc.hash(), ".bin");
            write_binary(fp, sim.field.header(), sim.field.values);
            res.files.push_back(fp);
        }
        break;
    }
    }
    auto f = write_reports(rc, res.reports);
    res.files.insert(res.files.end(), f.begin(), f.end());
    res.exit_code = exit_code_of(res.reports);
    return res;
}

} // namespace wavechaos
