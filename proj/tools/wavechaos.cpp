// wavechaos: verification suites and lattice simulations.
//
//   wavechaos verify-lemma [--config F] [--kind wave|heat] [--out DIR]
//   wavechaos chaos        [--config F] [--seed N]
//   wavechaos simulate     [--config F] [--seed N] [--threads N] [--malliavin]
//   wavechaos series       [--config F] [--seed N] [--kind wave|heat]
//
// Exit status: 0 all checks pass, 1 a numerical check failed, 2 bad config or parameters.

#include <chrono>
#include <iostream>
#include <utility>

#include <CLI11.hpp>

#include <wavechaos/cli.hpp>

using namespace wavechaos;

int main(int argc, char** argv)
{
    CLI::App app{"wavechaos"};
    app.require_subcommand(1);
    std::string config_path, out_dir, kind;
    long long seed = -1;
    int threads = 0;
    bool malliavin = false;
    const std::pair<const char*, const char*> commands[] = {
        {"verify-lemma", "scaling identity and sup constant of the frequency integral"},
        {"chaos", "randomized isometry, duality and Malliavin identities"},
        {"simulate", "chaos truncation, sampled moments and Hoelder fits"},
        {"series", "alpha~_n estimates, S(t) partial sums and the Sobolev series"}};
    for (auto [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "base seed");
        sub->add_option("--out", out_dir, "report directory");
        sub->add_option("--kind", kind, "propagator")->check(CLI::IsMember({"wave", "heat"}));
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
        if (std::string(name) == "simulate") sub->add_flag("--malliavin", malliavin, "add the derivative equation check");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    auto* sub = app.get_subcommands().front();

    try {
        Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
        if (seed >= 0) cfg.set("seed", std::to_string(seed));
        if (!kind.empty()) cfg.set("kind", kind);
        if (threads > 0) cfg.set("threads", std::to_string(threads));
        if (!out_dir.empty()) cfg.set("out", out_dir);
        if (malliavin) cfg.set("malliavin", "true");
        auto rc = RunConfig::from(parse_command(sub->get_name()), cfg);

        auto t0 = std::chrono::steady_clock::now();
        auto res = run_command(rc);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (auto& r : res.reports)
            std::cout << (r.pass ? "PASS " : r.status == Status::fail ? "FAIL " : "WARN ") << r.name << "  value="
                      << fmt_g17(r.value) << "  bound=" << fmt_g17(r.bound) << "  err=" << fmt_g17(r.error_estimate)
                      << "  [" << to_string(r.status) << "]\n";
        for (auto& f : res.files) std::cout << "wrote " << f << "\n";
        std::cout << sub->get_name() << ": " << (res.exit_code == 0 ? "ok" : "FAILED") << " in " << secs << " s\n";
        return res.exit_code;
    } catch (const DomainError& e) {
        std::cerr << "wavechaos: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "wavechaos: " << e.what() << "\n";
        return 1;
    }
}
