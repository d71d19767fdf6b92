#include "scsi/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

using namespace scsi;

int main(int argc, char** argv) {
    CLI::App app{"Self-consistent stochastic interpolants: experiments and tools"};
    app.require_subcommand(1);
    app.fallthrough();

    std::uint64_t seed = 0;
    std::string out;
    std::optional<int> threads;
    app.add_option("--seed", seed, "Root seed for every random stream");
    app.add_option("--out", out, "Output directory");
    app.add_option("--threads", threads, "Transport worker threads");

    std::optional<int> steps;
    std::optional<std::string> mode, scheme;
    std::optional<double> epsilon;
    std::vector<std::string> sets;
    auto add_transport_flags = [&](CLI::App* sub) {
        sub->add_option("--steps", steps, "Transport steps");
        sub->add_option("--mode", mode, "ode | sde");
        sub->add_option("--epsilon", epsilon, "Transport diffusion coefficient");
        sub->add_option("--scheme", scheme, "euler | heun");
        sub->add_option("--set", sets, "Config override section.key=value (repeatable)");
    };
    auto overrides = [&]() {
        std::vector<std::string> o = sets;
        o.push_back("seed=" + std::to_string(seed));
        if (!out.empty()) o.push_back("out=" + out);
        if (threads) o.push_back("transport.threads=" + std::to_string(*threads));
        if (steps) o.push_back("transport.steps=" + std::to_string(*steps));
        if (mode) o.push_back("transport.mode=" + *mode);
        if (epsilon) o.push_back("transport.epsilon=" + std::to_string(*epsilon));
        if (scheme) o.push_back("transport.scheme=" + *scheme);
        return o;
    };

    RatesOptions rates;
    auto* c_rates = app.add_subcommand("gaussian-rates", "Gaussian self-consistency error against k");
    c_rates->add_option("--d", rates.d, "Dimension");
    c_rates->add_option("--dof", rates.dof, "Wishart degrees of freedom");
    c_rates->add_option("--scale", rates.scale, "Wishart scale");
    c_rates->add_option("--eps", rates.eps, "Diffusion coefficients")->delimiter(',');
    c_rates->add_option("-K,--iterations", rates.K, "Outer iterations");

    ScatterOptions scatter;
    auto* c_scatter = app.add_subcommand("w2-scatter", "Transport cost against W2^2 for Wishart pairs");
    c_scatter->add_option("--d", scatter.d, "Dimension");
    c_scatter->add_option("--dof", scatter.dof, "Wishart degrees of freedom (0: 2d)");
    c_scatter->add_option("--scales", scatter.scales, "Wishart scales")->delimiter(',');
    c_scatter->add_option("--pairs", scatter.n_pairs, "Pairs per scale");
    c_scatter->add_flag("--inject-identical", scatter.inject_identical, "Add one A = B pair per scale");

    double sigma_n = 0.5;
    auto* c_moon = app.add_subcommand("twomoon", "Two-moon restoration under AWGN");
    c_moon->add_option("--sigma", sigma_n, "Observation noise std");
    add_transport_flags(c_moon);

    std::string config_path;
    auto* c_run = app.add_subcommand("run", "Run an experiment config");
    c_run->add_option("config", config_path, "Config file")->required();
    add_transport_flags(c_run);

    std::string eval_a, eval_b, metric = "exact";
    int projections = 256;
    auto* c_eval = app.add_subcommand("eval", "W2 distance between two point CSVs");
    c_eval->add_option("a", eval_a, "Point CSV")->required();
    c_eval->add_option("b", eval_b, "Point CSV")->required();
    c_eval->add_option("--metric", metric, "exact | sliced");
    c_eval->add_option("--projections", projections, "Sliced projections");

    std::string run_dir, obs_path, restored_path = "restored.csv";
    auto* c_restore = app.add_subcommand("restore", "Apply a trained run to observations");
    c_restore->add_option("run_dir", run_dir, "Directory of a finished run")->required();
    c_restore->add_option("observations", obs_path, "Observation CSV (y*, l* columns)")->required();
    c_restore->add_option("-o,--output", restored_path, "Restored CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_rates->parsed()) {
            rates.seed = seed;
            if (!out.empty()) rates.out = out;
            const auto r = cmd_gaussian_rates(rates);
            for (std::size_t i = 0; i < rates.eps.size(); ++i)
                std::printf("eps=%g slope=%.4f\n", rates.eps[i], r.slope[i]);
            std::printf("wrote %s\n", (rates.out / "rates.csv").c_str());
        } else if (c_scatter->parsed()) {
            scatter.seed = seed;
            if (!out.empty()) scatter.out = out;
            const auto r = cmd_w2_scatter(scatter);
            for (std::size_t i = 0; i < scatter.scales.size(); ++i)
                std::printf("scale=%g below=%.4f reversed=%d\n", scatter.scales[i], r.below_fraction[i],
                            r.reversed[i]);
            std::printf("wrote %s\n", (scatter.out / "scatter.csv").c_str());
        } else if (c_moon->parsed()) {
            const TransportMode m = mode ? parse_transport_mode(*mode) : TransportMode::Ode;
            const auto r = cmd_twomoon(sigma_n, m, seed, overrides(), out.empty() ? "out/twomoon" : out);
            if (!r.message.empty()) std::fprintf(stderr, "warning: %s\n", r.message.c_str());
            std::printf("W2 %.6f (%.1f s) -> %s\n", r.final_w2, r.seconds, r.dir.c_str());
        } else if (c_run->parsed()) {
            std::vector<std::string> o = overrides();
            if (!app.get_option("--seed")->count()) o.erase(o.begin() + static_cast<long>(sets.size()));
            const auto r = cmd_run(config_path, o);
            if (!r.message.empty()) std::fprintf(stderr, "warning: %s\n", r.message.c_str());
            std::printf("W2 %.6f (%.1f s) -> %s\n", r.final_w2, r.seconds, r.dir.c_str());
        } else if (c_eval->parsed()) {
            std::printf("%.10g\n", cmd_eval(eval_a, eval_b, metric, projections, seed, out));
        } else if (c_restore->parsed()) {
            cmd_restore(run_dir, obs_path, restored_path, seed);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
