#include "scsi/experiments.hpp"

#include "scsi/gaussian.hpp"
#include "scsi/io.hpp"
#include "scsi/metrics.hpp"
#include "scsi/regressor.hpp"
#include "scsi/svg.hpp"
#include "scsi/two_moons.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <sstream>

namespace scsi {

namespace fs = std::filesystem;

namespace {

enum Stream : std::uint64_t {
    kDataStream = 1,
    kChannelStream = 2,
    kInitStream = 3,
    kTrainStream = 4,
    kRestoreStream = 5,
    kEvalStream = 1000,
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
    return out;
}

double w2_distance(const Batch& a, const Batch& b, const EvalConfig& eval, Rng& rng) {
    if (eval.metric == "sliced") return std::sqrt(w2_sliced(SampleSet(a), SampleSet(b), eval.projections, rng));
    return std::sqrt(w2sq_exact(SampleSet(a), SampleSet(b)));
}

std::string checkpoint_path(const std::string& field, const std::string& tag) {
    return "checkpoints/" + field + "_" + tag + ".bin";
}

}  // namespace

std::string apply_overrides(const std::string& text, const std::vector<std::string>& sets) {
    std::vector<std::string> lines;
    {
        std::istringstream in(text);
        std::string l;
        while (std::getline(in, l)) lines.push_back(l);
    }
    for (const auto& set : sets) {
        const auto eq = set.find('=');
        if (eq == std::string::npos) throw Error("override '" + set + "' is not of the form key=value");
        const std::string path = trim(set.substr(0, eq)), value = trim(set.substr(eq + 1));
        const auto dot = path.find('.');
        const std::string section = dot == std::string::npos ? "" : path.substr(0, dot);
        const std::string key = dot == std::string::npos ? path : path.substr(dot + 1);
        if (key.empty()) throw Error("override '" + set + "' has an empty key");

        std::string current;
        int header = section.empty() ? -1 : -2;  // -1: top level starts before line 0
        int last_in_section = -1;
        int hit = -1;
        for (int i = 0; i < static_cast<int>(lines.size()); ++i) {
            const std::string s = trim(lines[i].substr(0, lines[i].find('#')));
            if (s.empty()) continue;
            if (s.front() == '[') {
                current = trim(s.substr(1, s.size() - 2));
                if (current == section) header = i, last_in_section = i;
                continue;
            }
            if (current != section) continue;
            last_in_section = i;
            const auto e = s.find('=');
            if (e != std::string::npos && trim(s.substr(0, e)) == key) hit = i;
        }
        const std::string line = key + " = " + value;
        if (hit >= 0) {
            lines[hit] = line;
        } else if (section.empty()) {
            lines.insert(lines.begin(), line);
        } else if (header == -2) {
            lines.push_back("");
            lines.push_back("[" + section + "]");
            lines.push_back(line);
        } else {
            lines.insert(lines.begin() + last_in_section + 1, line);
        }
    }
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
}

double loglog_slope(const std::vector<double>& y, int k_lo, int k_hi) {
    if (k_lo < 1 || k_hi >= static_cast<int>(y.size()) || k_hi <= k_lo)
        return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int k = k_lo; k <= k_hi; ++k) {
        if (!(y[k] > 0)) continue;
        const double lx = std::log(static_cast<double>(k)), ly = std::log(y[k]);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

RatesResult cmd_gaussian_rates(const RatesOptions& opt) {
    if (opt.d < 1 || opt.dof < opt.d) throw Error("gaussian-rates: need d >= 1 and dof >= d");
    if (opt.K < 0) throw Error("gaussian-rates: K must be >= 0");
    if (!(opt.scale > 0)) throw Error("gaussian-rates: scale must be > 0");
    if (opt.eps.empty()) throw Error("gaussian-rates: no eps values");
    std::ostringstream params;
    params << "command = gaussian-rates\nd = " << opt.d << "\ndof = " << opt.dof
           << "\nscale = " << format_double(opt.scale) << "\neps = " << join(opt.eps) << "\nK = " << opt.K
           << "\nseed = " << opt.seed << "\n";
    RatesResult res;
    res.hash = git_blob_sha1(params.str());
    write_text_file(opt.out / "params.txt", params.str());

    Rng rng = derive_rng(opt.seed, kDataStream);
    const auto truth = gaussian::GaussianModel::centered(gaussian::wishart_sample(opt.d, opt.dof, opt.scale, rng));
    CsvWriter csv(opt.out / "rates.csv", {"k", "eps", "err2"}, res.hash);
    for (double eps : opt.eps) {
        std::vector<double> err2;
        if (opt.K > 0) {
            auto cur = gaussian::GaussianModel::centered(Mat::Identity(opt.d, opt.d));
            err2.push_back((truth.cov - cur.cov).squaredNorm());
            for (int k = 1; k <= opt.K; ++k) {
                cur = gaussian::scsi_update(cur, truth, eps);
                err2.push_back((truth.cov - cur.cov).squaredNorm());
            }
            for (int k = 0; k <= opt.K; ++k) csv.row({static_cast<double>(k), eps, err2[k]});
        }
        res.slope.push_back(loglog_slope(err2, 100, 1000));
        res.err2.push_back(std::move(err2));
    }
    csv.close();

    std::vector<svg::Series> series;
    for (std::size_t e = 0; e < opt.eps.size(); ++e) {
        svg::Series s;
        s.label = "eps = " + format_double(opt.eps[e]);
        for (std::size_t k = 1; k < res.err2[e].size(); ++k) {
            s.x.push_back(static_cast<double>(k));
            s.y.push_back(res.err2[e][k]);
        }
        series.push_back(std::move(s));
    }
    if (opt.K >= 10) {
        const int k0 = opt.K / 10;
        const double anchor = res.err2.front()[k0];
        svg::Series g1{"1/k", {}, {}, false, true, "#888888"}, g2{"1/k^2", {}, {}, false, true, "#444444"};
        for (int k = 1; k <= opt.K; ++k) {
            g1.x.push_back(k), g1.y.push_back(anchor * k0 / k);
            g2.x.push_back(k), g2.y.push_back(anchor * k0 * k0 / (static_cast<double>(k) * k));
        }
        series.push_back(std::move(g1));
        series.push_back(std::move(g2));
    }
    svg::Plot plot{"Self-consistency error", "k", "|Sigma - Sigma_k|_F^2", true, true};
    svg::write(opt.out / "rates.svg", plot, series);
    return res;
}

ScatterResult cmd_w2_scatter(const ScatterOptions& opt) {
    if (opt.n_pairs < 1) throw Error("w2-scatter: n_pairs must be >= 1");
    const int dof = opt.dof == 0 ? 2 * opt.d : opt.dof;
    if (opt.d < 1 || dof < opt.d) throw Error("w2-scatter: need d >= 1 and dof >= d");
    if (opt.scales.empty()) throw Error("w2-scatter: no scales");
    std::ostringstream params;
    params << "command = w2-scatter\nd = " << opt.d << "\ndof = " << dof << "\nscales = " << join(opt.scales)
           << "\nn_pairs = " << opt.n_pairs << "\nseed = " << opt.seed
           << "\ninject_identical = " << (opt.inject_identical ? "true" : "false") << "\n";
    ScatterResult res;
    res.hash = git_blob_sha1(params.str());
    write_text_file(opt.out / "params.txt", params.str());

    Rng rng = derive_rng(opt.seed, kDataStream);
    CsvWriter csv(opt.out / "scatter.csv", {"scale", "pair", "w2sq", "T", "injected"}, res.hash);
    std::vector<svg::Series> series;
    for (double scale : opt.scales) {
        if (!(scale > 0)) throw Error("w2-scatter: scales must be > 0");
        svg::Series s;
        s.label = "scale " + format_double(scale);
        s.points = true;
        int below = 0;
        for (int i = 0; i < opt.n_pairs; ++i) {
            const Mat a = gaussian::wishart_sample(opt.d, dof, scale, rng);
            const Mat b = gaussian::wishart_sample(opt.d, dof, scale, rng);
            const double w2 = gaussian::gaussian_w2sq(a, b), t = gaussian::transport_cost(a, b, 0.0);
            if (t < w2) ++below;
            csv.row({scale, static_cast<double>(i), w2, t, 0.0});
            s.x.push_back(w2);
            s.y.push_back(t);
        }
        if (opt.inject_identical) {
            const Mat a = gaussian::wishart_sample(opt.d, dof, scale, rng);
            csv.row({scale, -1.0, gaussian::gaussian_w2sq(a, a), gaussian::transport_cost(a, a, 0.0), 1.0});
        }
        res.below_fraction.push_back(static_cast<double>(below) / opt.n_pairs);
        res.reversed.push_back(opt.n_pairs - below);
        series.push_back(std::move(s));
    }
    csv.close();
    CsvWriter summary(opt.out / "scatter_summary.csv", {"scale", "n_pairs", "below_fraction", "reversed"}, res.hash);
    for (std::size_t i = 0; i < opt.scales.size(); ++i)
        summary.row({opt.scales[i], static_cast<double>(opt.n_pairs), res.below_fraction[i],
                     static_cast<double>(res.reversed[i])});
    summary.close();
    svg::Plot plot{"Transport cost against W2^2", "W2^2(A, B)", "T(A; B)", true, true};
    plot.diagonal = true;
    svg::write(opt.out / "scatter.svg", plot, series);
    return res;
}

ExperimentConfig twomoon_config(double sigma_n, TransportMode mode) {
    if (!(sigma_n > 0)) throw Error("twomoon: sigma_n must be > 0");
    ExperimentConfig c;
    c.name = "twomoon";
    c.out = "out/twomoon";
    c.channel_stages = {ChannelSpec::awgn(sigma_n)};
    auto& t = c.train;
    t.outer_iterations = 10000;
    t.inner_steps = 1;
    t.mix_p = 0.9;
    t.batch_size = 64;
    t.resample = 4;
    t.adam.lr = 2e-3;
    t.adam.warmup_steps = 100;
    t.adam.total_steps = static_cast<long>(t.outer_iterations) * t.inner_steps;
    t.transport.steps = 64;
    t.transport.mode = mode;
    if (mode == TransportMode::Sde) {
        t.schedule = Schedule::sde_linear(0.1);
        t.fields = FieldSetKind::DriftDenoiser;
        t.transport.epsilon = 1.0;
        t.transport.epsilon_mode = EpsilonMode::ProportionalToGamma;
    }
    return c;
}

RunSummary run_experiment(const std::string& config_text, const std::string& origin) {
    const auto start = std::chrono::steady_clock::now();
    const ExperimentConfig cfg = parse_config(config_text, origin);
    RunSummary s;
    s.dir = cfg.out;
    s.hash = git_blob_sha1(config_text);
    fs::create_directories(cfg.out / "checkpoints");
    write_text_file(cfg.out / "config.ini", config_text);

    const ChannelSpec channel = cfg.channel();
    const int d = 2;
    const int lat = channel.latent_dim(d);
    Rng data_rng = derive_rng(cfg.seed, kDataStream);
    const Batch clean = two_moons(cfg.data.n + cfg.eval.holdout, data_rng);
    Rng channel_rng = cfg.channel_seed ? Rng(*cfg.channel_seed) : derive_rng(cfg.seed, kChannelStream);
    const Observations data = observe(clean.leftCols(cfg.data.n), channel, channel_rng);
    const Batch truth = clean.rightCols(cfg.eval.holdout);
    const Observations held = observe(truth, channel, channel_rng);

    Rng init_rng = derive_rng(cfg.seed, kInitStream);
    const RegressorConfig rc = cfg.model.regressor(d, lat);
    FieldSet<Regressor> init{Regressor::random(rc, init_rng, cfg.model.init_scale), std::nullopt};
    if (cfg.train.fields == FieldSetKind::DriftDenoiser)
        init.denoiser = Regressor::random(rc, init_rng, cfg.model.init_scale);
    TrainConfig tcfg = cfg.train;
    tcfg.seed = derive_rng(cfg.seed, kTrainStream)();
    const int K = tcfg.outer_iterations;

    auto evaluate = [&](const FieldSet<Regressor>& m, int k, Batch* keep) {
        Rng rng = derive_rng(cfg.seed, kEvalStream + static_cast<std::uint64_t>(k));
        Batch restored = restore(m, tcfg.transport, tcfg.schedule, held, rng);
        const double w2 = w2_distance(restored, truth, cfg.eval, rng);
        if (keep) *keep = std::move(restored);
        return w2;
    };
    auto save = [&](const FieldSet<Regressor>& m, const std::string& tag, long step) {
        const std::string rel = checkpoint_path("drift", tag);
        save_checkpoint(cfg.out / rel, m.drift, step);
        if (m.denoiser) save_checkpoint(cfg.out / checkpoint_path("denoiser", tag), *m.denoiser, step);
        return rel;
    };
    const OuterCallback<Regressor> on_outer = [&](int k, const FieldSet<Regressor>& m, RunRecord& rec) {
        if (cfg.eval.w2_every > 0 && k % cfg.eval.w2_every == 0 && k < K) rec.w2 = evaluate(m, k, nullptr);
        if (cfg.eval.checkpoints && checkpoint_due(k, K))
            rec.checkpoint = save(m, "k" + std::to_string(k), static_cast<long>(k) * tcfg.inner_steps);
    };
    auto result = scsi_train(data, channel, tcfg, init, on_outer);
    s.records = std::move(result.records);
    s.diverged = result.diverged;
    s.message = result.message;

    Batch restored;
    try {
        s.final_w2 = evaluate(result.model, K, &restored);
    } catch (const NonFiniteError& e) {
        s.message += (s.message.empty() ? "" : "; ") + std::string("final restoration failed: ") + e.what();
    }
    if (!s.records.empty() && s.records.back().k == K && std::isfinite(s.final_w2)) s.records.back().w2 = s.final_w2;
    save(result.model, "final", static_cast<long>(s.records.size()) * tcfg.inner_steps);

    CsvWriter run(cfg.out / "run.csv", {"k", "mean_loss", "w2", "checkpoint"}, s.hash);
    CsvWriter timing(cfg.out / "timing.csv", {"k", "wall_seconds"}, s.hash);
    for (const auto& r : s.records) {
        run.row({std::to_string(r.k), format_double(r.mean_loss), r.w2 ? format_double(*r.w2) : "", r.checkpoint});
        timing.row({static_cast<double>(r.k), r.wall_seconds});
    }
    run.close();
    timing.close();
    write_points_csv(cfg.out / "truth.csv", truth, s.hash, "x");
    write_points_csv(cfg.out / "observations.csv", held.y, s.hash, "y", held.latent);
    if (restored.size() > 0) write_points_csv(cfg.out / "restored.csv", restored, s.hash, "x");
    {
        CsvWriter ev(cfg.out / "eval.csv", {"metric", "n", "w2"}, s.hash);
        ev.row({cfg.eval.metric, std::to_string(cfg.eval.holdout), format_double(s.final_w2)});
        ev.close();
    }

    auto series_of = [](const Batch& b, const std::string& label, const std::string& color) {
        svg::Series ser{label, {}, {}, true, false, color, 1.2};
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            ser.x.push_back(b(0, j));
            ser.y.push_back(b(1, j));
        }
        return ser;
    };
    std::vector<svg::Series> pts = {series_of(held.y, "observed", "#bbbbbb"), series_of(truth, "truth", "#1f77b4")};
    if (restored.size() > 0) pts.push_back(series_of(restored, "restored", "#d62728"));
    svg::Plot plot{cfg.name + ": held-out restoration", "x0", "x1"};
    plot.equal_aspect = true;
    svg::write(cfg.out / "scatter.svg", plot, pts);

    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    nlohmann::json manifest = {
        {"name", cfg.name},
        {"config_hash", s.hash},
        {"seed", cfg.seed},
        {"outer_iterations", K},
        {"completed_iterations", s.records.size()},
        {"diverged", s.diverged},
        {"message", s.message},
        {"final_w2", std::isfinite(s.final_w2) ? nlohmann::json(s.final_w2) : nlohmann::json(nullptr)},
        {"files",
         {"config.ini", "run.csv", "timing.csv", "truth.csv", "observations.csv", "restored.csv", "eval.csv",
          "scatter.svg", checkpoint_path("drift", "final")}},
    };
    write_text_file(cfg.out / "manifest.json", manifest.dump(2) + "\n");
    return s;
}

RunSummary cmd_run(const fs::path& config_path, const std::vector<std::string>& overrides) {
    return run_experiment(apply_overrides(read_text_file(config_path), overrides), config_path.string());
}

RunSummary cmd_twomoon(double sigma_n, TransportMode mode, std::uint64_t seed,
                       const std::vector<std::string>& overrides, const fs::path& out) {
    ExperimentConfig c = twomoon_config(sigma_n, mode);
    c.seed = seed;
    c.out = out;
    return run_experiment(apply_overrides(render_config(c), overrides), "twomoon");
}

double cmd_eval(const fs::path& a, const fs::path& b, const std::string& metric, int projections,
                std::uint64_t seed, const fs::path& out) {
    const PointsTable pa = read_points_csv(a), pb = read_points_csv(b);
    EvalConfig ev;
    ev.metric = metric;
    ev.projections = projections;
    if (metric != "exact" && metric != "sliced") throw Error("eval: metric must be exact or sliced");
    if (pa.points.rows() != pb.points.rows()) throw Error("eval: point dimensions differ");
    Rng rng = derive_rng(seed, kEvalStream);
    const double w2 = w2_distance(pa.points, pb.points, ev, rng);
    if (!out.empty()) {
        std::string hash = read_csv(a).config_hash;
        if (hash.empty()) hash = git_blob_sha1(read_text_file(a));
        CsvWriter w(out / "eval.csv", {"metric", "n", "w2"}, hash);
        w.row({metric, std::to_string(pa.points.cols()), format_double(w2)});
        w.close();
    }
    return w2;
}

void cmd_restore(const fs::path& run_dir, const fs::path& observations, const fs::path& out,
                 std::uint64_t seed) {
    const std::string text = read_text_file(run_dir / "config.ini");
    const ExperimentConfig cfg = parse_config(text, (run_dir / "config.ini").string());
    FieldSet<Regressor> model{load_checkpoint(run_dir / checkpoint_path("drift", "final")).model, std::nullopt};
    if (cfg.train.fields == FieldSetKind::DriftDenoiser)
        model.denoiser = load_checkpoint(run_dir / checkpoint_path("denoiser", "final")).model;
    const PointsTable obs = read_points_csv(observations);
    Observations o{obs.points, obs.latent};
    if (o.y.rows() != model.drift.data_dim() || o.latent.rows() != model.drift.latent_dim())
        throw Error("restore: observation columns do not match the trained model");
    Rng rng = derive_rng(seed, kRestoreStream);
    const Batch restored = restore(model, cfg.train.transport, cfg.train.schedule, o, rng);
    write_points_csv(out, restored, git_blob_sha1(text), "x");
}

}  // namespace scsi
