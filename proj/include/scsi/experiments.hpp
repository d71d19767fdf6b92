#pragma once

// Canned experiments behind the command-line tool. Every CSV carries the hash of the text
// that fully determines it (the config file, or the rendered options of a canned command).

#include "scsi/config.hpp"
#include "scsi/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace scsi {

/// Applies "section.key=value" edits (or "key=value" for top-level keys) to config text,
/// replacing an existing line or appending the key to its section.
std::string apply_overrides(const std::string& text, const std::vector<std::string>& sets);

struct RatesOptions {
    int d = 8;
    int dof = 16;
    double scale = 1e-4;
    std::vector<double> eps = {0.0, 1.0};
    int K = 1000;
    std::uint64_t seed = 0;
    std::filesystem::path out = "out/gaussian-rates";
};

struct RatesResult {
    std::string hash;
    /// err2[e][k] = |Sigma - Sigma_k|_F^2 for eps[e], k = 0..K.
    std::vector<std::vector<double>> err2;
    /// Least-squares log-log slope over k in [100, 1000] (NaN when K < 1000).
    std::vector<double> slope;
};

/// Self-consistency trajectories from Sigma_0 = I towards a Wishart truth, one per eps.
/// Writes rates.csv (k, eps, err2) and rates.svg.
RatesResult cmd_gaussian_rates(const RatesOptions& opt);

/// Least-squares slope of log y against log k over k in [k_lo, k_hi].
double loglog_slope(const std::vector<double>& y, int k_lo, int k_hi);

struct ScatterOptions {
    int d = 10;
    int dof = 0;  // 0: 2d
    std::vector<double> scales = {1e-3, 1.0, 10.0};
    int n_pairs = 2000;
    std::uint64_t seed = 0;
    /// Also emit one A = B pair per scale (flagged, excluded from the fractions).
    bool inject_identical = false;
    std::filesystem::path out = "out/w2-scatter";
};

struct ScatterResult {
    std::string hash;
    std::vector<double> below_fraction;  // share of pairs with T < W2^2, per scale
    std::vector<int> reversed;           // pairs with T >= W2^2, per scale
};

/// Transport cost T(A; B) at eps = 0 against W2^2(A, B) for Wishart pairs.
/// Writes scatter.csv (scale, pair, w2sq, T, injected), scatter_summary.csv and scatter.svg.
ScatterResult cmd_w2_scatter(const ScatterOptions& opt);

/// Default two-moon experiment under AWGN; the SDE variant trains drift and denoiser on the
/// sde-linear schedule with eps_t = gamma_t.
ExperimentConfig twomoon_config(double sigma_n, TransportMode mode);

struct RunSummary {
    std::filesystem::path dir;
    std::string hash;
    double final_w2 = std::numeric_limits<double>::quiet_NaN();
    std::vector<RunRecord> records;
    bool diverged = false;
    std::string message;
    double seconds = 0.0;
};

/// Full pipeline for a config: data, observations, training, held-out restoration and W2.
/// Output directory contents: config.ini, manifest.json, run.csv, timing.csv, checkpoints/,
/// observations.csv, truth.csv, restored.csv, eval.csv, scatter.svg.
RunSummary run_experiment(const std::string& config_text, const std::string& origin = "config");

RunSummary cmd_run(const std::filesystem::path& config_path, const std::vector<std::string>& overrides = {});

RunSummary cmd_twomoon(double sigma_n, TransportMode mode, std::uint64_t seed,
                       const std::vector<std::string>& overrides = {},
                       const std::filesystem::path& out = "out/twomoon");

/// W2 = sqrt(squared distance) between two point CSVs; metric "exact" or "sliced".
double cmd_eval(const std::filesystem::path& a, const std::filesystem::path& b, const std::string& metric,
                int projections, std::uint64_t seed, const std::filesystem::path& out = {});

/// Applies the final checkpoint of a finished run to observations (columns y*, l*) and
/// writes the restored points.
void cmd_restore(const std::filesystem::path& run_dir, const std::filesystem::path& observations,
                 const std::filesystem::path& out, std::uint64_t seed);

}  // namespace scsi
