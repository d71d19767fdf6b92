#pragma once

// Experiment configuration: a line-oriented key = value format.
//
//   # comment
//   name = twomoon          (top level: name, seed, out)
//   [schedule]   kind, epsilon
//   [channel]    kind, sigma_n, rho, fill, sigma_r, lambda_n, shift, seed
//   [channel2]   optional further stages, applied after [channel] (then [channel3], ...)
//   [transport]  steps, mode, scheme, epsilon, epsilon_mode, t_min, threads
//   [train]      K, T_tr, mix_p, batch_size, resample, t_min, fields, lr, warmup_steps,
//                cosine, min_lr_ratio, hidden, activation, time_embed_dim, max_frequency,
//                init_scale
//   [data]       dataset, n
//   [eval]       holdout, w2_every, metric, projections, checkpoints
//
// [schedule], [channel], [transport] and [train] are required; unknown sections and keys are
// errors reported with their line number.

#include "scsi/channel.hpp"
#include "scsi/regressor.hpp"
#include "scsi/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace scsi {

struct ModelConfig {
    std::vector<int> hidden = {128, 128, 128};
    Activation activation = Activation::Gelu;
    int time_embed_dim = 32;
    double max_frequency = 2.0;
    double init_scale = 1e-2;

    RegressorConfig regressor(int data_dim, int latent_dim) const;
};

struct DataConfig {
    std::string dataset = "two-moons";
    int n = 10000;
};

struct EvalConfig {
    int holdout = 2000;
    /// Evaluate W2 every this many outer iterations (0: final only).
    int w2_every = 0;
    std::string metric = "exact";  // exact | sliced
    int projections = 256;
    bool checkpoints = true;
};

struct ExperimentConfig {
    std::string name = "run";
    std::uint64_t seed = 0;
    std::filesystem::path out = "out";
    std::vector<ChannelSpec> channel_stages;
    /// Seed of the observation draw; derived from `seed` when unset.
    std::optional<std::uint64_t> channel_seed;
    TrainConfig train;
    ModelConfig model;
    DataConfig data;
    EvalConfig eval;

    /// Stages composed in application order.
    ChannelSpec channel() const;
    void validate() const;
};

ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(render_config(c)) reproduces c.
std::string render_config(const ExperimentConfig& c);

}  // namespace scsi
