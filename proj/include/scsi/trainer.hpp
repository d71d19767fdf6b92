#pragma once

#include "scsi/channel.hpp"
#include "scsi/common.hpp"
#include "scsi/regressor.hpp"
#include "scsi/schedule.hpp"
#include "scsi/transport.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scsi {

/// Which fields Theta holds:
///   drift           {b}, probability-flow ODE transport
///   drift-denoiser  {b, g}, reverse SDE
///   combined        {v}, v = b + eps gamma^{-1} g regressed directly, reverse SDE
enum class FieldSetKind { Drift, DriftDenoiser, Combined };

FieldSetKind parse_field_set(std::string_view name);
std::string to_string(FieldSetKind k);

struct TrainConfig {
    int outer_iterations = 1000;  // K
    int inner_steps = 1;          // T_tr
    double mix_p = 0.9;
    int batch_size = 256;
    /// Channel draws per transported point (amortizes the transport cost).
    int resample = 1;
    double t_min = 1e-3;
    FieldSetKind fields = FieldSetKind::Drift;
    TransportConfig transport;
    Schedule schedule = Schedule::ode_linear();
    AdamConfig adam;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One row of run.csv.
struct RunRecord {
    int k = 0;
    double mean_loss = 0.0;
    double wall_seconds = 0.0;
    std::optional<double> w2;
    std::optional<double> mean_error;
    std::optional<double> cov_error;
    std::string checkpoint;
};

/// Checkpoint every outer iteration when K <= 100, else every ceil(K / 100).
bool checkpoint_due(int k, int outer_iterations);

/// Observed data: one observation per column, latents (possibly zero rows) aligned.
struct Observations {
    Batch y;
    Batch latent;

    Eigen::Index size() const { return y.cols(); }
    Eigen::Index dim() const { return y.rows(); }
    bool has_latent() const { return latent.rows() > 0; }
};

/// Generates observations of clean points through the channel.
Observations observe(const Batch& clean, const ChannelSpec& channel, Rng& rng);

template <FieldModel M>
struct FieldSet {
    M drift;
    std::optional<M> denoiser;
};

/// Batched transport fields backed by the given models (references must outlive the result).
template <FieldModel M>
TransportFields transport_fields(const FieldSet<M>& f) {
    TransportFields out;
    const M* b = &f.drift;
    out.drift = [b](double t, const Batch& x, const Batch& lat) {
        return b->forward(x, Vec::Constant(x.cols(), t), lat);
    };
    if (f.denoiser) {
        const M* g = &*f.denoiser;
        out.denoiser = [g](double t, const Batch& x, const Batch& lat) {
            return g->forward(x, Vec::Constant(x.cols(), t), lat);
        };
    }
    return out;
}

/// Endpoint pairs of the self interpolant: x0 = Phi(y), x1 = F(x0) with probability mix_p,
/// otherwise the original y. The latent is the one observed with x1.
struct EndpointPairs {
    Batch x0;
    Batch x1;
    Batch latent;
    std::vector<bool> regenerated;
};

EndpointPairs self_interpolant_endpoints(const Batch& x0, const Batch& y, const Batch& y_latent,
                                         const ChannelSpec& channel, double mix_p, Rng& rng);

/// Restored set Phi_Theta(y) for every observation.
template <FieldModel M>
Batch restore(const FieldSet<M>& model, const TransportConfig& cfg, const Schedule& sched,
              const Observations& obs, Rng& rng) {
    return pushforward(transport_fields(model), obs.y, obs.latent, rng, cfg, sched);
}

template <FieldModel M>
struct TrainResult {
    FieldSet<M> model;
    std::vector<RunRecord> records;
    bool diverged = false;
    std::string message;
};

/// Called after each outer iteration with the snapshot Theta^(k); may fill metrics in the record.
template <FieldModel M>
using OuterCallback = std::function<void(int k, const FieldSet<M>& model, RunRecord& record)>;

namespace detail {

struct InnerDraw {
    InterpolantBatch interp;
    Batch latent;
};

InnerDraw draw_self_interpolant(const TransportFields& snapshot, const Observations& data,
                                const ChannelSpec& channel, const TrainConfig& cfg, Rng& rng);

}  // namespace detail

/// The self-consistency iteration. For k = 1..K: freeze Theta^(k-1), then run T_tr Adam steps
/// where each step transports a fresh batch y ~ data with the frozen map (no gradient flows
/// through the transport or the channel), forms the self interpolant and regresses the fields.
template <FieldModel M>
TrainResult<M> scsi_train(const Observations& data, const ChannelSpec& channel,
                          const TrainConfig& cfg, FieldSet<M> init,
                          const OuterCallback<M>& on_outer = {}) {
    cfg.validate();
    if (data.size() == 0) throw Error("scsi_train needs a nonempty observation set");
    channel.validate();
    if (init.drift.data_dim() != data.dim())
        throw Error("model and observations have different dimensions");
    const int lat_dim = channel.latent_dim(static_cast<int>(data.dim()));
    if (lat_dim != init.drift.latent_dim() ||
        (lat_dim > 0 && (data.latent.rows() != lat_dim || data.latent.cols() != data.size())))
        throw Error("channel latent, observation latent and model latent sizes disagree");
    const bool wants_denoiser = cfg.fields == FieldSetKind::DriftDenoiser;
    if (wants_denoiser != init.denoiser.has_value())
        throw Error("field set does not match the configured fields");

    Rng rng(cfg.seed);
    TrainResult<M> result{std::move(init), {}, false, {}};
    OptimizerState opt_b(cfg.adam, result.model.drift.parameters().size());
    OptimizerState opt_g;
    if (wants_denoiser) opt_g = OptimizerState(cfg.adam, result.model.denoiser->parameters().size());
    const ResidualKind drift_kind =
        cfg.fields == FieldSetKind::Combined ? ResidualKind::Combined : ResidualKind::Drift;

    const auto start = std::chrono::steady_clock::now();
    for (int k = 1; k <= cfg.outer_iterations; ++k) {
        const FieldSet<M> snapshot = result.model;
        const TransportFields frozen = transport_fields(snapshot);
        double loss_sum = 0.0;
        try {
            for (int i = 0; i < cfg.inner_steps; ++i) {
                const auto draw = detail::draw_self_interpolant(frozen, data, channel, cfg, rng);
                auto lb = residual_loss_and_grad(result.model.drift, drift_kind, draw.interp,
                                                 draw.latent, cfg.schedule);
                double loss = lb.loss;
                if (!std::isfinite(loss) || !lb.grad.allFinite())
                    throw NonFiniteError("inner loss became non-finite", i);
                adam_step(result.model.drift, opt_b, lb.grad);
                if (wants_denoiser) {
                    auto lg = residual_loss_and_grad(*result.model.denoiser, ResidualKind::Denoiser,
                                                     draw.interp, draw.latent, cfg.schedule);
                    if (!std::isfinite(lg.loss) || !lg.grad.allFinite())
                        throw NonFiniteError("denoiser loss became non-finite", i);
                    adam_step(*result.model.denoiser, opt_g, lg.grad);
                    loss += lg.loss;
                }
                loss_sum += loss;
            }
        } catch (const NonFiniteError& e) {
            result.model = snapshot;
            result.diverged = true;
            result.message = "outer iteration " + std::to_string(k) + ": " + e.what() +
                             "; returning the last good snapshot";
            break;
        }
        RunRecord rec;
        rec.k = k;
        rec.mean_loss = loss_sum / cfg.inner_steps;
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (on_outer) on_outer(k, result.model, rec);
        result.records.push_back(std::move(rec));
    }
    return result;
}

}  // namespace scsi
