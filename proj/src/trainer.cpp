#include "scsi/trainer.hpp"

namespace scsi {

FieldSetKind parse_field_set(std::string_view name) {
    if (name == "drift") return FieldSetKind::Drift;
    if (name == "drift-denoiser") return FieldSetKind::DriftDenoiser;
    if (name == "combined") return FieldSetKind::Combined;
    throw Error("unknown field set '" + std::string(name) +
                "' (expected drift, drift-denoiser or combined)");
}

std::string to_string(FieldSetKind k) {
    switch (k) {
        case FieldSetKind::Drift: return "drift";
        case FieldSetKind::DriftDenoiser: return "drift-denoiser";
        case FieldSetKind::Combined: return "combined";
    }
    return "?";
}

void TrainConfig::validate() const {
    if (outer_iterations < 1) throw Error("train: K must be >= 1");
    if (inner_steps < 1) throw Error("train: T_tr must be >= 1");
    if (!(mix_p >= 0.0 && mix_p <= 1.0)) throw Error("train: mix_p must lie in [0, 1]");
    if (batch_size < 1) throw Error("train: batch size must be >= 1");
    if (resample < 1) throw Error("train: resample factor must be >= 1");
    if (!(t_min > 0.0 && t_min < 0.5)) throw Error("train: t_min must lie in (0, 0.5)");
    transport.validate();
    const bool sde = transport.mode == TransportMode::Sde;
    if (sde && fields == FieldSetKind::Drift)
        throw Error("train: SDE transport needs the drift-denoiser or combined field set");
    if (!sde && fields == FieldSetKind::DriftDenoiser)
        throw Error("train: the drift-denoiser field set needs SDE transport");
    if (fields != FieldSetKind::Drift && !schedule.has_noise())
        throw Error("train: denoiser and combined fields need a schedule with gamma > 0");
    if (fields == FieldSetKind::Combined && sde &&
        (transport.epsilon_mode != EpsilonMode::Constant || transport.epsilon != schedule.epsilon))
        throw Error("train: combined field needs the same constant epsilon in schedule and transport");
}

bool checkpoint_due(int k, int outer_iterations) {
    if (outer_iterations <= 100) return true;
    const int every = (outer_iterations + 99) / 100;
    return k % every == 0 || k == outer_iterations;
}

Observations observe(const Batch& clean, const ChannelSpec& channel, Rng& rng) {
    Observations obs;
    const int lat = channel.latent_dim(static_cast<int>(clean.rows()));
    obs.y.resize(clean.rows(), clean.cols());
    obs.latent.resize(lat, clean.cols());
    for (Eigen::Index j = 0; j < clean.cols(); ++j) {
        auto out = apply(channel, clean.col(j), rng);
        obs.y.col(j) = out.y;
        if (lat > 0) obs.latent.col(j) = *out.latent;
    }
    return obs;
}

EndpointPairs self_interpolant_endpoints(const Batch& x0, const Batch& y, const Batch& y_latent,
                                         const ChannelSpec& channel, double mix_p, Rng& rng) {
    if (x0.rows() != y.rows() || x0.cols() != y.cols())
        throw Error("endpoint batches have different shapes");
    EndpointPairs p;
    p.x0 = x0;
    p.x1.resize(y.rows(), y.cols());
    p.latent.resize(y_latent.rows(), y.cols());
    p.regenerated.resize(static_cast<std::size_t>(y.cols()));
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
        const bool regen = uniform01(rng) < mix_p;
        p.regenerated[static_cast<std::size_t>(j)] = regen;
        if (regen) {
            auto out = apply(channel, x0.col(j), rng);
            p.x1.col(j) = out.y;
            if (y_latent.rows() > 0) {
                if (!out.latent || out.latent->size() != y_latent.rows())
                    throw Error("channel latent does not match the observation latent");
                p.latent.col(j) = *out.latent;
            }
        } else {
            p.x1.col(j) = y.col(j);
            if (y_latent.rows() > 0) p.latent.col(j) = y_latent.col(j);
        }
    }
    return p;
}

namespace detail {

InnerDraw draw_self_interpolant(const TransportFields& snapshot, const Observations& data,
                                const ChannelSpec& channel, const TrainConfig& cfg, Rng& rng) {
    const Eigen::Index n = data.size();
    const Eigen::Index d = data.dim();
    const Eigen::Index lat = data.latent.rows();
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    Batch ys(d, cfg.batch_size), ylat(lat, cfg.batch_size);
    for (int j = 0; j < cfg.batch_size; ++j) {
        const Eigen::Index i = pick(rng);
        ys.col(j) = data.y.col(i);
        if (lat > 0) ylat.col(j) = data.latent.col(i);
    }
    const Batch xs = pushforward(snapshot, ys, ylat, rng, cfg.transport, cfg.schedule);

    const Eigen::Index m = static_cast<Eigen::Index>(cfg.batch_size) * cfg.resample;
    Batch x0(d, m), x1(d, m), latent(lat, m);
    for (int r = 0; r < cfg.resample; ++r) {
        auto pairs = self_interpolant_endpoints(xs, ys, ylat, channel, cfg.mix_p, rng);
        const Eigen::Index off = static_cast<Eigen::Index>(r) * cfg.batch_size;
        x0.middleCols(off, cfg.batch_size) = pairs.x0;
        x1.middleCols(off, cfg.batch_size) = pairs.x1;
        if (lat > 0) latent.middleCols(off, cfg.batch_size) = pairs.latent;
    }
    Vec t(m);
    for (Eigen::Index j = 0; j < m; ++j) t[j] = sample_training_time(rng, cfg.t_min);
    const Batch z = standard_normal_mat(d, m, rng);
    return {make_interpolant_batch(x0, x1, z, t, cfg.schedule), std::move(latent)};
}

}  // namespace detail

}  // namespace scsi
