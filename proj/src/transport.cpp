#include "scsi/transport.hpp"

#include <cmath>
#include <exception>
#include <thread>
#include <vector>

namespace scsi {

TransportMode parse_transport_mode(std::string_view name) {
    if (name == "ode") return TransportMode::Ode;
    if (name == "sde") return TransportMode::Sde;
    throw Error("unknown transport mode '" + std::string(name) + "' (expected ode or sde)");
}

OdeScheme parse_ode_scheme(std::string_view name) {
    if (name == "euler") return OdeScheme::Euler;
    if (name == "heun") return OdeScheme::Heun;
    throw Error("unknown ODE scheme '" + std::string(name) + "' (expected euler or heun)");
}

EpsilonMode parse_epsilon_mode(std::string_view name) {
    if (name == "constant") return EpsilonMode::Constant;
    if (name == "gamma") return EpsilonMode::ProportionalToGamma;
    throw Error("unknown epsilon mode '" + std::string(name) + "' (expected constant or gamma)");
}

std::string to_string(TransportMode m) { return m == TransportMode::Ode ? "ode" : "sde"; }
std::string to_string(OdeScheme s) { return s == OdeScheme::Euler ? "euler" : "heun"; }
std::string to_string(EpsilonMode m) {
    return m == EpsilonMode::Constant ? "constant" : "gamma";
}

namespace {

void check_grid(const TransportConfig& cfg) {
    if (cfg.steps < 1) throw Error("transport needs at least one step");
    if (!(cfg.t_min >= 0.0 && cfg.t_min < 0.5)) throw Error("transport t_min must lie in [0, 0.5)");
}

void check_finite(const Batch& x, int step, Eigen::Index col_offset = 0) {
    if (x.allFinite()) return;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        if (!x.col(j).allFinite())
            throw NonFiniteError("transport state became non-finite at step " +
                                     std::to_string(step) + " (sample " +
                                     std::to_string(j + col_offset) + ")",
                                 step, static_cast<int>(j + col_offset));
}

double grid_time(const TransportConfig& cfg, int k) {
    const double h = (cfg.t_start() - cfg.t_end()) / cfg.steps;
    return k == cfg.steps ? cfg.t_end() : cfg.t_start() - k * h;
}

// Extra drift added to b in SDE mode and the noise std of one step, at grid time t.
struct SdeTerms {
    double multiplier;  // factor applied to the denoiser or score field
    double noise_std;
};

using Noise = std::vector<Batch>;

Noise draw_noise(Eigen::Index d, Eigen::Index n, int steps, Rng& rng) {
    Noise noise(static_cast<std::size_t>(steps));
    for (auto& m : noise) m = standard_normal_mat(d, n, rng);
    return noise;
}

Noise slice_noise(const Noise& noise, Eigen::Index begin, Eigen::Index count) {
    Noise out;
    out.reserve(noise.size());
    for (const auto& m : noise) out.push_back(m.middleCols(begin, count));
    return out;
}

// Shared Euler-Maruyama core: X <- X - h (b + mult(t) * extra) + noise_std(t) xi.
template <class TermsFn>
Batch euler_maruyama(const BatchField& drift, const BatchField& extra, const Batch& y,
                     const Batch& latent, const Noise& noise, const TransportConfig& cfg,
                     TermsFn terms, Eigen::Index col_offset = 0) {
    check_grid(cfg);
    const double h = (cfg.t_start() - cfg.t_end()) / cfg.steps;
    Batch x = y;
    for (int k = 0; k < cfg.steps; ++k) {
        const double t = grid_time(cfg, k);
        const SdeTerms st = terms(t);
        Batch step = drift(t, x, latent);
        if (st.multiplier != 0.0 && extra) step += st.multiplier * extra(t, x, latent);
        x -= h * step;
        if (st.noise_std != 0.0) x += st.noise_std * noise[static_cast<std::size_t>(k)];
        check_finite(x, k, col_offset);
    }
    return x;
}

auto sde_terms_gamma(const TransportConfig& cfg, const Schedule& sched) {
    const double h = (cfg.t_start() - cfg.t_end()) / cfg.steps;
    return [&cfg, &sched, h](double t) {
        if (cfg.epsilon == 0.0) return SdeTerms{0.0, 0.0};
        const double g = sched.gamma(t);
        if (!(g > 0.0))
            throw Error("reverse SDE needs gamma(t) > 0 inside the integration window (t = " +
                        std::to_string(t) + ")");
        if (cfg.epsilon_mode == EpsilonMode::ProportionalToGamma)
            return SdeTerms{cfg.epsilon, std::sqrt(2.0 * cfg.epsilon * g * h)};
        return SdeTerms{cfg.epsilon / g, std::sqrt(2.0 * cfg.epsilon * h)};
    };
}

Batch integrate_sde_with_noise(const BatchField& drift, const BatchField& denoiser,
                               const Batch& y, const Batch& latent, const Noise& noise,
                               const TransportConfig& cfg, const Schedule& sched,
                               Eigen::Index col_offset = 0) {
    return euler_maruyama(drift, denoiser, y, latent, noise, cfg, sde_terms_gamma(cfg, sched),
                          col_offset);
}

}  // namespace

void TransportConfig::validate() const {
    check_grid(*this);
    if (!(epsilon >= 0.0)) throw Error("transport epsilon must be nonnegative");
    if (mode == TransportMode::Sde && !(epsilon > 0.0))
        throw Error("SDE transport needs epsilon > 0");
    if (threads < 1) throw Error("transport needs at least one thread");
}

namespace {

Batch ode_core(const BatchField& drift, const Batch& y, const Batch& latent,
               const TransportConfig& cfg, Eigen::Index col_offset) {
    check_grid(cfg);
    const double h = (cfg.t_start() - cfg.t_end()) / cfg.steps;
    Batch x = y;
    for (int k = 0; k < cfg.steps; ++k) {
        const double t = grid_time(cfg, k);
        Batch k1 = drift(t, x, latent);
        if (cfg.scheme == OdeScheme::Euler) {
            x -= h * k1;
        } else {
            const double t_next = grid_time(cfg, k + 1);
            Batch pred = x - h * k1;
            Batch k2 = drift(t_next, pred, latent);
            x -= (0.5 * h) * (k1 + k2);
        }
        check_finite(x, k, col_offset);
    }
    return x;
}

}  // namespace

Batch integrate_ode(const BatchField& drift, const Batch& y, const Batch& latent,
                    const TransportConfig& cfg) {
    return ode_core(drift, y, latent, cfg, 0);
}

Vec integrate_ode(const BatchField& drift, const Vec& y, const TransportConfig& cfg) {
    return integrate_ode(drift, Batch(y), Batch(), cfg).col(0);
}

Batch integrate_sde(const BatchField& drift, const BatchField& denoiser, const Batch& y,
                    const Batch& latent, Rng& rng, const TransportConfig& cfg,
                    const Schedule& sched) {
    check_grid(cfg);
    const Noise noise = draw_noise(y.rows(), y.cols(), cfg.steps, rng);
    return integrate_sde_with_noise(drift, denoiser, y, latent, noise, cfg, sched);
}

Batch integrate_sde_score(const BatchField& drift, const BatchField& score, const Batch& y,
                          const Batch& latent, Rng& rng, const TransportConfig& cfg) {
    check_grid(cfg);
    if (cfg.epsilon_mode != EpsilonMode::Constant)
        throw Error("score-form SDE supports constant epsilon only");
    const Noise noise = draw_noise(y.rows(), y.cols(), cfg.steps, rng);
    const double h = (cfg.t_start() - cfg.t_end()) / cfg.steps;
    const double eps = cfg.epsilon;
    return euler_maruyama(drift, score, y, latent, noise, cfg, [eps, h](double) {
        return SdeTerms{-eps, std::sqrt(2.0 * eps * h)};
    });
}

Batch pushforward(const TransportFields& fields, const Batch& ys, const Batch& latents, Rng& rng,
                  const TransportConfig& cfg, const Schedule& sched) {
    if (ys.cols() == 0) throw Error("pushforward needs a nonempty batch");
    cfg.validate();
    const bool sde = cfg.mode == TransportMode::Sde;
    Noise noise;
    if (sde) noise = draw_noise(ys.rows(), ys.cols(), cfg.steps, rng);

    auto run = [&](Eigen::Index begin, Eigen::Index count) -> Batch {
        const Batch y = ys.middleCols(begin, count);
        const Batch lat = latents.size() > 0 ? Batch(latents.middleCols(begin, count)) : Batch();
        if (!sde) return ode_core(fields.drift, y, lat, cfg, begin);
        const Noise local = slice_noise(noise, begin, count);
        if (fields.denoiser)
            return integrate_sde_with_noise(fields.drift, fields.denoiser, y, lat, local, cfg,
                                            sched, begin);
        // Combined drift v: only the Brownian term is added.
        const double h = (cfg.t_start() - cfg.t_end()) / cfg.steps;
        return euler_maruyama(fields.drift, BatchField(), y, lat, local, cfg,
                              [&](double t) {
                                  const double e = cfg.epsilon_mode == EpsilonMode::Constant
                                                       ? cfg.epsilon
                                                       : cfg.epsilon * sched.gamma(t);
                                  return SdeTerms{0.0, std::sqrt(2.0 * e * h)};
                              },
                              begin);
    };

    const Eigen::Index n = ys.cols();
    const auto workers = static_cast<Eigen::Index>(std::min<Eigen::Index>(cfg.threads, n));
    if (workers <= 1) return run(0, n);

    Batch out(ys.rows(), n);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    const Eigen::Index chunk = (n + workers - 1) / workers;
    for (Eigen::Index w = 0; w < workers; ++w) {
        const Eigen::Index begin = w * chunk;
        const Eigen::Index count = std::min(chunk, n - begin);
        if (count <= 0) break;
        pool.emplace_back([&, w, begin, count] {
            try {
                out.middleCols(begin, count) = run(begin, count);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace scsi
