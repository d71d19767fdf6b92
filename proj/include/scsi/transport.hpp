#pragma once

#include "scsi/common.hpp"
#include "scsi/schedule.hpp"

#include <functional>
#include <string>
#include <string_view>

namespace scsi {

enum class TransportMode { Ode, Sde };
enum class OdeScheme { Euler, Heun };
/// Constant eps, or eps_t = c * gamma_t (score multiplier eps_t / gamma_t = c).
enum class EpsilonMode { Constant, ProportionalToGamma };

TransportMode parse_transport_mode(std::string_view name);
OdeScheme parse_ode_scheme(std::string_view name);
EpsilonMode parse_epsilon_mode(std::string_view name);
std::string to_string(TransportMode m);
std::string to_string(OdeScheme s);
std::string to_string(EpsilonMode m);

struct TransportConfig {
    int steps = 64;
    TransportMode mode = TransportMode::Ode;
    OdeScheme scheme = OdeScheme::Heun;  // ODE only; SDE always uses Euler-Maruyama
    double epsilon = 0.0;
    EpsilonMode epsilon_mode = EpsilonMode::Constant;
    double t_min = 1e-3;
    /// Worker threads for batch pushforward (columns are split; results are independent of it).
    int threads = 1;

    void validate() const;
    double t_start() const { return 1.0 - t_min; }
    double t_end() const { return t_min; }
};

/// A batched field evaluated at a common time: f(t, X, latent) with one sample per column.
using BatchField = std::function<Batch(double t, const Batch& x, const Batch& latent)>;

/// Backward probability-flow ODE dX = b dt from X(1 - t_min) = y down to t_min on a uniform grid.
Batch integrate_ode(const BatchField& drift, const Batch& y, const Batch& latent,
                    const TransportConfig& cfg);
Vec integrate_ode(const BatchField& drift, const Vec& y, const TransportConfig& cfg);

/// Backward Euler-Maruyama for dX = b dt + eps gamma^{-1} g dt + sqrt(2 eps) dW,
/// integrated from 1 - t_min down to t_min.
Batch integrate_sde(const BatchField& drift, const BatchField& denoiser, const Batch& y,
                    const Batch& latent, Rng& rng, const TransportConfig& cfg,
                    const Schedule& sched);

/// Same scheme written with a score field s = -g / gamma: dX = b dt - eps s dt + sqrt(2 eps) dW.
/// Needs no gamma, so it also covers schedules whose noise enters through beta (sqrt-awgn).
Batch integrate_sde_score(const BatchField& drift, const BatchField& score, const Batch& y,
                          const Batch& latent, Rng& rng, const TransportConfig& cfg);

/// Fields that realize the transport map Phi_Theta. `denoiser` is only used in SDE mode;
/// leave it empty to treat `drift` as a combined drift v and add noise only.
struct TransportFields {
    BatchField drift;
    BatchField denoiser;
};

/// Per-sample transport of every column of `ys`, order preserved. SDE noise is drawn from `rng`
/// before the batch is split across threads, so results do not depend on the thread count.
Batch pushforward(const TransportFields& fields, const Batch& ys, const Batch& latents, Rng& rng,
                  const TransportConfig& cfg, const Schedule& sched);

}  // namespace scsi
