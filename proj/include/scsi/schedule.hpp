#pragma once

#include "scsi/common.hpp"

#include <functional>
#include <string>
#include <string_view>

namespace scsi {

enum class ScheduleKind { OdeLinear, SdeLinear, SqrtAwgn };

ScheduleKind parse_schedule_kind(std::string_view name);
std::string to_string(ScheduleKind kind);

/// Interpolant coefficients I_t = alpha(t) x0 + beta(t) x1 + gamma(t) z with analytic derivatives.
struct Schedule {
    using Fn = std::function<double(double)>;

    ScheduleKind kind = ScheduleKind::OdeLinear;
    Fn alpha, beta, gamma;
    Fn alpha_dot, beta_dot, gamma_dot;
    double epsilon = 0.0;

    static Schedule make(ScheduleKind kind);
    static Schedule make(ScheduleKind kind, double epsilon);
    static Schedule ode_linear() { return make(ScheduleKind::OdeLinear); }
    static Schedule sde_linear(double epsilon = 0.1) { return make(ScheduleKind::SdeLinear, epsilon); }
    static Schedule sqrt_awgn() { return make(ScheduleKind::SqrtAwgn); }

    bool has_noise() const { return kind == ScheduleKind::SdeLinear; }
};

struct InterpolantSample {
    double t = 0.0;
    Vec i_t;
    Vec i_dot;
    Vec z;
    Vec x0;
    Vec x1;
};

/// Draws z ~ N(0, I) and evaluates I_t and its time derivative.
InterpolantSample sample_interpolant(const Vec& x0, const Vec& x1, double t, Rng& rng,
                                     const Schedule& sched);

/// Same, with caller-supplied noise.
InterpolantSample make_interpolant(const Vec& x0, const Vec& x1, const Vec& z, double t,
                                   const Schedule& sched);

/// Batched form used by the trainer: columns of x0, x1, z are paired, t per column.
struct InterpolantBatch {
    Vec t;
    Batch i_t;
    Batch i_dot;
    Batch z;
};

InterpolantBatch make_interpolant_batch(const Batch& x0, const Batch& x1, const Batch& z,
                                        const Vec& t, const Schedule& sched);

enum class ResidualKind { Drift, Denoiser, Combined };

/// |b_hat - i_dot|^2
double drift_residual(const Vec& b_hat, const InterpolantSample& s);
/// |g_hat - z|^2; requires gamma(t) > 0.
double denoiser_residual(const Vec& g_hat, const InterpolantSample& s, const Schedule& sched);
/// |v_hat - i_dot - eps gamma(t)^{-1} z|^2
double combined_residual(const Vec& v_hat, const InterpolantSample& s, const Schedule& sched);

/// Regression target for each residual kind, one column per sample.
Batch residual_targets(ResidualKind kind, const InterpolantBatch& batch, const Schedule& sched);

/// Uniform time draw on [t_min, 1 - t_min].
double sample_training_time(Rng& rng, double t_min = 1e-3);

}  // namespace scsi
