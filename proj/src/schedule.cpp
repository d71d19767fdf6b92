#include "scsi/schedule.hpp"

#include <cmath>

namespace scsi {

ScheduleKind parse_schedule_kind(std::string_view name) {
    if (name == "ode-linear") return ScheduleKind::OdeLinear;
    if (name == "sde-linear") return ScheduleKind::SdeLinear;
    if (name == "sqrt-awgn") return ScheduleKind::SqrtAwgn;
    throw Error("unknown schedule '" + std::string(name) +
                "' (expected ode-linear, sde-linear or sqrt-awgn)");
}

std::string to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::OdeLinear: return "ode-linear";
        case ScheduleKind::SdeLinear: return "sde-linear";
        case ScheduleKind::SqrtAwgn: return "sqrt-awgn";
    }
    return "?";
}

Schedule Schedule::make(ScheduleKind kind) {
    return make(kind, kind == ScheduleKind::SdeLinear ? 0.1 : 0.0);
}

Schedule Schedule::make(ScheduleKind kind, double epsilon) {
    if (!(epsilon >= 0.0)) throw Error("schedule epsilon must be nonnegative");
    Schedule s;
    s.kind = kind;
    s.epsilon = epsilon;
    auto zero = [](double) { return 0.0; };
    switch (kind) {
        case ScheduleKind::OdeLinear:
            s.alpha = [](double t) { return 1.0 - t; };
            s.beta = [](double t) { return t; };
            s.gamma = zero;
            s.alpha_dot = [](double) { return -1.0; };
            s.beta_dot = [](double) { return 1.0; };
            s.gamma_dot = zero;
            break;
        case ScheduleKind::SdeLinear:
            s.alpha = [](double t) { return 1.0 - t; };
            s.beta = [](double t) { return t; };
            s.gamma = [](double t) { return t * (1.0 - t); };
            s.alpha_dot = [](double) { return -1.0; };
            s.beta_dot = [](double) { return 1.0; };
            s.gamma_dot = [](double t) { return 1.0 - 2.0 * t; };
            break;
        case ScheduleKind::SqrtAwgn:
            s.alpha = [](double t) { return 1.0 - std::sqrt(t); };
            s.beta = [](double t) { return std::sqrt(t); };
            s.gamma = zero;
            // Singular at t = 0; training times start at t_min.
            s.alpha_dot = [](double t) { return -0.5 / std::sqrt(t); };
            s.beta_dot = [](double t) { return 0.5 / std::sqrt(t); };
            s.gamma_dot = zero;
            break;
    }
    return s;
}

namespace {

void check_time(double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw Error("interpolant time outside [0, 1]");
}

}  // namespace

InterpolantSample make_interpolant(const Vec& x0, const Vec& x1, const Vec& z, double t,
                                   const Schedule& sched) {
    if (x0.size() != x1.size() || z.size() != x0.size())
        throw Error("interpolant endpoints have mismatched dimensions");
    check_time(t);
    InterpolantSample s;
    s.t = t;
    s.x0 = x0;
    s.x1 = x1;
    s.z = z;
    // Exact boundary values regardless of floating-point cancellation.
    if (t == 0.0) {
        s.i_t = x0;
    } else if (t == 1.0) {
        s.i_t = x1;
    } else {
        s.i_t = sched.alpha(t) * x0 + sched.beta(t) * x1 + sched.gamma(t) * z;
    }
    s.i_dot = sched.alpha_dot(t) * x0 + sched.beta_dot(t) * x1 + sched.gamma_dot(t) * z;
    return s;
}

InterpolantSample sample_interpolant(const Vec& x0, const Vec& x1, double t, Rng& rng,
                                     const Schedule& sched) {
    if (x0.size() != x1.size()) throw Error("interpolant endpoints have mismatched dimensions");
    check_time(t);
    Vec z = standard_normal_vec(x0.size(), rng);
    return make_interpolant(x0, x1, z, t, sched);
}

InterpolantBatch make_interpolant_batch(const Batch& x0, const Batch& x1, const Batch& z,
                                        const Vec& t, const Schedule& sched) {
    if (x0.rows() != x1.rows() || x0.cols() != x1.cols() || z.rows() != x0.rows() ||
        z.cols() != x0.cols() || t.size() != x0.cols())
        throw Error("interpolant batch has mismatched shapes");
    InterpolantBatch b;
    b.t = t;
    b.z = z;
    b.i_t.resize(x0.rows(), x0.cols());
    b.i_dot.resize(x0.rows(), x0.cols());
    for (Eigen::Index j = 0; j < x0.cols(); ++j) {
        const double tj = t[j];
        check_time(tj);
        b.i_t.col(j) = sched.alpha(tj) * x0.col(j) + sched.beta(tj) * x1.col(j) +
                       sched.gamma(tj) * z.col(j);
        b.i_dot.col(j) = sched.alpha_dot(tj) * x0.col(j) + sched.beta_dot(tj) * x1.col(j) +
                         sched.gamma_dot(tj) * z.col(j);
    }
    return b;
}

double drift_residual(const Vec& b_hat, const InterpolantSample& s) {
    if (b_hat.size() != s.i_dot.size()) throw Error("drift estimate has wrong dimension");
    return (b_hat - s.i_dot).squaredNorm();
}

double denoiser_residual(const Vec& g_hat, const InterpolantSample& s, const Schedule& sched) {
    if (g_hat.size() != s.z.size()) throw Error("denoiser estimate has wrong dimension");
    if (!(sched.gamma(s.t) > 0.0))
        throw Error("denoiser residual needs gamma(t) > 0; schedule " + to_string(sched.kind) +
                    " has no latent noise at this time");
    return (g_hat - s.z).squaredNorm();
}

double combined_residual(const Vec& v_hat, const InterpolantSample& s, const Schedule& sched) {
    if (v_hat.size() != s.i_dot.size()) throw Error("combined drift estimate has wrong dimension");
    if (sched.epsilon == 0.0) return drift_residual(v_hat, s);
    const double g = sched.gamma(s.t);
    if (!(g > 0.0)) throw Error("combined residual with epsilon > 0 needs gamma(t) > 0");
    return (v_hat - s.i_dot - (sched.epsilon / g) * s.z).squaredNorm();
}

Batch residual_targets(ResidualKind kind, const InterpolantBatch& batch, const Schedule& sched) {
    switch (kind) {
        case ResidualKind::Drift: return batch.i_dot;
        case ResidualKind::Denoiser: {
            for (Eigen::Index j = 0; j < batch.t.size(); ++j)
                if (!(sched.gamma(batch.t[j]) > 0.0))
                    throw Error("denoiser target needs gamma(t) > 0");
            return batch.z;
        }
        case ResidualKind::Combined: {
            if (sched.epsilon == 0.0) return batch.i_dot;
            Batch target = batch.i_dot;
            for (Eigen::Index j = 0; j < batch.t.size(); ++j) {
                const double g = sched.gamma(batch.t[j]);
                if (!(g > 0.0)) throw Error("combined target with epsilon > 0 needs gamma(t) > 0");
                target.col(j) += (sched.epsilon / g) * batch.z.col(j);
            }
            return target;
        }
    }
    throw Error("unknown residual kind");
}

double sample_training_time(Rng& rng, double t_min) {
    return t_min + (1.0 - 2.0 * t_min) * uniform01(rng);
}

}  // namespace scsi
