#include "scsi/gaussian_trainer.hpp"

namespace scsi {

using gaussian::GaussianModel;

namespace {

struct AffineField {
    Mat a;  // Jacobian
    Vec c;  // offset: b(t, x) = a x + c
};

AffineField read_affine(const AffineGaussianDrift& model, double t) {
    const auto d = model.data_dim();
    Batch probes = Batch::Zero(d, d + 1);
    probes.rightCols(d) = Mat::Identity(d, d);
    const Batch out = model.forward(probes, Vec::Constant(d + 1, t));
    AffineField f;
    f.c = out.col(0);
    f.a = out.rightCols(d).colwise() - f.c;
    return f;
}

struct Moments {
    Vec m;
    Mat c;
};

Moments derivative(const AffineGaussianDrift& model, double s, const Moments& y, double eps) {
    const AffineField f = read_affine(model, 1.0 - s);
    const auto d = y.m.size();
    Moments dy;
    dy.m = -(1.0 + eps) * (f.a * y.m + f.c);
    dy.c = -(1.0 + eps) * (f.a * y.c + y.c * f.a.transpose()) + eps * Mat::Identity(d, d);
    return dy;
}

Moments axpy(const Moments& y, double h, const Moments& k) { return {y.m + h * k.m, y.c + h * k.c}; }

}  // namespace

GaussianModel pushforward_moments(const AffineGaussianDrift& model, const GaussianModel& obs,
                                  double eps, int rk4_steps) {
    if (rk4_steps < 1) throw Error("moment integration needs at least one step");
    if (obs.dim() != model.data_dim()) throw Error("observation law has the wrong dimension");
    const double h = 1.0 / rk4_steps;
    Moments y{obs.mean, obs.cov};
    for (int n = 0; n < rk4_steps; ++n) {
        const double s = n * h;
        const Moments k1 = derivative(model, s, y, eps);
        const Moments k2 = derivative(model, s + 0.5 * h, axpy(y, 0.5 * h, k1), eps);
        const Moments k3 = derivative(model, s + 0.5 * h, axpy(y, 0.5 * h, k2), eps);
        const Moments k4 = derivative(model, s + h, axpy(y, h, k3), eps);
        y.m += (h / 6.0) * (k1.m + 2.0 * k2.m + 2.0 * k3.m + k4.m);
        y.c += (h / 6.0) * (k1.c + 2.0 * k2.c + 2.0 * k3.c + k4.c);
    }
    if (!y.m.allFinite() || !y.c.allFinite()) throw Error("moment integration diverged");
    return GaussianModel(y.m, 0.5 * (y.c + y.c.transpose()));
}

AffineGaussianDrift fit_affine_drift_exact(const GaussianModel& law) { return AffineGaussianDrift(law); }

std::vector<GaussianModel> scsi_train_gaussian_exact(const GaussianModel& truth,
                                                     const GaussianModel& init,
                                                     const ExactGaussianConfig& cfg) {
    if (truth.dim() != init.dim()) throw Error("truth and initialization dimensions differ");
    const auto d = truth.dim();
    const GaussianModel observations(truth.mean, truth.cov + Mat::Identity(d, d));
    std::vector<GaussianModel> iterates{init};
    AffineGaussianDrift model = fit_affine_drift_exact(init);
    for (int k = 1; k <= cfg.outer_iterations; ++k) {
        const GaussianModel pushed = pushforward_moments(model, observations, cfg.eps, cfg.rk4_steps);
        model = fit_affine_drift_exact(pushed);
        iterates.emplace_back(model.mean(), model.cov());
    }
    return iterates;
}

}  // namespace scsi
