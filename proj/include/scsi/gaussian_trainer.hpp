#pragma once

// Population-level self-consistency iteration for a Gaussian prior under unit AWGN with the
// model restricted to the exact affine drift family. The observation law N(b, Sigma + I) is
// pushed through the current model's reverse dynamics by integrating its mean/covariance ODE
// (RK4); the inner problem is then solved exactly, since the drift-loss minimizer over the
// affine family for a Gaussian endpoint law is that law's (mean, covariance).

#include "scsi/affine_drift.hpp"
#include "scsi/gaussian.hpp"

#include <vector>

namespace scsi {

struct ExactGaussianConfig {
    /// Reverse-SDE diffusion coefficient (0 = probability-flow ODE, 1 = EM-equivalent).
    double eps = 0.0;
    int outer_iterations = 50;
    /// RK4 steps for the moment ODE on reverse time [0, 1].
    int rk4_steps = 2000;
};

/// Law of Phi(y) for y ~ obs when the model drift is affine in x:
///   dm/ds = -(1+eps) b(1-s, m),  dC/ds = -(1+eps)(A C + C A^T) + eps I,  A = d b / d x,
/// with A read off the model through forward evaluations.
gaussian::GaussianModel pushforward_moments(const AffineGaussianDrift& model,
                                            const gaussian::GaussianModel& obs, double eps,
                                            int rk4_steps);

/// Exact inner minimization: the affine-family drift whose Gaussian matches `law`.
AffineGaussianDrift fit_affine_drift_exact(const gaussian::GaussianModel& law);

/// Iterates (b_k, Sigma_k), k = 0..K, starting from `init` with observations N(b, Sigma + I).
std::vector<gaussian::GaussianModel> scsi_train_gaussian_exact(const gaussian::GaussianModel& truth,
                                                               const gaussian::GaussianModel& init,
                                                               const ExactGaussianConfig& cfg);

}  // namespace scsi
