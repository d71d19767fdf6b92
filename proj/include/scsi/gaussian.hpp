#pragma once

// Closed-form engine for a Gaussian prior observed through unit-variance AWGN,
// y = x + w, w ~ N(0, I), with the interpolant I_t = x + sqrt(t) w.
// Here `eps` is the diffusion coefficient of the reverse SDE
//   dY = (1 + eps)/2 grad log pi_{1-s}(Y) ds + sqrt(eps) dW,
// so eps = 0 is the probability-flow ODE and eps = 1 reproduces EM.

#include "scsi/common.hpp"

#include <functional>
#include <utility>

namespace scsi::gaussian {

struct GaussianModel {
    Vec mean;
    Mat cov;

    GaussianModel() = default;
    /// Symmetrizes `cov`; throws if it is not symmetric within 1e-10 or has eigenvalues
    /// below -1e-10 (small negative eigenvalues are clamped to 0).
    GaussianModel(Vec mean, Mat cov);

    static GaussianModel centered(Mat cov);
    Eigen::Index dim() const { return mean.size(); }
};

/// Eigendecomposition of a symmetric matrix with scalar functions applied to its spectrum.
class MatrixFn {
public:
    explicit MatrixFn(const Mat& a);

    const Vec& eigenvalues() const { return values_; }
    const Mat& eigenvectors() const { return vectors_; }

    Mat apply(const std::function<double(double)>& f) const;
    Mat reconstruct() const;
    /// Eigenvalues clamped at zero.
    Mat sqrt() const;
    Mat pow(double p) const;

private:
    Vec values_;
    Mat vectors_;
};

/// -(cov + t I)^{-1} (x - mean)
Vec gaussian_score(double t, const Vec& x, const GaussianModel& m);

/// The probability-flow drift of I_t = x + sqrt(t) w: b(t, x) = -score / 2.
Vec gaussian_flow_drift(double t, const Vec& x, const GaussianModel& m);

/// B = (cov (cov + I)^{-1})^{(1 + eps)/2}, the time-1 solution map of the reverse dynamics.
Mat solution_map_B(const GaussianModel& m, double eps);
Mat solution_map_B(const Mat& cov, double eps);

/// Phi(t, s) = (cov + (1-t) I)^{(1+eps)/2} (cov + (1-s) I)^{-(1+eps)/2}, reverse time s -> t,
/// where reverse time 0 is the observation and 1 the data.
Mat solution_map(const Mat& cov, double eps, double t, double s);

/// One self-consistency step: b+ = b_k + B_k (b - b_k), Sigma+ = Sigma_k + B_k (Sigma - Sigma_k) B_k.
GaussianModel scsi_update(const GaussianModel& current, const GaussianModel& truth, double eps);

/// EM update for centered Gaussians, Sigma+ = Sigma_k + M_k (Sigma - Sigma_k) M_k,
/// M_k = Sigma_k (Sigma_k + I)^{-1}. Throws on nonzero means.
GaussianModel em_update(const GaussianModel& current, const GaussianModel& truth);

/// The same EM step through its precision-matrix form (needs Sigma_k invertible).
Mat em_update_precision_form(const Mat& current_cov, const Mat& truth_cov);

/// 1 - eta^{1+eps} (1 + eta)^{-1-eps}
double rate_factor(double eta, double eps);

/// Tr(A + B - 2 (A^{1/2} B A^{1/2})^{1/2}) between centered Gaussians.
double gaussian_w2sq(const Mat& a, const Mat& b);

/// Tr((T_A - T_B)(A + I)(T_A - T_B)) with T_X = solution_map_B(X, eps).
double transport_cost(const Mat& a, const Mat& b, double eps = 0.0);

/// KL(p || q); requires q.cov positive definite.
double gaussian_kl(const GaussianModel& p, const GaussianModel& q);

struct ConditionRatio {
    double ratio = 1.0;
    double bound = 1.0;
};

/// ratio = KL(N(0,S) || N(0,C)) / KL(N(0,S+I) || N(0,C+I)), bound = (1 + 1/lambda_min(S))^2.
ConditionRatio condition_ratio_check(const GaussianModel& truth, const GaussianModel& candidate);

/// scale * G G^T / dof with G a d x dof standard Gaussian matrix.
Mat wishart_sample(int d, int dof, double scale, Rng& rng);

double lambda_min(const Mat& a);

}  // namespace scsi::gaussian
