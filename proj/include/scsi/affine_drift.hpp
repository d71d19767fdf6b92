#pragma once

#include "scsi/common.hpp"
#include "scsi/gaussian.hpp"

namespace scsi {

/// Exact drift family of the sqrt-awgn interpolant for Gaussian priors:
///   b(t, x) = 1/2 (S + t I)^{-1} (x - m),  S = (P + P^T) / 2,
/// parameterized directly by the mean m and the matrix P. Satisfies FieldModel.
class AffineGaussianDrift {
public:
    AffineGaussianDrift() = default;
    explicit AffineGaussianDrift(const gaussian::GaussianModel& m);

    int data_dim() const { return static_cast<int>(mean_.size()); }
    int latent_dim() const { return 0; }

    Batch forward(const Batch& x, const Vec& t, const Batch& latent = Batch()) const;
    Vec backward(const Batch& x, const Vec& t, const Batch& latent, const Batch& dout) const;

    Vec parameters() const;
    void set_parameters(const Vec& p);

    /// Current (mean, symmetric part of P); the covariance need not be PSD mid-training.
    Vec mean() const { return mean_; }
    Mat cov() const { return 0.5 * (p_ + p_.transpose()); }

private:
    Vec mean_;
    Mat p_;
};

}  // namespace scsi
