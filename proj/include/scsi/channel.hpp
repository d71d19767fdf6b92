#pragma once

#include "scsi/common.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scsi {

enum class ChannelKind { Awgn, RandomMask, GaussianBlur1D, PoissonNoise, Compose };
enum class MaskFill { Zero, StandardGaussian };

ChannelKind parse_channel_kind(std::string_view name);
MaskFill parse_mask_fill(std::string_view name);
std::string to_string(ChannelKind kind);

/// Black-box corruption y ~ P(dy | x). Only `apply` is visible to the trainer.
struct ChannelSpec {
    ChannelKind kind = ChannelKind::Awgn;
    double sigma_n = 0.0;       // AWGN std
    double rho = 0.5;           // mask probability
    double sigma_r = 1.0;       // blur kernel width (in coordinates)
    double lambda_n = 1.0;      // Poisson scale
    double poisson_shift = 0.0; // rate = softplus(x + shift)
    MaskFill fill = MaskFill::StandardGaussian;
    // COMPOSE: apply `second` first, then `first`, i.e. first o second.
    std::shared_ptr<const ChannelSpec> first;
    std::shared_ptr<const ChannelSpec> second;

    static ChannelSpec awgn(double sigma);
    static ChannelSpec random_mask(double rho, MaskFill fill = MaskFill::StandardGaussian);
    static ChannelSpec gaussian_blur(double sigma_r);
    static ChannelSpec poisson(double lambda_n, double shift = 0.0);

    void validate() const;
    /// Size of the latent emitted for an input of dimension d.
    int latent_dim(int d) const;
};

/// a o b: x -> a(b(x)).
ChannelSpec compose(const ChannelSpec& a, const ChannelSpec& b);

struct ChannelOutput {
    Vec y;
    std::optional<Vec> latent;
};

ChannelOutput apply(const ChannelSpec& spec, const Vec& x, Rng& rng);

/// Normalized truncated Gaussian kernel of radius ceil(3 sigma).
std::vector<double> blur_kernel(double sigma_r);
/// Deterministic blur with reflecting boundaries.
Vec blur_1d(const Vec& x, double sigma_r);

double softplus(double x);

}  // namespace scsi
