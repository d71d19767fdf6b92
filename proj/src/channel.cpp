#include "scsi/channel.hpp"

#include <cmath>

namespace scsi {

ChannelKind parse_channel_kind(std::string_view name) {
    if (name == "awgn") return ChannelKind::Awgn;
    if (name == "random-mask") return ChannelKind::RandomMask;
    if (name == "gaussian-blur-1d") return ChannelKind::GaussianBlur1D;
    if (name == "poisson") return ChannelKind::PoissonNoise;
    throw Error("unknown channel kind '" + std::string(name) +
                "' (expected awgn, random-mask, gaussian-blur-1d or poisson)");
}

MaskFill parse_mask_fill(std::string_view name) {
    if (name == "zero") return MaskFill::Zero;
    if (name == "standard-gaussian") return MaskFill::StandardGaussian;
    throw Error("unknown mask fill '" + std::string(name) + "' (expected zero or standard-gaussian)");
}

std::string to_string(ChannelKind kind) {
    switch (kind) {
        case ChannelKind::Awgn: return "awgn";
        case ChannelKind::RandomMask: return "random-mask";
        case ChannelKind::GaussianBlur1D: return "gaussian-blur-1d";
        case ChannelKind::PoissonNoise: return "poisson";
        case ChannelKind::Compose: return "compose";
    }
    return "?";
}

ChannelSpec ChannelSpec::awgn(double sigma) {
    ChannelSpec s;
    s.kind = ChannelKind::Awgn;
    s.sigma_n = sigma;
    s.validate();
    return s;
}

ChannelSpec ChannelSpec::random_mask(double rho, MaskFill fill) {
    ChannelSpec s;
    s.kind = ChannelKind::RandomMask;
    s.rho = rho;
    s.fill = fill;
    s.validate();
    return s;
}

ChannelSpec ChannelSpec::gaussian_blur(double sigma_r) {
    ChannelSpec s;
    s.kind = ChannelKind::GaussianBlur1D;
    s.sigma_r = sigma_r;
    s.validate();
    return s;
}

ChannelSpec ChannelSpec::poisson(double lambda_n, double shift) {
    ChannelSpec s;
    s.kind = ChannelKind::PoissonNoise;
    s.lambda_n = lambda_n;
    s.poisson_shift = shift;
    s.validate();
    return s;
}

void ChannelSpec::validate() const {
    switch (kind) {
        case ChannelKind::Awgn:
            if (!(sigma_n >= 0.0)) throw Error("awgn: sigma_n must be >= 0");
            break;
        case ChannelKind::RandomMask:
            if (!(rho >= 0.0 && rho <= 1.0)) throw Error("random-mask: rho must lie in [0, 1]");
            break;
        case ChannelKind::GaussianBlur1D:
            if (!(sigma_r > 0.0)) throw Error("gaussian-blur-1d: sigma_r must be > 0");
            break;
        case ChannelKind::PoissonNoise:
            if (!(lambda_n > 0.0)) throw Error("poisson: lambda_n must be > 0");
            if (!std::isfinite(poisson_shift)) throw Error("poisson: shift must be finite");
            break;
        case ChannelKind::Compose:
            if (!first || !second) throw Error("compose: both stages required");
            first->validate();
            second->validate();
            break;
    }
}

int ChannelSpec::latent_dim(int d) const {
    switch (kind) {
        case ChannelKind::RandomMask: return d;
        case ChannelKind::Compose: return first->latent_dim(d) + second->latent_dim(d);
        default: return 0;
    }
}

ChannelSpec compose(const ChannelSpec& a, const ChannelSpec& b) {
    a.validate();
    b.validate();
    ChannelSpec s;
    s.kind = ChannelKind::Compose;
    s.first = std::make_shared<const ChannelSpec>(a);
    s.second = std::make_shared<const ChannelSpec>(b);
    return s;
}

double softplus(double x) {
    return x > 30.0 ? x : std::log1p(std::exp(x));
}

std::vector<double> blur_kernel(double sigma_r) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma_r));
    std::vector<double> k(2 * radius + 1);
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma_r * sigma_r));
        total += k[i + radius];
    }
    for (double& v : k) v /= total;
    return k;
}

namespace {

// Half-sample symmetric reflection: -1 -> 0, n -> n-1.
Eigen::Index reflect(Eigen::Index i, Eigen::Index n) {
    if (n == 1) return 0;
    const Eigen::Index period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

}  // namespace

Vec blur_1d(const Vec& x, double sigma_r) {
    const auto k = blur_kernel(sigma_r);
    const auto radius = static_cast<Eigen::Index>(k.size() / 2);
    const Eigen::Index n = x.size();
    Vec y = Vec::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = -radius; j <= radius; ++j)
            y[i] += k[static_cast<std::size_t>(j + radius)] * x[reflect(i + j, n)];
    return y;
}

ChannelOutput apply(const ChannelSpec& spec, const Vec& x, Rng& rng) {
    if (!x.allFinite()) throw Error("channel input is not finite");
    const Eigen::Index d = x.size();
    ChannelOutput out;
    switch (spec.kind) {
        case ChannelKind::Awgn:
            out.y = spec.sigma_n == 0.0 ? x : Vec(x + spec.sigma_n * standard_normal_vec(d, rng));
            break;
        case ChannelKind::RandomMask: {
            Vec mask(d);
            out.y = x;
            for (Eigen::Index i = 0; i < d; ++i) {
                const bool masked = uniform01(rng) < spec.rho;
                mask[i] = masked ? 1.0 : 0.0;
                if (masked)
                    out.y[i] = spec.fill == MaskFill::Zero ? 0.0 : standard_normal(rng);
            }
            out.latent = std::move(mask);
            break;
        }
        case ChannelKind::GaussianBlur1D:
            out.y = blur_1d(x, spec.sigma_r);
            break;
        case ChannelKind::PoissonNoise: {
            out.y.resize(d);
            for (Eigen::Index i = 0; i < d; ++i) {
                const double rate = spec.lambda_n * softplus(x[i] + spec.poisson_shift);
                std::poisson_distribution<long long> pd(rate);
                out.y[i] = static_cast<double>(rate > 0.0 ? pd(rng) : 0) / spec.lambda_n;
            }
            break;
        }
        case ChannelKind::Compose: {
            ChannelOutput inner = apply(*spec.second, x, rng);
            ChannelOutput outer = apply(*spec.first, inner.y, rng);
            out.y = std::move(outer.y);
            // Latents in application order: inner stage first.
            if (inner.latent || outer.latent) {
                const Eigen::Index a = inner.latent ? inner.latent->size() : 0;
                const Eigen::Index b = outer.latent ? outer.latent->size() : 0;
                Vec lat(a + b);
                if (a) lat.head(a) = *inner.latent;
                if (b) lat.tail(b) = *outer.latent;
                out.latent = std::move(lat);
            }
            break;
        }
    }
    return out;
}

}  // namespace scsi
