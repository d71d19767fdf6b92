#include "scsi/channel.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace scsi;

TEST_CASE("awgn with zero noise is the identity") {
    Rng rng(1);
    const Vec x = standard_normal_vec(7, rng);
    const auto out = apply(ChannelSpec::awgn(0.0), x, rng);
    CHECK(out.y == x);
    CHECK_FALSE(out.latent.has_value());
}

TEST_CASE("full masking with zero fill") {
    Rng rng(2);
    const Vec x = standard_normal_vec(9, rng);
    const auto out = apply(ChannelSpec::random_mask(1.0, MaskFill::Zero), x, rng);
    CHECK(out.y == Vec::Zero(9));
    REQUIRE(out.latent.has_value());
    CHECK(*out.latent == Vec::Ones(9));
    CHECK(ChannelSpec::random_mask(0.3).latent_dim(9) == 9);
}

TEST_CASE("masking keeps unmasked coordinates and hits rho on average") {
    Rng rng(3);
    const Vec x = Vec::LinSpaced(50, 1.0, 50.0);
    const auto spec = ChannelSpec::random_mask(0.3, MaskFill::StandardGaussian);
    long masked = 0, total = 0;
    for (int rep = 0; rep < 2000; ++rep) {
        const auto out = apply(spec, x, rng);
        for (int i = 0; i < 50; ++i) {
            if ((*out.latent)[i] == 0.0) CHECK(out.y[i] == x[i]);
            masked += (*out.latent)[i] == 1.0;
            ++total;
        }
    }
    const double frac = static_cast<double>(masked) / total;
    const double se = std::sqrt(0.3 * 0.7 / total);
    CHECK(std::abs(frac - 0.3) < 4 * se);
}

TEST_CASE("awgn chi-square concentration") {
    Rng rng(4);
    const int d = 10000;
    const auto out = apply(ChannelSpec::awgn(1.0), Vec::Zero(d), rng);
    const double m = out.y.squaredNorm() / d;
    CHECK(m >= 0.94);
    CHECK(m <= 1.06);
}

TEST_CASE("awgn empirical covariance") {
    Rng rng(5);
    const int d = 6, n = 100000;
    const double sigma = 0.7;
    const Vec x = standard_normal_vec(d, rng);
    Mat acc = Mat::Zero(d, d);
    Vec mean = Vec::Zero(d);
    const auto spec = ChannelSpec::awgn(sigma);
    for (int i = 0; i < n; ++i) {
        const Vec r = apply(spec, x, rng).y - x;
        acc += r * r.transpose();
        mean += r;
    }
    mean /= n;
    const Mat cov = acc / n - mean * mean.transpose();
    const Mat diff = cov - sigma * sigma * Mat::Identity(d, d);
    const double opnorm = Eigen::SelfAdjointEigenSolver<Mat>(diff).eigenvalues().cwiseAbs().maxCoeff();
    CHECK(opnorm < 0.05);
}

TEST_CASE("identical seeds give identical draws") {
    const Vec x = Vec::LinSpaced(12, -1.0, 1.0);
    const ChannelSpec specs[] = {ChannelSpec::awgn(0.5), ChannelSpec::random_mask(0.4),
                                 ChannelSpec::poisson(3.0, 0.2),
                                 compose(ChannelSpec::awgn(0.1), ChannelSpec::gaussian_blur(1.5))};
    for (const auto& spec : specs) {
        Rng a(77), b(77);
        const auto ya = apply(spec, x, a), yb = apply(spec, x, b);
        CHECK(ya.y == yb.y);
        CHECK(ya.latent.has_value() == yb.latent.has_value());
    }
}

TEST_CASE("composition of noiseless channels is the identity") {
    Rng rng(6);
    const Vec x = standard_normal_vec(5, rng);
    CHECK(apply(compose(ChannelSpec::awgn(0.0), ChannelSpec::awgn(0.0)), x, rng).y == x);
}

TEST_CASE("blur preserves constants and has a normalized kernel") {
    for (double s : {0.3, 1.0, 2.5}) {
        const auto k = blur_kernel(s);
        CHECK(k.size() == 2 * static_cast<std::size_t>(std::ceil(3 * s)) + 1);
        double total = 0.0;
        for (double v : k) total += v;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
        const Vec c = Vec::Constant(16, 2.5);
        CHECK((blur_1d(c, s) - c).cwiseAbs().maxCoeff() < 1e-12);
    }
    // Blur then AWGN on c * 1: the output mean stays c * 1.
    Rng rng(7);
    const auto spec = compose(ChannelSpec::awgn(0.3), ChannelSpec::gaussian_blur(1.2));
    const int d = 20, n = 20000;
    Vec mean = Vec::Zero(d);
    for (int i = 0; i < n; ++i) mean += apply(spec, Vec::Constant(d, -1.3), rng).y;
    mean /= n;
    CHECK((mean - Vec::Constant(d, -1.3)).cwiseAbs().maxCoeff() < 4 * 0.3 / std::sqrt(n));
}

TEST_CASE("noise variances add under composition") {
    Rng rng(8);
    const double s1 = 0.4, s2 = 0.9;
    const auto spec = compose(ChannelSpec::awgn(s1), ChannelSpec::awgn(s2));
    const int n = 100000;
    const Vec x = Vec::Constant(1, 2.0);
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = apply(spec, x, rng).y[0] - 2.0;
        sum += r;
        sum2 += r * r;
    }
    const double var = sum2 / n - (sum / n) * (sum / n);
    const double expected = s1 * s1 + s2 * s2;
    // Var of the sample variance of a Gaussian is 2 sigma^4 / n.
    CHECK(std::abs(var - expected) < 4 * std::sqrt(2.0 / n) * expected);
}

TEST_CASE("composed latents are concatenated in application order") {
    Rng rng(9);
    const auto inner = ChannelSpec::random_mask(1.0, MaskFill::Zero);
    const auto outer = ChannelSpec::random_mask(0.0, MaskFill::Zero);
    const auto spec = compose(outer, inner);
    CHECK(spec.latent_dim(4) == 8);
    const auto out = apply(spec, Vec::Ones(4), rng);
    REQUIRE(out.latent.has_value());
    REQUIRE(out.latent->size() == 8);
    CHECK(out.latent->head(4) == Vec::Ones(4));
    CHECK(out.latent->tail(4) == Vec::Zero(4));
}

TEST_CASE("poisson mean tracks the blurred signal") {
    Rng rng(10);
    const int d = 12, n = 20000;
    const Vec x = Vec::LinSpaced(d, -2.0, 2.0);
    const double lambda = 4.0, shift = 0.5;
    const auto spec = compose(ChannelSpec::poisson(lambda, shift), ChannelSpec::gaussian_blur(1.0));
    const Vec blurred = blur_1d(x, 1.0);
    Vec sum = Vec::Zero(d);
    for (int i = 0; i < n; ++i) sum += apply(spec, x, rng).y;
    const Vec mean = sum / n;
    for (int i = 0; i < d; ++i) {
        const double rate = softplus(blurred[i] + shift);
        const double se = std::sqrt(rate / lambda / n);
        CHECK(std::abs(mean[i] - rate) < 3.5 * se);
    }
    // Outputs live on the lattice lambda^{-1} N.
    const Vec y = apply(ChannelSpec::poisson(lambda), x, rng).y;
    for (int i = 0; i < d; ++i) {
        CHECK(y[i] >= 0.0);
        CHECK(std::abs(y[i] * lambda - std::round(y[i] * lambda)) < 1e-12);
    }
}

TEST_CASE("invalid specs and inputs are rejected") {
    Rng rng(11);
    CHECK_THROWS_AS(ChannelSpec::awgn(-0.1), Error);
    CHECK_THROWS_AS(ChannelSpec::random_mask(1.5), Error);
    CHECK_THROWS_AS(ChannelSpec::gaussian_blur(0.0), Error);
    CHECK_THROWS_AS(ChannelSpec::poisson(0.0), Error);
    Vec bad = Vec::Zero(3);
    bad[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(apply(ChannelSpec::awgn(1.0), bad, rng), Error);
    bad[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(apply(ChannelSpec::random_mask(0.5), bad, rng), Error);
    CHECK_THROWS_AS(parse_channel_kind("jpeg"), Error);
    CHECK(parse_channel_kind("gaussian-blur-1d") == ChannelKind::GaussianBlur1D);
    CHECK(parse_mask_fill("zero") == MaskFill::Zero);
    CHECK_THROWS_AS(parse_mask_fill("mean"), Error);
}
