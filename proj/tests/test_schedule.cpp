#include "scsi/gaussian.hpp"
#include "scsi/schedule.hpp"

#include <doctest.h>

#include <cmath>

using namespace scsi;

namespace {

const ScheduleKind kAll[] = {ScheduleKind::OdeLinear, ScheduleKind::SdeLinear, ScheduleKind::SqrtAwgn};

Vec v1(double a) { return Vec::Constant(1, a); }

}  // namespace

TEST_CASE("schedule boundary conditions") {
    for (auto kind : kAll) {
        const auto s = Schedule::make(kind);
        CHECK(s.alpha(0.0) == 1.0);
        CHECK(s.alpha(1.0) == 0.0);
        CHECK(s.beta(0.0) == 0.0);
        CHECK(s.beta(1.0) == 1.0);
        CHECK(s.gamma(0.0) == 0.0);
        CHECK(s.gamma(1.0) == 0.0);
    }
    CHECK(Schedule::sde_linear().epsilon == 0.1);
    CHECK(Schedule::ode_linear().epsilon == 0.0);
    CHECK(Schedule::sde_linear().gamma(0.5) == doctest::Approx(0.25));
}

TEST_CASE("schedule derivatives agree with central differences") {
    const double h = 1e-6;
    for (auto kind : kAll) {
        const auto s = Schedule::make(kind);
        for (int i = 1; i < 100; ++i) {
            const double t = i / 100.0;
            auto check = [&](const Schedule::Fn& f, const Schedule::Fn& df) {
                const double fd = (f(t + h) - f(t - h)) / (2 * h);
                const double exact = df(t);
                CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
            };
            check(s.alpha, s.alpha_dot);
            check(s.beta, s.beta_dot);
            check(s.gamma, s.gamma_dot);
        }
    }
}

TEST_CASE("sample_interpolant endpoints and hand values") {
    Rng rng(3);
    const Vec x0 = standard_normal_vec(4, rng);
    const Vec x1 = standard_normal_vec(4, rng);
    for (auto kind : kAll) {
        const auto s = Schedule::make(kind);
        CHECK(sample_interpolant(x0, x1, 0.0, rng, s).i_t == x0);
        CHECK(sample_interpolant(x0, x1, 1.0, rng, s).i_t == x1);
    }
    const auto s = sample_interpolant(v1(0.0), v1(2.0), 0.5, rng, Schedule::ode_linear());
    CHECK(s.i_t[0] == doctest::Approx(1.0));
    CHECK(s.i_dot[0] == doctest::Approx(2.0));
    CHECK(s.z.size() == 1);
}

TEST_CASE("sample_interpolant satisfies its defining identities") {
    Rng rng(11);
    const auto sched = Schedule::sde_linear();
    for (int rep = 0; rep < 20; ++rep) {
        const Vec x0 = standard_normal_vec(3, rng), x1 = standard_normal_vec(3, rng);
        const double t = uniform01(rng);
        const auto s = sample_interpolant(x0, x1, t, rng, sched);
        CHECK((s.i_t - (sched.alpha(t) * x0 + sched.beta(t) * x1 + sched.gamma(t) * s.z)).norm() == 0.0);
        CHECK((s.i_dot - (sched.alpha_dot(t) * x0 + sched.beta_dot(t) * x1 + sched.gamma_dot(t) * s.z))
                  .norm() == 0.0);
    }
}

TEST_CASE("interpolant time derivative is second-order consistent") {
    Rng rng(5);
    const Vec x0 = standard_normal_vec(2, rng), x1 = standard_normal_vec(2, rng),
              z = standard_normal_vec(2, rng);
    for (auto kind : kAll) {
        const auto sched = Schedule::make(kind);
        const double t = 0.37;
        const Vec exact = make_interpolant(x0, x1, z, t, sched).i_dot;
        double prev = 0.0;
        for (double h : {1e-2, 5e-3}) {
            const Vec fd = (make_interpolant(x0, x1, z, t + h, sched).i_t -
                            make_interpolant(x0, x1, z, t - h, sched).i_t) /
                           (2 * h);
            const double err = (fd - exact).norm();
            if (prev > 1e-12) CHECK(err < prev / 3.0);  // halving h cuts the error ~4x
            prev = err;
        }
    }
}

TEST_CASE("sample_interpolant rejects bad input") {
    Rng rng(1);
    CHECK_THROWS_AS(sample_interpolant(Vec::Zero(2), Vec::Zero(3), 0.5, rng, Schedule::ode_linear()),
                    Error);
    CHECK_THROWS_AS(sample_interpolant(Vec::Zero(2), Vec::Zero(2), 1.5, rng, Schedule::ode_linear()),
                    Error);
    CHECK_THROWS_AS(sample_interpolant(Vec::Zero(2), Vec::Zero(2), -0.1, rng, Schedule::ode_linear()),
                    Error);
}

TEST_CASE("residual values") {
    Rng rng(2);
    const auto sched = Schedule::sde_linear();
    const auto s = sample_interpolant(standard_normal_vec(3, rng), standard_normal_vec(3, rng), 0.3,
                                      rng, sched);
    CHECK(drift_residual(s.i_dot, s) == 0.0);
    Vec off = s.i_dot;
    off[0] += 1.0;
    CHECK(drift_residual(off, s) == doctest::Approx(1.0));
    CHECK(denoiser_residual(s.z, s, sched) == 0.0);
    CHECK_THROWS_AS(drift_residual(Vec::Zero(2), s), Error);

    // g_hat = 0 against z = e1.
    auto e1 = make_interpolant(Vec::Zero(2), Vec::Zero(2), Vec::Unit(2, 0), 0.5, sched);
    CHECK(denoiser_residual(Vec::Zero(2), e1, sched) == doctest::Approx(1.0));
    CHECK_THROWS_AS(denoiser_residual(Vec::Zero(2), e1, Schedule::ode_linear()), Error);

    const Vec full = s.i_dot + (sched.epsilon / sched.gamma(s.t)) * s.z;
    CHECK(combined_residual(full, s, sched) == doctest::Approx(0.0).epsilon(1e-12));
    const auto no_eps = Schedule::make(ScheduleKind::SdeLinear, 0.0);
    CHECK(combined_residual(off, s, no_eps) == drift_residual(off, s));

    // SDE_LINEAR, t = 0.5, eps = 0.1, z = 1, i_dot = 0: target 0.4, v_hat = 0 gives 0.16.
    auto hand = make_interpolant(v1(0.0), v1(0.0), v1(1.0), 0.5, sched);
    REQUIRE(hand.i_dot[0] == 0.0);
    CHECK(combined_residual(v1(0.0), hand, sched) == doctest::Approx(0.16));

    // eps > 0 with gamma(t) = 0 is undefined.
    auto boundary = make_interpolant(v1(0.0), v1(0.0), v1(1.0), 0.0, sched);
    CHECK_THROWS_AS(combined_residual(v1(0.0), boundary, sched), Error);
}

namespace {

// x0 ~ N(b, S), x1 = x0 + w on the sqrt-awgn interpolant I_t = x0 + sqrt(t) w.
struct GaussianPairs {
    gaussian::GaussianModel prior;
    Mat chol;
};

GaussianPairs make_prior() {
    Mat s(2, 2);
    s << 1.5, 0.4, 0.4, 0.6;
    Vec b(2);
    b << 0.3, -0.7;
    return {gaussian::GaussianModel(b, s), s.llt().matrixL()};
}

InterpolantSample draw_pair(const GaussianPairs& g, double t, Rng& rng) {
    const Vec x0 = g.prior.mean + g.chol * standard_normal_vec(2, rng);
    const Vec x1 = x0 + standard_normal_vec(2, rng);
    return sample_interpolant(x0, x1, t, rng, Schedule::sqrt_awgn());
}

}  // namespace

TEST_CASE("optimal Gaussian drift attains the conditional variance") {
    // E|I_dot - E[I_dot | I_t]|^2 = Tr(S (S + tI)^{-1}) / (4t) for I_dot = w / (2 sqrt t).
    const auto g = make_prior();
    Rng rng(17);
    const double t = 0.5;
    const int n = 10000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto s = draw_pair(g, t, rng);
        const double r = drift_residual(gaussian::gaussian_flow_drift(t, s.i_t, g.prior), s);
        sum += r;
        sum2 += r * r;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    const Mat s = g.prior.cov;
    const double expected = (s * (s + t * Mat::Identity(2, 2)).inverse()).trace() / (4 * t);
    CHECK(std::abs(mean - expected) < 3 * se);
}

TEST_CASE("optimal Gaussian drift beats affine perturbations of itself") {
    const auto g = make_prior();
    Rng rng(23);
    const int n = 100000;
    std::vector<InterpolantSample> samples;
    samples.reserve(n);
    for (int i = 0; i < n; ++i) samples.push_back(draw_pair(g, sample_training_time(rng), rng));
    auto loss = [&](const Mat& a, const Vec& c) {
        double total = 0.0;
        for (const auto& s : samples) {
            const Vec b = gaussian::gaussian_flow_drift(s.t, s.i_t, g.prior) + a * s.i_t + c;
            total += drift_residual(b, s);
        }
        return total / n;
    };
    const double best = loss(Mat::Zero(2, 2), Vec::Zero(2));
    Vec c(2);
    c << 0.1, -0.05;
    CHECK(best < loss(Mat::Zero(2, 2), c));
    CHECK(best < loss(0.05 * Mat::Identity(2, 2), Vec::Zero(2)));
    Mat a(2, 2);
    a << 0.0, 0.1, -0.1, 0.02;
    CHECK(best < loss(a, c));
}

TEST_CASE("training times avoid the endpoints") {
    Rng rng(4);
    for (int i = 0; i < 10000; ++i) {
        const double t = sample_training_time(rng, 1e-3);
        CHECK(t >= 1e-3);
        CHECK(t <= 1.0 - 1e-3);
    }
}

TEST_CASE("schedule names") {
    CHECK(parse_schedule_kind("ode-linear") == ScheduleKind::OdeLinear);
    CHECK(parse_schedule_kind("sde-linear") == ScheduleKind::SdeLinear);
    CHECK(parse_schedule_kind("sqrt-awgn") == ScheduleKind::SqrtAwgn);
    CHECK_THROWS_AS(parse_schedule_kind("cubic"), Error);
    CHECK_THROWS_AS(Schedule::make(ScheduleKind::SdeLinear, -1.0), Error);
}
