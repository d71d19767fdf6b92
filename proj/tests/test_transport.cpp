#include "scsi/gaussian.hpp"
#include "scsi/metrics.hpp"
#include "scsi/transport.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace scsi;
using gaussian::GaussianModel;

namespace {

BatchField zero_field() {
    return [](double, const Batch& x, const Batch&) { return Batch(Batch::Zero(x.rows(), x.cols())); };
}

GaussianModel test_prior() {
    Mat s(2, 2);
    s << 1.2, 0.3, 0.3, 0.5;
    Vec b(2);
    b << 0.4, -0.2;
    return GaussianModel(b, s);
}

// Probability-flow drift of the unit-AWGN interpolant x + sqrt(t) w: b = -score / 2.
BatchField flow_field(const GaussianModel& m) {
    const Mat s = m.cov;
    const Vec b = m.mean;
    return [s, b](double t, const Batch& x, const Batch&) {
        const Mat a = (s + t * Mat::Identity(s.rows(), s.cols())).inverse();
        return Batch(0.5 * a * (x.colwise() - b));
    };
}

BatchField score_field(const GaussianModel& m) {
    const Mat s = m.cov;
    const Vec b = m.mean;
    return [s, b](double t, const Batch& x, const Batch&) {
        const Mat a = (s + t * Mat::Identity(s.rows(), s.cols())).inverse();
        return Batch(-a * (x.colwise() - b));
    };
}

Vec exact_map(const GaussianModel& m, double eps, const Vec& y) {
    return m.mean + gaussian::solution_map(m.cov, eps, 1.0, 0.0) * (y - m.mean);
}

TransportConfig ode(int steps, OdeScheme scheme = OdeScheme::Heun) {
    TransportConfig c;
    c.steps = steps;
    c.scheme = scheme;
    return c;
}

Mat empirical_cov(const Batch& x) {
    const Batch c = x.colwise() - x.rowwise().mean();
    return c * c.transpose() / static_cast<double>(x.cols() - 1);
}

}  // namespace

TEST_CASE("zero drift is the identity flow") {
    Rng rng(1);
    const Batch y = standard_normal_mat(3, 10, rng);
    CHECK(integrate_ode(zero_field(), y, Batch(), ode(64)) == y);
    TransportFields f{zero_field(), {}};
    CHECK(pushforward(f, y, Batch(), rng, ode(64), Schedule::ode_linear()) == y);
}

TEST_CASE("linear drift matches the exponential solution") {
    const BatchField lin = [](double, const Batch& x, const Batch&) { return x; };
    const Vec out = integrate_ode(lin, Vec::Ones(1), ode(64));
    CHECK(std::abs(out[0] - std::exp(-1.0)) < 1e-3);
}

TEST_CASE("Heun on the Gaussian flow field reproduces the linear solution map") {
    const auto m = test_prior();
    Rng rng(2);
    for (int rep = 0; rep < 10; ++rep) {
        const Vec y = m.mean + 2.0 * standard_normal_vec(2, rng);
        const Vec out = integrate_ode(flow_field(m), y, ode(256));
        CHECK((out - exact_map(m, 0.0, y)).cwiseAbs().maxCoeff() < 1e-2);
    }
}

TEST_CASE("convergence orders of Euler and Heun") {
    const auto m = test_prior();
    Vec y(2);
    y << 2.0, -1.5;
    auto cfg_ref = ode(4096);
    const Vec ref = integrate_ode(flow_field(m), y, cfg_ref);
    for (auto [scheme, order] : {std::pair{OdeScheme::Euler, 1.0}, std::pair{OdeScheme::Heun, 2.0}}) {
        const double e1 = (integrate_ode(flow_field(m), y, ode(32, scheme)) - ref).norm();
        const double e2 = (integrate_ode(flow_field(m), y, ode(64, scheme)) - ref).norm();
        const double e3 = (integrate_ode(flow_field(m), y, ode(128, scheme)) - ref).norm();
        const double p12 = std::log2(e1 / e2), p23 = std::log2(e2 / e3);
        CAPTURE(to_string(scheme));
        CHECK(std::abs(p12 - order) < 0.25);
        CHECK(std::abs(p23 - order) < 0.25);
    }
}

TEST_CASE("SDE with zero epsilon follows the Euler ODE path") {
    Rng rng(3);
    const auto m = test_prior();
    const Batch y = standard_normal_mat(2, 8, rng);
    const BatchField g = [](double, const Batch& x, const Batch&) { return Batch(x.array().sin()); };
    TransportConfig c = ode(50, OdeScheme::Euler);
    const Batch a = integrate_ode(flow_field(m), y, Batch(), c);
    c.mode = TransportMode::Sde;
    c.epsilon = 0.0;
    const Batch b = integrate_sde(flow_field(m), g, y, Batch(), rng, c, Schedule::sde_linear());
    CHECK(a == b);
}

TEST_CASE("pure Brownian terminal variance") {
    Rng rng(4);
    TransportConfig c;
    c.mode = TransportMode::Sde;
    c.epsilon = 0.1;
    c.steps = 64;
    const int n = 100000;
    const Batch out = integrate_sde(zero_field(), zero_field(), Batch::Zero(1, n), Batch(), rng, c,
                                    Schedule::sde_linear());
    const double var = empirical_cov(out)(0, 0);
    const double expected = 2 * 0.1 * (1 - 2 * c.t_min);
    CHECK(std::abs(var - expected) < 3 * expected * std::sqrt(2.0 / n));
}

TEST_CASE("gamma-proportional epsilon scales the Brownian variance") {
    Rng rng(5);
    TransportConfig c;
    c.mode = TransportMode::Sde;
    c.epsilon = 0.5;
    c.epsilon_mode = EpsilonMode::ProportionalToGamma;
    c.steps = 200;
    const auto sched = Schedule::sde_linear();
    const int n = 100000;
    const Batch out =
        integrate_sde(zero_field(), zero_field(), Batch::Zero(1, n), Batch(), rng, c, sched);
    // 2c * sum of gamma over the left-point grid times h.
    const double h = (c.t_start() - c.t_end()) / c.steps;
    double expected = 0.0;
    for (int k = 0; k < c.steps; ++k) expected += 2 * c.epsilon * sched.gamma(c.t_start() - k * h) * h;
    CHECK(std::abs(expected - 2 * 0.5 / 6.0) < 2e-3);
    const double var = empirical_cov(out)(0, 0);
    CHECK(std::abs(var - expected) < 3 * expected * std::sqrt(2.0 / n));
}

TEST_CASE("reverse SDE on the Gaussian score matches the closed-form law") {
    // Drift -(1 + eps)/2 score with noise sqrt(eps) dW: in integrator form b = -score / 2 with
    // score multiplier eps / 2.
    const auto m = test_prior();
    Vec y(2);
    y << 1.5, 0.7;
    for (double eps : {0.5, 1.0}) {
        Rng rng(6);
        TransportConfig c;
        c.mode = TransportMode::Sde;
        c.epsilon = eps / 2;
        c.steps = 1000;
        c.t_min = 0.0;
        const int n = 100000;
        const Batch out = integrate_sde_score(flow_field(m), score_field(m),
                                              y.replicate(1, n), Batch(), rng, c);
        // Noise covariance eps * int_0^1 Phi(1,s) Phi(1,s)^T ds by composite Simpson.
        const int q = 2000;
        Mat noise = Mat::Zero(2, 2);
        for (int i = 0; i <= q; ++i) {
            const double s = static_cast<double>(i) / q;
            const Mat p = gaussian::solution_map(m.cov, eps, 1.0, s);
            const double w = (i == 0 || i == q) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            noise += w * p * p.transpose();
        }
        noise *= eps / (3.0 * q);
        const Vec mean = out.rowwise().mean();
        const Mat cov = empirical_cov(out);
        const Vec mean_exact = exact_map(m, eps, y);
        CAPTURE(eps);
        CHECK((mean - mean_exact).norm() < 0.02 * mean_exact.norm());
        CHECK((cov - noise).norm() < 0.02 * noise.norm());
    }
}

TEST_CASE("SDE refuses a noiseless schedule") {
    Rng rng(7);
    TransportConfig c;
    c.mode = TransportMode::Sde;
    c.epsilon = 0.1;
    CHECK_THROWS_AS(integrate_sde(zero_field(), zero_field(), Batch::Zero(1, 2), Batch(), rng, c,
                                  Schedule::ode_linear()),
                    Error);
    c.t_min = 0.0;
    CHECK_THROWS_AS(integrate_sde(zero_field(), zero_field(), Batch::Zero(1, 2), Batch(), rng, c,
                                  Schedule::sde_linear()),
                    Error);
}

TEST_CASE("integration stays inside the clamped window") {
    Rng rng(8);
    TransportConfig c;
    c.mode = TransportMode::Sde;
    c.epsilon = 0.1;
    c.steps = 17;
    double lo = 1.0, hi = 0.0;
    const BatchField g = [&](double t, const Batch& x, const Batch&) {
        lo = std::min(lo, t);
        hi = std::max(hi, t);
        return Batch(Batch::Zero(x.rows(), x.cols()));
    };
    integrate_sde(zero_field(), g, Batch::Zero(1, 3), Batch(), rng, c, Schedule::sde_linear());
    CHECK(lo >= c.t_min);
    CHECK(hi <= 1.0 - c.t_min);
    CHECK(hi == doctest::Approx(1.0 - c.t_min));
}

TEST_CASE("non-finite states report step and sample") {
    Rng rng(9);
    const BatchField blow = [](double, const Batch& x, const Batch&) {
        Batch d = Batch::Zero(x.rows(), x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            if (x(0, j) > 5.0) d(0, j) = -std::numeric_limits<double>::infinity();
        return d;
    };
    Batch y = Batch::Zero(1, 6);
    y(0, 4) = 10.0;
    TransportConfig c = ode(8, OdeScheme::Euler);
    c.threads = 3;
    try {
        pushforward(TransportFields{blow, {}}, y, Batch(), rng, c, Schedule::ode_linear());
        FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
        CHECK(e.step() == 0);
        CHECK(e.sample() == 4);
    }
}

TEST_CASE("pushforward: single column, order and threads") {
    const auto m = test_prior();
    Rng rng(10);
    const Batch y = standard_normal_mat(2, 9, rng);
    const TransportFields f{flow_field(m), {}};
    const auto sched = Schedule::ode_linear();
    const Batch all = pushforward(f, y, Batch(), rng, ode(32), sched);
    CHECK(pushforward(f, y.col(3), Batch(), rng, ode(32), sched) == all.col(3));

    // Permutation equivariance.
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(9);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 9, rng);
    const Batch permuted = pushforward(f, y * perm, Batch(), rng, ode(32), sched);
    CHECK((permuted - all * perm).cwiseAbs().maxCoeff() < 1e-14);

    // SDE results do not depend on the worker count.
    TransportConfig c;
    c.mode = TransportMode::Sde;
    c.epsilon = 0.1;
    const TransportFields fs{flow_field(m), score_field(m)};
    Rng a(42), b(42);
    c.threads = 1;
    const Batch one = pushforward(fs, y, Batch(), a, c, Schedule::sde_linear());
    c.threads = 4;
    const Batch four = pushforward(fs, y, Batch(), b, c, Schedule::sde_linear());
    CHECK(one == four);
}

TEST_CASE("pushforward error shrinks with the step count") {
    // Observations y ~ N(b, S + I), Euler on the flow field, compared with the exact map of the
    // same y: discretization error only.
    const auto m = test_prior();
    Rng rng(11);
    const int n = 400;
    const Mat lobs = Mat((m.cov + Mat::Identity(2, 2)).llt().matrixL());
    const Batch y = (lobs * standard_normal_mat(2, n, rng)).colwise() + m.mean;
    Batch exact(2, n);
    for (int j = 0; j < n; ++j) exact.col(j) = exact_map(m, 0.0, y.col(j));
    auto w2_at = [&](int steps) {
        TransportConfig c = ode(steps, OdeScheme::Euler);
        c.t_min = 0.0;
        const Batch out = pushforward(TransportFields{flow_field(m), {}}, y, Batch(), rng, c,
                                      Schedule::ode_linear());
        return w2sq_exact(SampleSet(out), SampleSet(exact));
    };
    const double w64 = w2_at(64), w512 = w2_at(512);
    CHECK(w512 < w64);
    CHECK(w512 < w64 / 16);
}

TEST_CASE("transport config validation and names") {
    TransportConfig c;
    c.steps = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c.steps = 10;
    c.mode = TransportMode::Sde;
    c.epsilon = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c.epsilon = 0.1;
    CHECK_NOTHROW(c.validate());
    c.t_min = 0.6;
    CHECK_THROWS_AS(c.validate(), Error);
    CHECK(parse_transport_mode("sde") == TransportMode::Sde);
    CHECK(parse_ode_scheme("euler") == OdeScheme::Euler);
    CHECK(parse_epsilon_mode("gamma") == EpsilonMode::ProportionalToGamma);
    CHECK_THROWS_AS(parse_ode_scheme("rk4"), Error);
}
