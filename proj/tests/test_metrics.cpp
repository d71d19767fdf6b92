#include "scsi/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

using namespace scsi;

namespace {

double brute_force_w2sq(const Batch& a, const Batch& b) {
    std::vector<int> perm(static_cast<std::size_t>(a.cols()));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double c = 0.0;
        for (Eigen::Index i = 0; i < a.cols(); ++i) c += (a.col(i) - b.col(perm[i])).squaredNorm();
        best = std::min(best, c / a.cols());
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

TEST_CASE("exact W2 on trivial inputs") {
    Rng rng(1);
    const Batch a = standard_normal_mat(3, 40, rng);
    Batch shuffled = a;
    std::vector<int> idx(40);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int j = 0; j < 40; ++j) shuffled.col(j) = a.col(idx[j]);
    CHECK(w2sq_exact(SampleSet(a), SampleSet(shuffled)) == doctest::Approx(0.0));
    CHECK(w2sq_exact(SampleSet(Batch::Zero(1, 1)), SampleSet(Batch::Ones(1, 1))) == 1.0);
    CHECK_THROWS_AS(w2sq_exact(SampleSet(a), SampleSet(a.leftCols(39))), Error);
}

TEST_CASE("assignment matches brute force on small problems") {
    Rng rng(2);
    for (int rep = 0; rep < 30; ++rep) {
        const int n = 1 + rep % 7;
        const Batch a = standard_normal_mat(2, n, rng), b = standard_normal_mat(2, n, rng);
        CHECK(w2sq_exact(SampleSet(a), SampleSet(b)) ==
              doctest::Approx(brute_force_w2sq(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("symmetry and translation") {
    Rng rng(3);
    const Batch a = standard_normal_mat(2, 60, rng), b = 1.5 * standard_normal_mat(2, 60, rng);
    const double ab = w2sq_exact(SampleSet(a), SampleSet(b));
    CHECK(ab == doctest::Approx(w2sq_exact(SampleSet(b), SampleSet(a))).epsilon(1e-12));
    Vec v(2);
    v << 0.7, -2.0;
    const Batch as = a.colwise() + v, bs = b.colwise() + v;
    CHECK(w2sq_exact(SampleSet(as), SampleSet(bs)) == doctest::Approx(ab).epsilon(1e-10));
    CHECK(w2sq_exact(SampleSet(a), SampleSet(as)) == doctest::Approx(v.squaredNorm()).epsilon(1e-10));

    Rng r1(5), r2(5), r3(5);
    const double s_ab = w2_sliced(SampleSet(a), SampleSet(b), 50, r1);
    CHECK(s_ab == doctest::Approx(w2_sliced(SampleSet(b), SampleSet(a), 50, r2)).epsilon(1e-12));
    CHECK(w2_sliced(SampleSet(as), SampleSet(bs), 50, r3) == doctest::Approx(s_ab).epsilon(1e-10));
}

TEST_CASE("sliced W2 basics") {
    Rng rng(4);
    const Batch a = standard_normal_mat(3, 100, rng);
    CHECK(w2_sliced(SampleSet(a), SampleSet(a), 20, rng) == 0.0);
    const Batch x = standard_normal_mat(1, 200, rng), y = standard_normal_mat(1, 200, rng);
    const double exact = w2sq_exact(SampleSet(x), SampleSet(y));
    CHECK(w2_sliced(SampleSet(x), SampleSet(y), 1, rng) == doctest::Approx(exact).epsilon(1e-12));
    CHECK(w2_sliced(SampleSet(x), SampleSet(y), 13, rng) == doctest::Approx(exact).epsilon(1e-12));
    const Batch b = 2.0 * standard_normal_mat(3, 100, rng);
    CHECK(w2_sliced(SampleSet(a), SampleSet(b), 10, rng) >= 0.0);
    // Unequal sizes through quantiles.
    CHECK(w2_sliced(SampleSet(a), SampleSet(b.leftCols(37)), 10, rng) >= 0.0);
}

TEST_CASE("sliced W2 variance shrinks like 1/m") {
    Rng rng(6);
    const Batch a = standard_normal_mat(3, 200, rng);
    Batch b = standard_normal_mat(3, 200, rng);
    b.row(0) *= 3.0;
    auto spread = [&](int m) {
        double s = 0.0, s2 = 0.0;
        const int reps = 200;
        for (int r = 0; r < reps; ++r) {
            const double v = w2_sliced(SampleSet(a), SampleSet(b), m, rng);
            s += v;
            s2 += v * v;
        }
        const double mean = s / reps;
        return std::pair{mean, s2 / reps - mean * mean};
    };
    const auto [m10, v10] = spread(10);
    const auto [m1000, v1000] = spread(1000);
    const double ratio = v10 / v1000;
    CHECK(ratio > 40.0);
    CHECK(ratio < 250.0);
    CHECK(std::abs(m10 - m1000) < 4 * std::sqrt(v10 / 200));
}

TEST_CASE("summary statistics") {
    Batch x(2, 3);
    x << 1, 2, 3, 0, 0, 3;
    CHECK(sample_mean(x)[0] == doctest::Approx(2.0));
    CHECK(sample_mean(x)[1] == doctest::Approx(1.0));
    const Mat c = sample_covariance(x);
    CHECK(c(0, 0) == doctest::Approx(1.0));
    CHECK(c(0, 1) == doctest::Approx(1.5));
    CHECK(c(1, 1) == doctest::Approx(3.0));
}

TEST_CASE("SampleSet invariants") {
    CHECK_THROWS_AS(SampleSet(Batch(2, 0)), Error);
    Batch bad = Batch::Zero(2, 2);
    bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(SampleSet{bad}, Error);
    CHECK_THROWS_AS(w2sq_exact(SampleSet(Batch::Zero(1, 4097)), SampleSet(Batch::Zero(1, 4097))),
                    Error);
}
