#pragma once

#include "scsi/common.hpp"

#include <limits>
#include <string>
#include <vector>

namespace scsi {

/// Empirical measure: one point per column.
struct SampleSet {
    Batch points;
    std::string label;

    SampleSet() = default;
    explicit SampleSet(Batch pts, std::string lbl = {});

    Eigen::Index size() const { return points.cols(); }
    Eigen::Index dim() const { return points.rows(); }
};

constexpr Eigen::Index kMaxExactW2Size = 4096;

/// Minimum-cost perfect matching for an n x n cost given by `cost(i, j)`;
/// returns assignment[i] = column matched to row i. O(n^3) shortest augmenting paths.
template <class Cost>
std::vector<Eigen::Index> solve_assignment(Eigen::Index n, Cost&& cost);

/// min over permutations of mean |a_i - b_sigma(i)|^2, equal sizes up to 4096.
double w2sq_exact(const SampleSet& a, const SampleSet& b);

/// Sliced squared W2: mean over random unit directions of the 1-D squared W2 (sorted matching).
/// Unequal sizes are compared through their quantile functions.
double w2_sliced(const SampleSet& a, const SampleSet& b, int n_projections, Rng& rng);

/// 1-D squared W2 between two samples via sorted matching.
double w2sq_1d(std::vector<double> a, std::vector<double> b);

Vec sample_mean(const Batch& pts);
Mat sample_covariance(const Batch& pts);

// ---------------------------------------------------------------------------

template <class Cost>
std::vector<Eigen::Index> solve_assignment(Eigen::Index n, Cost&& cost) {
    // Potentials u (rows), v (cols); p[j] = row matched to column j, 1-based with 0 as sentinel.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<Eigen::Index> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (Eigen::Index i = 1; i <= n; ++i) {
        p[0] = i;
        Eigen::Index j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const Eigen::Index i0 = p[j0];
            double delta = inf;
            Eigen::Index j1 = 0;
            for (Eigen::Index j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (Eigen::Index j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const Eigen::Index j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<Eigen::Index> assignment(n);
    for (Eigen::Index j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
    return assignment;
}

}  // namespace scsi
