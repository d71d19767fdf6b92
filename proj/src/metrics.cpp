#include "scsi/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace scsi {

SampleSet::SampleSet(Batch pts, std::string lbl) : points(std::move(pts)), label(std::move(lbl)) {
    if (points.cols() < 1) throw Error("sample set needs at least one point");
    if (!points.allFinite()) throw Error("sample set has non-finite entries");
}

double w2sq_exact(const SampleSet& a, const SampleSet& b) {
    if (a.size() != b.size()) throw Error("exact W2 needs sample sets of equal size");
    if (a.dim() != b.dim()) throw Error("exact W2 needs sample sets of equal dimension");
    if (a.size() > kMaxExactW2Size)
        throw Error("exact W2 is limited to " + std::to_string(kMaxExactW2Size) + " points");
    const Batch& pa = a.points;
    const Batch& pb = b.points;
    auto cost = [&](Eigen::Index i, Eigen::Index j) { return (pa.col(i) - pb.col(j)).squaredNorm(); };
    const auto match = solve_assignment(a.size(), cost);
    double total = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) total += cost(i, match[static_cast<std::size_t>(i)]);
    return total / static_cast<double>(a.size());
}

double w2sq_1d(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw Error("1-D W2 needs nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a.size() == b.size()) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return s / static_cast<double>(a.size());
    }
    // Integrate (F_a^{-1} - F_b^{-1})^2 over the merged breakpoints of both step functions.
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double q = 0.0, s = 0.0;
    while (i < a.size() && j < b.size()) {
        const double next = std::min((i + 1) / na, (j + 1) / nb);
        s += (next - q) * (a[i] - b[j]) * (a[i] - b[j]);
        q = next;
        if ((i + 1) / na <= next) ++i;
        if ((j + 1) / nb <= next) ++j;
    }
    return s;
}

double w2_sliced(const SampleSet& a, const SampleSet& b, int n_projections, Rng& rng) {
    if (a.dim() != b.dim()) throw Error("sliced W2 needs sample sets of equal dimension");
    if (n_projections < 1) throw Error("sliced W2 needs at least one projection");
    double total = 0.0;
    std::vector<double> pa(static_cast<std::size_t>(a.size())), pb(static_cast<std::size_t>(b.size()));
    for (int k = 0; k < n_projections; ++k) {
        Vec dir = standard_normal_vec(a.dim(), rng);
        dir /= dir.norm();
        const Eigen::RowVectorXd projected_a = dir.transpose() * a.points;
        const Eigen::RowVectorXd projected_b = dir.transpose() * b.points;
        std::copy(projected_a.begin(), projected_a.end(), pa.begin());
        std::copy(projected_b.begin(), projected_b.end(), pb.begin());
        total += w2sq_1d(pa, pb);
    }
    return total / n_projections;
}

Vec sample_mean(const Batch& pts) { return pts.rowwise().mean(); }

Mat sample_covariance(const Batch& pts) {
    const Batch centered = pts.colwise() - sample_mean(pts);
    return centered * centered.transpose() / static_cast<double>(std::max<Eigen::Index>(1, pts.cols() - 1));
}

}  // namespace scsi
