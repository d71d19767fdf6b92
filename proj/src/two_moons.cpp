#include "scsi/two_moons.hpp"

#include <cmath>
#include <numbers>

namespace scsi {

Batch two_moons(Eigen::Index n, Rng& rng) {
    Batch pts(2, n);
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
    std::bernoulli_distribution lower(0.5);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double a = angle(rng);
        if (lower(rng)) {
            pts(0, j) = 1.0 - std::cos(a);
            pts(1, j) = 0.5 - std::sin(a);
        } else {
            pts(0, j) = std::cos(a);
            pts(1, j) = std::sin(a);
        }
    }
    return pts;
}

}  // namespace scsi
