#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace scsi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Column-major batches: one sample per column.
using Batch = Eigen::MatrixXd;

using Rng = std::mt19937_64;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by integrators and the trainer when a state goes non-finite.
class NonFiniteError : public Error {
public:
    NonFiniteError(const std::string& what, int step, int sample = -1)
        : Error(what), step_(step), sample_(sample) {}
    int step() const noexcept { return step_; }
    int sample() const noexcept { return sample_; }

private:
    int step_;
    int sample_;
};

inline double standard_normal(Rng& rng) {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline Vec standard_normal_vec(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(rng);
    return v;
}

inline Mat standard_normal_mat(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Mat m(rows, cols);
    // Column-major fill so that a batch of n columns reproduces n sequential vector draws.
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
    return m;
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Independent child stream derived from a root seed and a stream index.
inline Rng derive_rng(std::uint64_t root, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x5c51u};
    return Rng(seq);
}

}  // namespace scsi
