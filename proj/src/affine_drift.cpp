#include "scsi/affine_drift.hpp"

namespace scsi {

AffineGaussianDrift::AffineGaussianDrift(const gaussian::GaussianModel& m)
    : mean_(m.mean), p_(m.cov) {}

Batch AffineGaussianDrift::forward(const Batch& x, const Vec& t, const Batch&) const {
    const auto d = mean_.size();
    if (x.rows() != d || t.size() != x.cols()) throw Error("affine drift: input has wrong shape");
    const Mat s = cov();
    Batch out(d, x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const Mat a = s + t[j] * Mat::Identity(d, d);
        out.col(j) = 0.5 * a.partialPivLu().solve(x.col(j) - mean_);
    }
    return out;
}

Vec AffineGaussianDrift::backward(const Batch& x, const Vec& t, const Batch&,
                                  const Batch& dout) const {
    // out = 1/2 A^{-1} u, u = x - m, A = S + tI:
    //   dL/dm = -1/2 A^{-1} r,  dL/dA = -1/2 (A^{-1} r)(A^{-1} u)^T,  dL/dP = sym(dL/dA).
    const auto d = mean_.size();
    const Mat s = cov();
    Vec gm = Vec::Zero(d);
    Mat ga = Mat::Zero(d, d);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const auto lu = (s + t[j] * Mat::Identity(d, d)).partialPivLu();
        const Vec ar = lu.solve(Vec(dout.col(j)));
        const Vec au = lu.solve(Vec(x.col(j) - mean_));
        gm -= 0.5 * ar;
        ga -= 0.5 * ar * au.transpose();
    }
    Vec g(d + d * d);
    g.head(d) = gm;
    g.tail(d * d) = (0.5 * (ga + ga.transpose())).reshaped();
    return g;
}

Vec AffineGaussianDrift::parameters() const {
    const auto d = mean_.size();
    Vec p(d + d * d);
    p.head(d) = mean_;
    p.tail(d * d) = p_.reshaped();
    return p;
}

void AffineGaussianDrift::set_parameters(const Vec& p) {
    const auto d = mean_.size();
    if (p.size() != d + d * d) throw Error("affine drift: parameter vector has wrong length");
    mean_ = p.head(d);
    p_.reshaped() = p.tail(d * d);
}

}  // namespace scsi
