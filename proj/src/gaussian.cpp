#include "scsi/gaussian.hpp"

#include <cmath>
#include <limits>

namespace scsi::gaussian {

namespace {

constexpr double kSymTol = 1e-10;

Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

Mat identity(Eigen::Index d) { return Mat::Identity(d, d); }

}  // namespace

GaussianModel::GaussianModel(Vec m, Mat c) : mean(std::move(m)), cov(std::move(c)) {
    if (cov.rows() != cov.cols() || cov.rows() != mean.size())
        throw Error("gaussian model: mean and covariance dimensions differ");
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kSymTol * scale)
        throw Error("gaussian model: covariance is not symmetric");
    cov = symmetrize(cov);
    MatrixFn fn(cov);
    if (fn.eigenvalues().minCoeff() < -kSymTol * scale)
        throw Error("gaussian model: covariance is not positive semidefinite");
    if (fn.eigenvalues().minCoeff() < 0.0) cov = fn.apply([](double v) { return std::max(v, 0.0); });
}

GaussianModel GaussianModel::centered(Mat cov) {
    const auto d = cov.rows();
    return GaussianModel(Vec::Zero(d), std::move(cov));
}

MatrixFn::MatrixFn(const Mat& a) {
    if (a.rows() != a.cols()) throw Error("matrix function needs a square matrix");
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a));
    if (es.info() != Eigen::Success) throw Error("symmetric eigendecomposition failed");
    values_ = es.eigenvalues();
    vectors_ = es.eigenvectors();
}

Mat MatrixFn::apply(const std::function<double(double)>& f) const {
    Vec fv = values_.unaryExpr(f);
    return vectors_ * fv.asDiagonal() * vectors_.transpose();
}

Mat MatrixFn::reconstruct() const { return vectors_ * values_.asDiagonal() * vectors_.transpose(); }

Mat MatrixFn::sqrt() const {
    return apply([](double v) { return std::sqrt(std::max(v, 0.0)); });
}

Mat MatrixFn::pow(double p) const {
    return apply([p](double v) { return std::pow(std::max(v, 0.0), p); });
}

Vec gaussian_score(double t, const Vec& x, const GaussianModel& m) {
    if (x.size() != m.dim()) throw Error("gaussian score: dimension mismatch");
    const Mat a = m.cov + t * identity(m.dim());
    Eigen::LDLT<Mat> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-14 * std::max(1.0, a.norm()))
        throw Error("gaussian score: cov + t I is singular");
    return -ldlt.solve(x - m.mean);
}

Vec gaussian_flow_drift(double t, const Vec& x, const GaussianModel& m) {
    return -0.5 * gaussian_score(t, x, m);
}

Mat solution_map_B(const Mat& cov, double eps) {
    const double p = 0.5 * (1.0 + eps);
    return MatrixFn(cov).apply([p](double v) {
        v = std::max(v, 0.0);
        return std::pow(v / (v + 1.0), p);
    });
}

Mat solution_map_B(const GaussianModel& m, double eps) { return solution_map_B(m.cov, eps); }

Mat solution_map(const Mat& cov, double eps, double t, double s) {
    const double p = 0.5 * (1.0 + eps);
    return MatrixFn(cov).apply([=](double v) {
        v = std::max(v, 0.0);
        return std::pow(v + 1.0 - t, p) * std::pow(v + 1.0 - s, -p);
    });
}

GaussianModel scsi_update(const GaussianModel& current, const GaussianModel& truth, double eps) {
    if (current.dim() != truth.dim()) throw Error("scsi update: dimension mismatch");
    const Mat B = solution_map_B(current, eps);
    GaussianModel next;
    next.mean = current.mean + B * (truth.mean - current.mean);
    next.cov = symmetrize(current.cov + B * (truth.cov - current.cov) * B);
    return next;
}

GaussianModel em_update(const GaussianModel& current, const GaussianModel& truth) {
    if (current.dim() != truth.dim()) throw Error("em update: dimension mismatch");
    if (current.mean.cwiseAbs().maxCoeff() != 0.0 || truth.mean.cwiseAbs().maxCoeff() != 0.0)
        throw Error("em update is defined for centered Gaussians only");
    const Mat M = MatrixFn(current.cov).apply([](double v) {
        v = std::max(v, 0.0);
        return v / (v + 1.0);
    });
    GaussianModel next;
    next.mean = Vec::Zero(current.dim());
    next.cov = symmetrize(current.cov + M * (truth.cov - current.cov) * M);
    return next;
}

Mat em_update_precision_form(const Mat& current_cov, const Mat& truth_cov) {
    const auto d = current_cov.rows();
    const Mat I = identity(d);
    const Mat inner = (truth_cov + I).inverse() - (current_cov + I).inverse() + I;
    const Mat precision = current_cov.inverse() + I - inner.inverse();
    return symmetrize(precision.inverse());
}

double rate_factor(double eta, double eps) {
    if (!(eta > 0.0)) throw Error("rate factor needs eta > 0");
    if (!(eps >= 0.0)) throw Error("rate factor needs eps >= 0");
    return 1.0 - std::pow(eta, 1.0 + eps) * std::pow(1.0 + eta, -1.0 - eps);
}

double gaussian_w2sq(const Mat& a, const Mat& b) {
    const Mat ah = MatrixFn(a).sqrt();
    const Mat cross = MatrixFn(ah * b * ah).sqrt();
    return std::max(0.0, (a + b - 2.0 * cross).trace());
}

double transport_cost(const Mat& a, const Mat& b, double eps) {
    const Mat diff = solution_map_B(a, eps) - solution_map_B(b, eps);
    return std::max(0.0, (diff * (a + identity(a.rows())) * diff).trace());
}

double gaussian_kl(const GaussianModel& p, const GaussianModel& q) {
    if (p.dim() != q.dim()) throw Error("gaussian kl: dimension mismatch");
    Eigen::LLT<Mat> lq(q.cov);
    if (lq.info() != Eigen::Success) throw Error("gaussian kl: q covariance is singular");
    Eigen::LLT<Mat> lp(p.cov);
    if (lp.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const auto d = static_cast<double>(p.dim());
    const Vec dm = q.mean - p.mean;
    const double trace = lq.solve(p.cov).trace();
    const double maha = dm.dot(lq.solve(dm));
    const Mat Lq = lq.matrixL();
    const Mat Lp = lp.matrixL();
    const double logdet_q = 2.0 * Lq.diagonal().array().log().sum();
    const double logdet_p = 2.0 * Lp.diagonal().array().log().sum();
    return std::max(0.0, 0.5 * (trace + maha - d + logdet_q - logdet_p));
}

ConditionRatio condition_ratio_check(const GaussianModel& truth, const GaussianModel& candidate) {
    const auto d = truth.dim();
    const Mat I = identity(d);
    const double lmin = lambda_min(truth.cov);
    if (!(lmin > 0.0)) throw Error("condition ratio needs a positive definite truth covariance");
    ConditionRatio r;
    r.bound = std::pow(1.0 + 1.0 / lmin, 2.0);
    const double num = gaussian_kl(GaussianModel::centered(truth.cov),
                                   GaussianModel::centered(candidate.cov));
    const double den = gaussian_kl(GaussianModel::centered(truth.cov + I),
                                   GaussianModel::centered(candidate.cov + I));
    r.ratio = den > 0.0 ? num / den : 1.0;
    return r;
}

Mat wishart_sample(int d, int dof, double scale, Rng& rng) {
    if (d < 1 || dof < d) throw Error("wishart sample needs dof >= d >= 1");
    const Mat G = standard_normal_mat(d, dof, rng);
    return symmetrize(scale * (G * G.transpose()) / static_cast<double>(dof));
}

double lambda_min(const Mat& a) { return MatrixFn(a).eigenvalues().minCoeff(); }

}  // namespace scsi::gaussian
