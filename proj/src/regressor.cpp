#include "scsi/regressor.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace scsi {

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::Relu;
    if (name == "gelu") return Activation::Gelu;
    if (name == "tanh") return Activation::Tanh;
    throw Error("unknown activation '" + std::string(name) + "' (expected relu, gelu or tanh)");
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Gelu: return "gelu";
        case Activation::Tanh: return "tanh";
    }
    return "?";
}

std::vector<int> RegressorConfig::widths() const {
    std::vector<int> w;
    w.push_back(input_dim());
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(data_dim);
    return w;
}

Mat time_embedding(const Vec& t, int dim, double max_frequency) {
    if (dim < 0 || dim % 2 != 0) throw Error("time embedding dimension must be even");
    const int half = dim / 2;
    Vec omega(half);
    for (int k = 0; k < half; ++k) {
        const double frac = half > 1 ? static_cast<double>(k) / (half - 1) : 0.0;
        omega[k] = std::numbers::pi * std::pow(max_frequency, frac);
    }
    Mat e(dim, t.size());
    for (Eigen::Index j = 0; j < t.size(); ++j) {
        // Transport batches share one time; reuse the previous column.
        if (j > 0 && t[j] == t[j - 1]) {
            e.col(j) = e.col(j - 1);
            continue;
        }
        for (int k = 0; k < half; ++k) {
            e(k, j) = std::cos(omega[k] * t[j]);
            e(half + k, j) = std::sin(omega[k] * t[j]);
        }
    }
    return e;
}

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void activate(Activation a, const Mat& z, Mat& h) {
    switch (a) {
        case Activation::Relu: h = z.cwiseMax(0.0); break;
        case Activation::Tanh: h = z.array().tanh().matrix(); break;
        case Activation::Gelu:
            h = z.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); });
            break;
    }
}

// dL/dz given dL/dh, pre-activation z and post-activation h.
void activate_backward(Activation a, const Mat& z, const Mat& h, Mat& grad) {
    switch (a) {
        case Activation::Relu:
            grad = grad.cwiseProduct(z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
            break;
        case Activation::Tanh:
            grad = grad.cwiseProduct((1.0 - h.array().square()).matrix());
            break;
        case Activation::Gelu:
            grad = grad.cwiseProduct(z.unaryExpr([](double v) {
                return 0.5 * (1.0 + std::erf(v * kInvSqrt2)) +
                       v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
            }));
            break;
    }
}

}  // namespace

Regressor::Regressor(RegressorConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.data_dim < 1) throw Error("regressor data dimension must be positive");
    if (cfg_.latent_dim < 0) throw Error("regressor latent dimension must be nonnegative");
    if (cfg_.time_embed_dim < 0 || cfg_.time_embed_dim % 2 != 0)
        throw Error("time embedding dimension must be even");
    const auto w = cfg_.widths();
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
        if (w[l + 1] < 1) throw Error("layer widths must be positive");
        weights_.push_back(Mat::Zero(w[l + 1], w[l]));
        biases_.push_back(Vec::Zero(w[l + 1]));
    }
}

Regressor Regressor::random(RegressorConfig cfg, Rng& rng, double output_scale) {
    Regressor r(std::move(cfg));
    for (std::size_t l = 0; l < r.weights_.size(); ++l) {
        Mat& W = r.weights_[l];
        const double limit = std::sqrt(6.0 / static_cast<double>(W.rows() + W.cols()));
        std::uniform_real_distribution<double> u(-limit, limit);
        for (Eigen::Index j = 0; j < W.cols(); ++j)
            for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = u(rng);
        if (l + 1 == r.weights_.size()) W *= output_scale;
    }
    return r;
}

Mat Regressor::assemble_input(const Batch& x, const Vec& t, const Batch& latent) const {
    if (x.rows() != cfg_.data_dim) throw Error("regressor input has wrong dimension");
    if (t.size() != x.cols()) throw Error("regressor needs one time per sample");
    const bool has_latent = latent.size() > 0;
    if (cfg_.latent_dim > 0 && (!has_latent || latent.rows() != cfg_.latent_dim ||
                                latent.cols() != x.cols()))
        throw Error("regressor latent has wrong shape");
    if (cfg_.latent_dim == 0 && has_latent) throw Error("regressor takes no latent input");
    Mat in(cfg_.input_dim(), x.cols());
    in.topRows(cfg_.data_dim) = x;
    if (cfg_.time_embed_dim > 0)
        in.middleRows(cfg_.data_dim, cfg_.time_embed_dim) =
            time_embedding(t, cfg_.time_embed_dim, cfg_.max_frequency);
    if (cfg_.latent_dim > 0) in.bottomRows(cfg_.latent_dim) = latent;
    return in;
}

Batch Regressor::forward(const Batch& x, const Vec& t, const Batch& latent) const {
    Mat h = assemble_input(x, t, latent);
    Mat z;
    const std::size_t L = weights_.size();
    for (std::size_t l = 0; l < L; ++l) {
        z.noalias() = weights_[l] * h;
        z.colwise() += biases_[l];
        if (l + 1 < L) {
            activate(cfg_.activation, z, h);
        } else {
            h.swap(z);
        }
    }
    return h;
}

Vec Regressor::forward(const Vec& x, double t, const Vec& latent) const {
    Vec tv(1);
    tv[0] = t;
    Batch lat = latent.size() > 0 ? Batch(latent) : Batch();
    return forward(Batch(x), tv, lat).col(0);
}

Vec Regressor::backward(const Batch& x, const Vec& t, const Batch& latent,
                        const Batch& dout) const {
    const std::size_t L = weights_.size();
    if (dout.rows() != cfg_.data_dim || dout.cols() != x.cols())
        throw Error("output gradient has wrong shape");
    std::vector<Mat> hs(L + 1), zs(L);
    hs[0] = assemble_input(x, t, latent);
    for (std::size_t l = 0; l < L; ++l) {
        zs[l].noalias() = weights_[l] * hs[l];
        zs[l].colwise() += biases_[l];
        if (l + 1 < L) activate(cfg_.activation, zs[l], hs[l + 1]);
    }
    Vec grad(parameter_count());
    std::vector<Eigen::Index> offset(L);
    Eigen::Index off = 0;
    for (std::size_t l = 0; l < L; ++l) {
        offset[l] = off;
        off += weights_[l].size() + biases_[l].size();
    }
    Mat g = dout;
    for (std::size_t l = L; l-- > 0;) {
        if (l + 1 < L) activate_backward(cfg_.activation, zs[l], hs[l + 1], g);
        const Eigen::Index nw = weights_[l].size();
        Eigen::Map<Mat> gw(grad.data() + offset[l], weights_[l].rows(), weights_[l].cols());
        gw.noalias() = g * hs[l].transpose();
        grad.segment(offset[l] + nw, biases_[l].size()) = g.rowwise().sum();
        if (l > 0) {
            Mat prev = weights_[l].transpose() * g;
            g.swap(prev);
        }
    }
    return grad;
}

Eigen::Index Regressor::parameter_count() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
    return n;
}

Vec Regressor::parameters() const {
    Vec p(parameter_count());
    Eigen::Index off = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        p.segment(off, weights_[l].size()) = weights_[l].reshaped();
        off += weights_[l].size();
        p.segment(off, biases_[l].size()) = biases_[l];
        off += biases_[l].size();
    }
    return p;
}

void Regressor::set_parameters(const Vec& p) {
    if (p.size() != parameter_count()) throw Error("parameter vector has wrong length");
    Eigen::Index off = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        weights_[l].reshaped() = p.segment(off, weights_[l].size());
        off += weights_[l].size();
        biases_[l] = p.segment(off, biases_[l].size());
        off += biases_[l].size();
    }
}

double OptimizerState::learning_rate(long s) const {
    if (cfg.warmup_steps > 0 && s < cfg.warmup_steps)
        return cfg.lr * static_cast<double>(s) / static_cast<double>(cfg.warmup_steps);
    if (cfg.total_steps <= cfg.warmup_steps) return cfg.lr;
    const double progress = std::min(
        1.0, static_cast<double>(s - cfg.warmup_steps) /
                 static_cast<double>(cfg.total_steps - cfg.warmup_steps));
    const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    return cfg.lr * (cfg.min_lr_ratio + (1.0 - cfg.min_lr_ratio) * cosine);
}

void adam_step(Vec& params, OptimizerState& opt, const Vec& grad) {
    if (params.size() != grad.size() || opt.m.size() != params.size() ||
        opt.v.size() != params.size())
        throw Error("adam: parameter, gradient and moment shapes differ");
    const auto& c = opt.cfg;
    const double lr = opt.learning_rate(opt.step);
    ++opt.step;
    opt.m = c.beta1 * opt.m + (1.0 - c.beta1) * grad;
    opt.v = c.beta2 * opt.v + (1.0 - c.beta2) * grad.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(opt.step));
    params.array() -= lr * (opt.m.array() / bc1) / ((opt.v.array() / bc2).sqrt() + c.eps);
}

namespace {

constexpr char kMagic[8] = {'S', 'C', 'S', 'I', 'C', 'K', 'P', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Regressor& model, long step) {
    const auto& c = model.config();
    nlohmann::json manifest = {
        {"format", "scsi-regressor"},
        {"version", 1},
        {"widths", c.widths()},
        {"hidden", c.hidden},
        {"data_dim", c.data_dim},
        {"latent_dim", c.latent_dim},
        {"activation", to_string(c.activation)},
        {"time_embed_dim", c.time_embed_dim},
        {"max_frequency", c.max_frequency},
        {"step", step},
        {"parameter_count", model.parameter_count()},
    };
    const std::string text = manifest.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open checkpoint for writing: " + path.string());
    out.write(kMagic, sizeof kMagic);
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    const Vec p = model.parameters();
    out.write(reinterpret_cast<const char*>(p.data()),
              static_cast<std::streamsize>(p.size() * sizeof(double)));
    if (!out) throw Error("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint: " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw Error("not a regressor checkpoint: " + path.string());
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || len > (1u << 20)) throw Error("corrupt checkpoint manifest: " + path.string());
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    const auto manifest = nlohmann::json::parse(text);
    RegressorConfig cfg;
    cfg.data_dim = manifest.at("data_dim").get<int>();
    cfg.latent_dim = manifest.at("latent_dim").get<int>();
    cfg.hidden = manifest.at("hidden").get<std::vector<int>>();
    cfg.activation = parse_activation(manifest.at("activation").get<std::string>());
    cfg.time_embed_dim = manifest.at("time_embed_dim").get<int>();
    cfg.max_frequency = manifest.at("max_frequency").get<double>();
    Checkpoint ck{Regressor(cfg), manifest.at("step").get<long>()};
    const auto n = manifest.at("parameter_count").get<Eigen::Index>();
    if (n != ck.model.parameter_count()) throw Error("checkpoint parameter count mismatch");
    Vec p(n);
    in.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw Error("truncated checkpoint: " + path.string());
    ck.model.set_parameters(p);
    return ck;
}

}  // namespace scsi
