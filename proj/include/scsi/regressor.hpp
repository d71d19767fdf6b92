#pragma once

#include "scsi/common.hpp"
#include "scsi/schedule.hpp"

#include <concepts>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace scsi {

enum class Activation { Relu, Gelu, Tanh };

Activation parse_activation(std::string_view name);
std::string to_string(Activation a);

struct RegressorConfig {
    int data_dim = 2;
    int latent_dim = 0;
    std::vector<int> hidden = {128, 128, 128};
    Activation activation = Activation::Gelu;
    int time_embed_dim = 32;
    /// Angular frequencies of the time embedding span [pi, pi * max_frequency].
    double max_frequency = 2.0;

    int input_dim() const { return data_dim + time_embed_dim + latent_dim; }
    std::vector<int> widths() const;
};

/// Sinusoidal embedding of t, one column per entry of `t`.
Mat time_embedding(const Vec& t, int dim, double max_frequency);

/// Fully connected network f(x, t, latent) -> R^d on input [x | emb(t) | latent].
///
/// Batches are column-major. `backward` returns the gradient of sum_j <dout_j, f(x_j)>
/// with respect to the flat parameter vector: layer by layer, each W flattened column-major
/// and followed by its bias.
class Regressor {
public:
    Regressor() = default;
    explicit Regressor(RegressorConfig cfg);  // all-zero parameters

    /// Xavier-uniform hidden layers; the output layer is scaled by `output_scale` so that
    /// the initial field is close to zero and the induced transport close to the identity.
    static Regressor random(RegressorConfig cfg, Rng& rng, double output_scale = 1e-2);

    const RegressorConfig& config() const { return cfg_; }
    int data_dim() const { return cfg_.data_dim; }
    int latent_dim() const { return cfg_.latent_dim; }

    Batch forward(const Batch& x, const Vec& t, const Batch& latent = Batch()) const;
    Vec forward(const Vec& x, double t, const Vec& latent = Vec()) const;

    Vec backward(const Batch& x, const Vec& t, const Batch& latent, const Batch& dout) const;

    Eigen::Index parameter_count() const;
    Vec parameters() const;
    void set_parameters(const Vec& p);

    std::vector<Mat>& weights() { return weights_; }
    std::vector<Vec>& biases() { return biases_; }
    const std::vector<Mat>& weights() const { return weights_; }
    const std::vector<Vec>& biases() const { return biases_; }

private:
    Mat assemble_input(const Batch& x, const Vec& t, const Batch& latent) const;

    RegressorConfig cfg_;
    std::vector<Mat> weights_;
    std::vector<Vec> biases_;
};

/// Anything the trainer can fit: batched forward, parameter gradient, flat parameters.
template <class M>
concept FieldModel = requires(const M& cm, M& m, const Batch& x, const Vec& t, const Batch& lat,
                              const Vec& p) {
    { cm.forward(x, t, lat) } -> std::convertible_to<Batch>;
    { cm.backward(x, t, lat, x) } -> std::convertible_to<Vec>;
    { cm.parameters() } -> std::convertible_to<Vec>;
    m.set_parameters(p);
    { cm.data_dim() } -> std::convertible_to<int>;
    { cm.latent_dim() } -> std::convertible_to<int>;
};

/// Mean squared residual over the batch and its parameter gradient.
struct LossAndGrad {
    double loss = 0.0;
    Vec grad;
};

template <FieldModel M>
LossAndGrad residual_loss_and_grad(const M& model, const Batch& inputs, const Vec& t,
                                   const Batch& latent, const Batch& targets) {
    const Batch out = model.forward(inputs, t, latent);
    const Batch diff = out - targets;
    const double n = static_cast<double>(inputs.cols());
    LossAndGrad r;
    r.loss = diff.colwise().squaredNorm().sum() / n;
    r.grad = model.backward(inputs, t, latent, (2.0 / n) * diff);
    return r;
}

/// Mean residual of the given kind on an interpolant batch, with gradient.
template <FieldModel M>
LossAndGrad residual_loss_and_grad(const M& model, ResidualKind kind, const InterpolantBatch& batch,
                                   const Batch& latent, const Schedule& sched) {
    return residual_loss_and_grad(model, batch.i_t, batch.t, latent,
                                  residual_targets(kind, batch, sched));
}

struct AdamConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long warmup_steps = 0;
    /// Length of the cosine decay after warmup; 0 keeps the peak rate.
    long total_steps = 0;
    double min_lr_ratio = 0.0;
};

struct OptimizerState {
    AdamConfig cfg;
    Vec m;
    Vec v;
    long step = 0;

    OptimizerState() = default;
    OptimizerState(AdamConfig c, Eigen::Index n) : cfg(c), m(Vec::Zero(n)), v(Vec::Zero(n)) {}

    /// Learning rate applied at the given (zero-based) step.
    double learning_rate(long s) const;
};

void adam_step(Vec& params, OptimizerState& opt, const Vec& grad);

template <FieldModel M>
void adam_step(M& model, OptimizerState& opt, const Vec& grad) {
    Vec p = model.parameters();
    adam_step(p, opt, grad);
    model.set_parameters(p);
}

/// Binary checkpoint: magic, JSON manifest, raw little-endian float64 parameters.
void save_checkpoint(const std::filesystem::path& path, const Regressor& model, long step);
struct Checkpoint {
    Regressor model;
    long step = 0;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace scsi
