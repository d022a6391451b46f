#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "iabsa/common.hpp"

namespace iabsa {

enum class HeadKind { linear, structured };

// Output activation. The structured head views the output as a (2L + 1) x M
// row-major matrix, applies a softmax down each of the M columns of the
// first 1 + L rows and a sigmoid to every entry of the last L rows.
struct OutputHead {
    HeadKind kind = HeadKind::linear;
    int L = 0;
    int M = 0;

    static OutputHead linear() { return {}; }
    static OutputHead structured(int L, int M) { return {HeadKind::structured, L, M}; }
    int width() const { return (2 * L + 1) * M; }
    bool operator==(const OutputHead&) const = default;
};

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
};

// Fully connected network: ReLU hidden layers, affine output layer, head.
// Also used as the container for parameter gradients.
struct MlpParams {
    std::vector<int> layer_sizes;
    OutputHead head;
    std::vector<DenseLayer> layers;

    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    bool same_shape(const MlpParams& other) const;
    MlpParams zeros_like() const;
    double squared_norm() const;
    std::size_t parameter_count() const;

    // Visits every parameter as a flat sequence: per layer, weights (column
    // major) then biases.
    template <class F>
    void for_each_value(F&& f) {
        for (auto& layer : layers) {
            for (Eigen::Index i = 0; i < layer.weight.size(); ++i) f(layer.weight.data()[i]);
            for (Eigen::Index i = 0; i < layer.bias.size(); ++i) f(layer.bias.data()[i]);
        }
    }
};

// Weights ~ U(-sqrt(3 / fan_in), sqrt(3 / fan_in)), zero biases.
MlpParams init_mlp(std::vector<int> layer_sizes, OutputHead head, Rng& rng);

struct ForwardCache {
    std::vector<Eigen::MatrixXd> layer_inputs;  // activation entering each layer
    std::vector<Eigen::MatrixXd> pre_activations;
    Eigen::MatrixXd output;

    bool empty() const { return layer_inputs.empty(); }
};

// Batched forward pass; columns of `input` are samples.
Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& input, ForwardCache* cache = nullptr);
Eigen::VectorXd forward_one(const MlpParams& params, const Eigen::VectorXd& input);

// Applies the head in place to pre-activations.
void apply_head(const OutputHead& head, Eigen::MatrixXd& values);

struct Gradients {
    MlpParams params;       // summed over the batch
    Eigen::MatrixXd input;  // d/d input, one column per sample
};

// Gradients of sum_n <output_grad(:, n), output(:, n)>.
Gradients backward(const MlpParams& params, const ForwardCache& cache, const Eigen::MatrixXd& output_grad);

void sgd_step(MlpParams& params, const MlpParams& grads, double lr);

// target <- tau * train + (1 - tau) * target
void soft_update(MlpParams& target, const MlpParams& train, double tau);

// Rescales grads so their global L2 norm is at most max_norm.
void clip_grad_norm(MlpParams& grads, double max_norm);

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::sgd;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double clip_norm = 0.0;  // 0 disables clipping
};

// Stateful update rule bound to one parameter set.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig config = {}) : config_(config) {}

    void descend(MlpParams& params, MlpParams grads, double lr) { apply(params, std::move(grads), lr, -1.0); }
    void ascend(MlpParams& params, MlpParams grads, double lr) { apply(params, std::move(grads), lr, +1.0); }

    const OptimizerConfig& config() const { return config_; }

private:
    void apply(MlpParams& params, MlpParams grads, double lr, double direction);

    OptimizerConfig config_;
    MlpParams m_;
    MlpParams v_;
    long step_ = 0;
};

// Versioned text blob: header, layer sizes, head, then row-major values.
void save_mlp(std::ostream& os, const MlpParams& params);
MlpParams load_mlp(std::istream& is);

}  // namespace iabsa
