#include "iabsa/approx.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace iabsa {

bool MlpParams::same_shape(const MlpParams& other) const {
    return layer_sizes == other.layer_sizes && head == other.head && layers.size() == other.layers.size();
}

MlpParams MlpParams::zeros_like() const {
    MlpParams z{layer_sizes, head, {}};
    z.layers.reserve(layers.size());
    for (const auto& layer : layers)
        z.layers.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                            Eigen::VectorXd::Zero(layer.bias.size())});
    return z;
}

double MlpParams::squared_norm() const {
    double s = 0.0;
    for (const auto& layer : layers) s += layer.weight.squaredNorm() + layer.bias.squaredNorm();
    return s;
}

std::size_t MlpParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
    return n;
}

MlpParams init_mlp(std::vector<int> layer_sizes, OutputHead head, Rng& rng) {
    if (layer_sizes.size() < 2) throw ShapeError("init_mlp: need at least input and output sizes");
    for (int s : layer_sizes)
        if (s < 1) throw ShapeError("init_mlp: layer sizes must be positive");
    if (head.kind == HeadKind::structured && layer_sizes.back() != head.width())
        throw ShapeError("init_mlp: structured head needs (2L + 1) * M outputs");

    MlpParams p{std::move(layer_sizes), head, {}};
    for (std::size_t k = 0; k + 1 < p.layer_sizes.size(); ++k) {
        const int fan_in = p.layer_sizes[k];
        const int fan_out = p.layer_sizes[k + 1];
        const double bound = std::sqrt(3.0 / fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
        // Row-major fill order keeps draws independent of Eigen's storage order.
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) layer.weight(r, c) = dist(rng);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

void apply_head(const OutputHead& head, Eigen::MatrixXd& values) {
    if (head.kind == HeadKind::linear) return;
    const int L = head.L;
    const int M = head.M;
    for (Eigen::Index n = 0; n < values.cols(); ++n) {
        auto col = values.col(n);
        for (int m = 0; m < M; ++m) {
            double mx = col(m);
            for (int r = 1; r <= L; ++r) mx = std::max(mx, col(r * M + m));
            double sum = 0.0;
            for (int r = 0; r <= L; ++r) {
                col(r * M + m) = std::exp(col(r * M + m) - mx);
                sum += col(r * M + m);
            }
            for (int r = 0; r <= L; ++r) col(r * M + m) /= sum;
        }
        for (int i = (L + 1) * M; i < (2 * L + 1) * M; ++i) col(i) = 1.0 / (1.0 + std::exp(-col(i)));
    }
}

namespace {

// Gradient w.r.t. head pre-activations given the gradient w.r.t. its output.
Eigen::MatrixXd head_backward(const OutputHead& head, const Eigen::MatrixXd& output,
                              const Eigen::MatrixXd& output_grad) {
    if (head.kind == HeadKind::linear) return output_grad;
    const int L = head.L;
    const int M = head.M;
    Eigen::MatrixXd g(output.rows(), output.cols());
    for (Eigen::Index n = 0; n < output.cols(); ++n) {
        for (int m = 0; m < M; ++m) {
            double dot = 0.0;
            for (int r = 0; r <= L; ++r) dot += output(r * M + m, n) * output_grad(r * M + m, n);
            for (int r = 0; r <= L; ++r) {
                const int i = r * M + m;
                g(i, n) = output(i, n) * (output_grad(i, n) - dot);
            }
        }
        for (int i = (L + 1) * M; i < (2 * L + 1) * M; ++i) {
            const double y = output(i, n);
            g(i, n) = output_grad(i, n) * y * (1.0 - y);
        }
    }
    return g;
}

}  // namespace

Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& input, ForwardCache* cache) {
    if (input.rows() != params.input_size()) throw ShapeError("forward: input width mismatch");
    if (cache) {
        cache->layer_inputs.clear();
        cache->pre_activations.clear();
    }
    Eigen::MatrixXd a = input;
    const std::size_t n_layers = params.layers.size();
    for (std::size_t k = 0; k < n_layers; ++k) {
        const auto& layer = params.layers[k];
        Eigen::MatrixXd z = layer.weight * a;
        z.colwise() += layer.bias;
        if (cache) {
            cache->layer_inputs.push_back(std::move(a));
            cache->pre_activations.push_back(z);
        }
        if (k + 1 < n_layers) {
            a = z.cwiseMax(0.0);
        } else {
            apply_head(params.head, z);
            a = std::move(z);
        }
    }
    if (cache) cache->output = a;
    return a;
}

Eigen::VectorXd forward_one(const MlpParams& params, const Eigen::VectorXd& input) {
    return forward(params, Eigen::MatrixXd(input)).col(0);
}

Gradients backward(const MlpParams& params, const ForwardCache& cache, const Eigen::MatrixXd& output_grad) {
    if (cache.empty() || cache.layer_inputs.size() != params.layers.size())
        throw std::logic_error("backward: forward cache missing");
    if (output_grad.rows() != cache.output.rows() || output_grad.cols() != cache.output.cols())
        throw ShapeError("backward: output gradient shape mismatch");

    Gradients out{params.zeros_like(), {}};
    Eigen::MatrixXd delta = head_backward(params.head, cache.output, output_grad);
    for (std::size_t k = params.layers.size(); k-- > 0;) {
        auto& g = out.params.layers[k];
        g.weight.noalias() = delta * cache.layer_inputs[k].transpose();
        g.bias = delta.rowwise().sum();
        Eigen::MatrixXd upstream = params.layers[k].weight.transpose() * delta;
        if (k > 0) {
            const auto& pre = cache.pre_activations[k - 1];
            delta = upstream.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
        } else {
            out.input = std::move(upstream);
        }
    }
    return out;
}

void sgd_step(MlpParams& params, const MlpParams& grads, double lr) {
    if (!params.same_shape(grads)) throw ShapeError("sgd_step: gradient shape mismatch");
    for (std::size_t k = 0; k < params.layers.size(); ++k) {
        params.layers[k].weight -= lr * grads.layers[k].weight;
        params.layers[k].bias -= lr * grads.layers[k].bias;
    }
}

void soft_update(MlpParams& target, const MlpParams& train, double tau) {
    if (!target.same_shape(train)) throw ShapeError("soft_update: shape mismatch");
    for (std::size_t k = 0; k < target.layers.size(); ++k) {
        auto& t = target.layers[k];
        const auto& s = train.layers[k];
        t.weight = tau * s.weight + (1.0 - tau) * t.weight;
        t.bias = tau * s.bias + (1.0 - tau) * t.bias;
    }
}

void clip_grad_norm(MlpParams& grads, double max_norm) {
    if (max_norm <= 0) return;
    const double norm = std::sqrt(grads.squared_norm());
    if (norm <= max_norm) return;
    const double scale = max_norm / norm;
    grads.for_each_value([scale](double& v) { v *= scale; });
}

void Optimizer::apply(MlpParams& params, MlpParams grads, double lr, double direction) {
    if (!params.same_shape(grads)) throw ShapeError("optimizer: gradient shape mismatch");
    clip_grad_norm(grads, config_.clip_norm);
    if (config_.kind == OptimizerKind::sgd) {
        sgd_step(params, grads, -direction * lr);
        return;
    }
    if (m_.layers.empty()) {
        m_ = params.zeros_like();
        v_ = params.zeros_like();
    }
    ++step_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
    auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
        m = config_.beta1 * m + (1.0 - config_.beta1) * g;
        v = config_.beta2 * v + (1.0 - config_.beta2) * g.cwiseAbs2();
        p.array() += direction * lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.epsilon);
    };
    for (std::size_t k = 0; k < params.layers.size(); ++k) {
        update(params.layers[k].weight, grads.layers[k].weight, m_.layers[k].weight, v_.layers[k].weight);
        update(params.layers[k].bias, grads.layers[k].bias, m_.layers[k].bias, v_.layers[k].bias);
    }
}

namespace {

constexpr const char* kMlpMagic = "iabsa-mlp";
constexpr int kMlpVersion = 1;

double parse_double(const std::string& token) {
    double v = 0.0;
    if (token == "nan") return std::nan("");
    if (token == "inf") return INFINITY;
    if (token == "-inf") return -INFINITY;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size())
        throw ConfigError("parameter blob: bad number '" + token + "'");
    return v;
}

template <class T>
T expect(std::istream& is, const char* what) {
    T v{};
    if (!(is >> v)) throw ConfigError(std::string("parameter blob: expected ") + what);
    return v;
}

void expect_word(std::istream& is, const std::string& word) {
    if (expect<std::string>(is, word.c_str()) != word)
        throw ConfigError("parameter blob: expected '" + word + "'");
}

}  // namespace

void save_mlp(std::ostream& os, const MlpParams& params) {
    os << kMlpMagic << ' ' << kMlpVersion << '\n';
    os << "sizes " << params.layer_sizes.size();
    for (int s : params.layer_sizes) os << ' ' << s;
    os << '\n';
    os << "head " << (params.head.kind == HeadKind::linear ? "linear" : "structured") << ' ' << params.head.L
       << ' ' << params.head.M << '\n';
    for (const auto& layer : params.layers) {
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
                os << (c ? " " : "") << format_double(layer.weight(r, c));
            os << '\n';
        }
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) os << (r ? " " : "") << format_double(layer.bias(r));
        os << '\n';
    }
}

MlpParams load_mlp(std::istream& is) {
    expect_word(is, kMlpMagic);
    if (expect<int>(is, "version") != kMlpVersion) throw ConfigError("parameter blob: unsupported version");
    expect_word(is, "sizes");
    const auto n = expect<std::size_t>(is, "layer count");
    if (n < 2 || n > 64) throw ConfigError("parameter blob: bad layer count");
    std::vector<int> sizes(n);
    for (auto& s : sizes) {
        s = expect<int>(is, "layer size");
        if (s < 1) throw ConfigError("parameter blob: bad layer size");
    }
    expect_word(is, "head");
    const auto kind = expect<std::string>(is, "head kind");
    OutputHead head;
    head.kind = kind == "structured" ? HeadKind::structured : HeadKind::linear;
    if (kind != "structured" && kind != "linear") throw ConfigError("parameter blob: bad head kind");
    head.L = expect<int>(is, "head L");
    head.M = expect<int>(is, "head M");

    MlpParams p{sizes, head, {}};
    for (std::size_t k = 0; k + 1 < n; ++k) {
        DenseLayer layer{Eigen::MatrixXd(sizes[k + 1], sizes[k]), Eigen::VectorXd(sizes[k + 1])};
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
                layer.weight(r, c) = parse_double(expect<std::string>(is, "weight"));
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
            layer.bias(r) = parse_double(expect<std::string>(is, "bias"));
        p.layers.push_back(std::move(layer));
    }
    return p;
}

}  // namespace iabsa
