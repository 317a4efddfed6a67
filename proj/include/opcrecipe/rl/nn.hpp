#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace opcrecipe::rl {

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit engine.
double unit_uniform(std::mt19937_64& rng);

// Fully connected network: tanh on hidden layers, linear output. Parameters
// live in one flat vector, layer by layer, each as a row-major weight matrix
// (out x in) followed by its bias.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<int> sizes);

    struct Cache {
        std::vector<std::vector<double>> acts;  // acts[0] = input, back() = output
    };

    void init(std::mt19937_64& rng);
    std::vector<double> forward(std::span<const double> input, Cache* cache = nullptr) const;
    /// Accumulates dLoss/dparams into `grad` for the sample held in `cache`.
    void backward(const Cache& cache, std::span<const double> grad_output,
                  std::span<double> grad) const;

    const std::vector<int>& sizes() const { return sizes_; }
    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    /// Offset of layer l's bias vector inside params().
    std::size_t bias_offset(std::size_t layer) const;

private:
    std::vector<int> sizes_;
    std::vector<std::size_t> offsets_;  // start of each layer's weights
    std::vector<double> params_;
};

std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);
double entropy(std::span<const double> probs);

class Adam {
public:
    Adam() = default;
    Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step(std::span<double> params, std::span<const double> grad);

    double lr() const { return lr_; }
    std::int64_t steps() const { return t_; }
    const std::vector<double>& m() const { return m_; }
    const std::vector<double>& v() const { return v_; }
    void restore(std::int64_t t, std::vector<double> m, std::vector<double> v);

private:
    double lr_ = 3e-4, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
    std::int64_t t_ = 0;
    std::vector<double> m_, v_;
};

/// Scales `grad` so its L2 norm is at most max_norm; returns the prior norm.
double clip_grad_norm(std::span<double> grad, double max_norm);

}  // namespace opcrecipe::rl
