#include "opcrecipe/rl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "opcrecipe/error.hpp"

namespace opcrecipe::rl {

double unit_uniform(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw ContractError("an MLP needs at least input and output sizes");
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        if (sizes_[l] < 1 || sizes_[l + 1] < 1) throw ContractError("MLP layer sizes must be positive");
        offsets_.push_back(n);
        n += std::size_t(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
    }
    params_.assign(n, 0.0);
}

std::size_t Mlp::bias_offset(std::size_t layer) const {
    return offsets_.at(layer) + std::size_t(sizes_[layer]) * sizes_[layer + 1];
}

void Mlp::init(std::mt19937_64& rng) {
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const int in = sizes_[l], out = sizes_[l + 1];
        const double bound = std::sqrt(6.0 / (in + out));
        double* w = &params_[offsets_[l]];
        for (std::size_t i = 0; i < std::size_t(in) * out; ++i)
            w[i] = (2.0 * unit_uniform(rng) - 1.0) * bound;
        std::fill_n(&params_[bias_offset(l)], out, 0.0);
    }
}

std::vector<double> Mlp::forward(std::span<const double> input, Cache* cache) const {
    if (static_cast<int>(input.size()) != input_size())
        throw ContractError("MLP input has the wrong size");
    std::vector<double> a(input.begin(), input.end());
    if (cache) {
        cache->acts.clear();
        cache->acts.push_back(a);
    }
    const std::size_t layers = sizes_.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const int in = sizes_[l], out = sizes_[l + 1];
        const double* w = &params_[offsets_[l]];
        const double* b = &params_[bias_offset(l)];
        std::vector<double> z(out);
        for (int o = 0; o < out; ++o) {
            const double* row = w + std::size_t(o) * in;
            double acc = b[o];
            for (int i = 0; i < in; ++i) acc += row[i] * a[i];
            z[o] = l + 1 < layers ? std::tanh(acc) : acc;
        }
        a = std::move(z);
        if (cache) cache->acts.push_back(a);
    }
    return a;
}

void Mlp::backward(const Cache& cache, std::span<const double> grad_output,
                   std::span<double> grad) const {
    if (grad.size() != params_.size()) throw ContractError("gradient buffer has the wrong size");
    const std::size_t layers = sizes_.size() - 1;
    std::vector<double> delta(grad_output.begin(), grad_output.end());
    for (std::size_t l = layers; l-- > 0;) {
        const int in = sizes_[l], out = sizes_[l + 1];
        const std::vector<double>& a_in = cache.acts[l];
        const double* w = &params_[offsets_[l]];
        double* gw = &grad[offsets_[l]];
        double* gb = &grad[bias_offset(l)];
        for (int o = 0; o < out; ++o) {
            const double d = delta[o];
            gb[o] += d;
            if (d == 0.0) continue;
            double* grow = gw + std::size_t(o) * in;
            for (int i = 0; i < in; ++i) grow[i] += d * a_in[i];
        }
        if (l == 0) break;
        std::vector<double> prev(in, 0.0);
        for (int o = 0; o < out; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            const double* row = w + std::size_t(o) * in;
            for (int i = 0; i < in; ++i) prev[i] += row[i] * d;
        }
        for (int i = 0; i < in; ++i) prev[i] *= 1.0 - a_in[i] * a_in[i];  // tanh'
        delta = std::move(prev);
    }
}

std::vector<double> log_softmax(std::span<const double> logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (double z : logits) s += std::exp(z - mx);
    const double lse = mx + std::log(s);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p = log_softmax(logits);
    for (double& v : p) v = std::exp(v);
    return p;
}

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw ContractError("Adam state does not match the parameter count");
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, double(t_));
    const double c2 = 1.0 - std::pow(b2_, double(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
        v_[i] = b2_ * v_[i] + (1.0 - b2_) * grad[i] * grad[i];
        params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

void Adam::restore(std::int64_t t, std::vector<double> m, std::vector<double> v) {
    if (m.size() != m_.size() || v.size() != v_.size())
        throw ValidationError("optimizer state does not match the parameter count");
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
}

double clip_grad_norm(std::span<double> grad, double max_norm) {
    double sq = 0.0;
    for (double g : grad) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0)
        for (double& g : grad) g *= max_norm / norm;
    return norm;
}

}  // namespace opcrecipe::rl
