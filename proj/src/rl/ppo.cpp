#include "opcrecipe/rl/ppo.hpp"

#include <algorithm>
#include <cmath>

#include "opcrecipe/error.hpp"

namespace opcrecipe::rl {

void PpoConfig::validate() const {
    if (!(discount_gamma >= 0.0 && discount_gamma <= 1.0))
        throw ConfigError("ppo.discount_gamma must lie in [0, 1]");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("ppo.gae_lambda must lie in [0, 1]");
    if (!(clip_eps > 0.0)) throw ConfigError("ppo.clip_eps must be positive");
    if (!(c1 >= 0.0) || !(c2 >= 0.0)) throw ConfigError("ppo.c1 and ppo.c2 must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("ppo.learning_rate must be positive");
    if (epochs_per_update < 1 || minibatch_size < 1 || rollout_clips < 1 || updates < 0)
        throw ConfigError("ppo epochs, minibatch size and rollout clips must be >= 1");
    if (C < 1 || 40 % C != 0) throw ConfigError("ppo.C must be a positive divisor of 40");
    if (hidden.empty()) throw ConfigError("ppo.hidden needs at least one layer");
    for (int h : hidden)
        if (h < 1) throw ConfigError("ppo.hidden sizes must be positive");
    if (!(max_grad_norm > 0.0)) throw ConfigError("ppo.max_grad_norm must be positive");
    if (!(init_zero_action_prob >= 0.0 && init_zero_action_prob < 1.0))
        throw ConfigError("ppo.init_zero_action_prob must lie in [0, 1)");
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
    std::vector<double> out(rewards.size());
    double acc = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    return out;
}

std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        double gamma, double lambda) {
    if (rewards.size() != values.size()) throw ContractError("gae needs one value per reward");
    std::vector<double> adv(rewards.size());
    double acc = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) {
        const double next = t + 1 < values.size() ? values[t + 1] : 0.0;
        const double delta = rewards[t] + gamma * next - values[t];
        acc = delta + gamma * lambda * acc;
        adv[t] = acc;
    }
    return adv;
}

void normalize(std::span<double> v) {
    if (v.empty()) return;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= double(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / double(v.size()));
    for (double& x : v) x = sd > 1e-12 ? (x - mean) / sd : 0.0;
}

ActorCritic::ActorCritic(int policy_inputs, int value_inputs, int actions,
                         const std::vector<int>& hidden) {
    std::vector<int> p{policy_inputs}, v{value_inputs};
    p.insert(p.end(), hidden.begin(), hidden.end());
    v.insert(v.end(), hidden.begin(), hidden.end());
    p.push_back(actions);
    v.push_back(1);
    policy = Mlp(p);
    value = Mlp(v);
}

void ActorCritic::init(std::mt19937_64& rng, double zero_action_prob, int zero_action_index) {
    policy.init(rng);
    value.init(rng);
    const std::size_t last = policy.sizes().size() - 2;
    const int a = policy.output_size();
    // Shrink the output weights so the head starts at its bias.
    const std::size_t w0 = policy.bias_offset(last) - std::size_t(a) * policy.sizes()[last];
    for (std::size_t i = w0; i < policy.bias_offset(last); ++i) policy.params()[i] *= 0.01;
    if (zero_action_prob > 0.0 && a > 1) {
        const double rest = (1.0 - zero_action_prob) / (a - 1);
        policy.params()[policy.bias_offset(last) + zero_action_index] =
            std::log(zero_action_prob / rest);
    }
}

std::vector<double> ActorCritic::probs(std::span<const double> policy_input) const {
    return softmax(policy.forward(policy_input));
}

double ActorCritic::v(std::span<const double> value_input) const {
    return value.forward(value_input)[0];
}

PpoLosses ppo_losses(const ActorCritic& ac, std::span<const Sample> batch, const PpoConfig& cfg,
                     std::vector<double>* grad_policy, std::vector<double>* grad_value) {
    PpoLosses out;
    if (batch.empty()) return out;
    const double n = double(batch.size());
    Mlp::Cache pc, vc;
    for (const Sample& s : batch) {
        const std::vector<double> logits = ac.policy.forward(s.policy_input, &pc);
        const std::vector<double> logp = log_softmax(logits);
        std::vector<double> p(logp.size());
        for (std::size_t j = 0; j < p.size(); ++j) p[j] = std::exp(logp[j]);
        const double ratio = std::exp(logp[s.action] - s.old_logp);
        const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
        const double unclipped_term = ratio * s.advantage, clipped_term = clipped * s.advantage;
        const bool use_unclipped = unclipped_term <= clipped_term;
        out.l_clip += std::min(unclipped_term, clipped_term);
        if (clipped != ratio) out.clip_fraction += 1.0;
        double h = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) h -= p[j] * logp[j];
        out.entropy += h;

        const double vpred = ac.value.forward(s.value_input, &vc)[0];
        out.l_value += (vpred - s.ret) * (vpred - s.ret);

        if (grad_policy) {
            const double ds = use_unclipped ? s.advantage : 0.0;
            std::vector<double> gz(p.size());
            for (std::size_t j = 0; j < p.size(); ++j) {
                const double dratio = ratio * ((int(j) == s.action ? 1.0 : 0.0) - p[j]);
                const double dh = -p[j] * (logp[j] + h);
                gz[j] = -(ds * dratio + cfg.c2 * dh) / n;
            }
            ac.policy.backward(pc, gz, *grad_policy);
        }
        if (grad_value) {
            const double gv = cfg.c1 * 2.0 * (vpred - s.ret) / n;
            ac.value.backward(vc, std::span<const double>(&gv, 1), *grad_value);
        }
    }
    out.l_clip /= n;
    out.l_value /= n;
    out.entropy /= n;
    out.clip_fraction /= n;
    out.combined = out.l_clip - cfg.c1 * out.l_value + cfg.c2 * out.entropy;
    return out;
}

}  // namespace opcrecipe::rl
