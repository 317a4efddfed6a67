#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "opcrecipe/rl/nn.hpp"

namespace opcrecipe::rl {

struct PpoConfig {
    double discount_gamma = 0.99;
    double gae_lambda = 0.95;
    double clip_eps = 0.2;
    double c1 = 0.5;   // value-loss weight
    double c2 = 0.01;  // entropy weight
    double learning_rate = 3e-4;
    int epochs_per_update = 4;
    int minibatch_size = 64;
    int rollout_clips = 4;  // episodes collected per update
    int updates = 50;
    int C = 4;
    std::vector<int> hidden{64, 64};
    double max_grad_norm = 0.5;
    // Initial probability of the no-move action; the remaining mass is spread
    // evenly. Zero keeps the freshly initialized (near-uniform) head.
    double init_zero_action_prob = 0.0;
    std::uint64_t seed = 0;

    int actions() const { return 2 * C + 1; }
    double step_nm() const { return 40.0 / C; }
    void validate() const;
};

/// R_t = sum_{k>=t} gamma^(k-t) r_k.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);

/// Generalized advantage estimates with V(s_{T}) = 0 after the last step.
std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        double gamma, double lambda);

/// Zero mean, unit (population) variance; constant input maps to zeros.
void normalize(std::span<double> v);

// Separate policy and value networks. The value network sees the policy input
// followed by extra global context.
struct ActorCritic {
    Mlp policy;
    Mlp value;

    ActorCritic() = default;
    ActorCritic(int policy_inputs, int value_inputs, int actions, const std::vector<int>& hidden);
    void init(std::mt19937_64& rng, double zero_action_prob, int zero_action_index);

    std::vector<double> probs(std::span<const double> policy_input) const;
    double v(std::span<const double> value_input) const;
};

struct Sample {
    std::vector<double> policy_input;
    std::vector<double> value_input;
    int action = 0;  // index into the action head
    double old_logp = 0.0;
    double advantage = 0.0;
    double ret = 0.0;
};

struct PpoLosses {
    double l_clip = 0.0;
    double l_value = 0.0;
    double entropy = 0.0;
    double combined = 0.0;       // l_clip - c1 * l_value + c2 * entropy (maximized)
    double clip_fraction = 0.0;  // share of samples whose ratio left [1-eps, 1+eps]
};

/// PPO objective over a batch. When gradient buffers are given, accumulates
/// the gradient of -combined (the minimized form) for each network.
PpoLosses ppo_losses(const ActorCritic& ac, std::span<const Sample> batch, const PpoConfig& cfg,
                     std::vector<double>* grad_policy = nullptr,
                     std::vector<double>* grad_value = nullptr);

}  // namespace opcrecipe::rl
