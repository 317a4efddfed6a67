#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "opcrecipe/rl/env.hpp"
#include "opcrecipe/rl/ppo.hpp"

namespace opcrecipe::rl {

/// Process-wide count of policy-network forward passes.
std::int64_t policy_forward_count();

struct UpdateStats {
    int update = 0;
    int episodes = 0;
    int steps = 0;
    double mean_reward = 0.0;      // learning reward per step
    double mean_raw_reward = 0.0;  // -L_OPC per step
    double mean_final_raw = 0.0;   // -L_OPC after each episode's last step
    double l_clip = 0.0;
    double l_value = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    int truncated = 0;
};

struct PolicyCheckpoint {
    PpoConfig config;
    ActorCritic net;
    std::vector<UpdateStats> trace;
    bool diverged = false;  // training stopped on a non-finite update
};

using ProgressFn = std::function<void(const UpdateStats&)>;

/// PPO over the given environments. Episode e of update u runs on
/// envs[(u * rollout_clips + e) % envs.size()] with its own seeded RNG, so
/// results do not depend on `workers`.
PolicyCheckpoint train(const std::vector<Environment*>& envs, const PpoConfig& cfg,
                       int workers = 1, const ProgressFn& progress = {});

/// Samples an action index from `probs` with one uniform draw.
int sample_action(const std::vector<double>& probs, std::mt19937_64& rng);
int argmax_action(const std::vector<double>& probs);

/// Counted policy evaluation.
std::vector<double> policy_probs(const ActorCritic& net, std::span<const double> input);

std::string checkpoint_to_json(const PolicyCheckpoint& ck);
PolicyCheckpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::string& path, const PolicyCheckpoint& ck);
PolicyCheckpoint load_checkpoint(const std::string& path);

/// update,episodes,steps,mean_reward,mean_raw_reward,mean_final_raw,l_clip,l_value,entropy,clip_fraction,truncated
std::string reward_trace_csv(const std::vector<UpdateStats>& trace);

}  // namespace opcrecipe::rl
