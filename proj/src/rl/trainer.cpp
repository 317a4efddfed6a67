#include "opcrecipe/rl/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "opcrecipe/error.hpp"

namespace opcrecipe::rl {

namespace {

std::atomic<std::int64_t> g_policy_forwards{0};

struct Episode {
    std::vector<Sample> samples;
    std::vector<double> rewards, raw, values;
    bool truncated = false;
};

std::uint64_t episode_seed(std::uint64_t seed, int update, int episode) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(update),
                      std::uint32_t(episode), 0x5eedu};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (std::uint64_t(out[0]) << 32) | out[1];
}

Episode run_episode(Environment& env, const ActorCritic& net, const PpoConfig& cfg,
                    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Episode ep;
    Observation obs = env.reset();
    for (;;) {
        const std::vector<double> probs = policy_probs(net, obs.policy);
        const int a = sample_action(probs, rng);
        Sample s;
        s.policy_input = obs.policy;
        s.value_input = obs.value;
        s.action = a;
        s.old_logp = std::log(std::max(probs[a], 1e-300));
        ep.values.push_back(net.v(obs.value));
        StepResult r = env.step(a - cfg.C);
        ep.samples.push_back(std::move(s));
        ep.rewards.push_back(r.reward);
        ep.raw.push_back(r.raw_reward);
        if (r.truncated) ep.truncated = true;
        if (r.done) break;
        obs = std::move(r.next);
    }
    const auto adv = gae(ep.rewards, ep.values, cfg.discount_gamma, cfg.gae_lambda);
    const auto ret = discounted_returns(ep.rewards, cfg.discount_gamma);
    for (std::size_t t = 0; t < ep.samples.size(); ++t) {
        ep.samples[t].advantage = adv[t];
        ep.samples[t].ret = ret[t];
    }
    return ep;
}

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::int64_t policy_forward_count() { return g_policy_forwards.load(); }

std::vector<double> policy_probs(const ActorCritic& net, std::span<const double> input) {
    g_policy_forwards.fetch_add(1);
    return net.probs(input);
}

int sample_action(const std::vector<double>& probs, std::mt19937_64& rng) {
    const double u = unit_uniform(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

int argmax_action(const std::vector<double>& probs) {
    return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

PolicyCheckpoint train(const std::vector<Environment*>& envs, const PpoConfig& cfg, int workers,
                       const ProgressFn& progress) {
    cfg.validate();
    if (envs.empty()) throw ConfigError("training needs at least one environment");
    const int pin = envs[0]->policy_size(), vin = envs[0]->value_size();
    for (Environment* e : envs)
        if (e->policy_size() != pin || e->value_size() != vin)
            throw ContractError("environments disagree on observation sizes");

    PolicyCheckpoint ck;
    ck.config = cfg;
    ck.net = ActorCritic(pin, vin, cfg.actions(), cfg.hidden);
    std::mt19937_64 rng(cfg.seed);
    ck.net.init(rng, cfg.init_zero_action_prob, cfg.C);
    Adam opt_p(ck.net.policy.params().size(), cfg.learning_rate);
    Adam opt_v(ck.net.value.params().size(), cfg.learning_rate);
    workers = std::max(1, workers);

    for (int u = 0; u < cfg.updates; ++u) {
        // Episodes of this update, grouped by environment.
        const int n_ep = cfg.rollout_clips;
        std::vector<Episode> episodes(n_ep);
        std::vector<std::vector<int>> by_env(envs.size());
        for (int e = 0; e < n_ep; ++e)
            by_env[(std::size_t(u) * n_ep + e) % envs.size()].push_back(e);
        std::vector<int> groups;
        for (std::size_t i = 0; i < by_env.size(); ++i)
            if (!by_env[i].empty()) groups.push_back(int(i));
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t g; (g = next.fetch_add(1)) < groups.size();) {
                const int env_idx = groups[g];
                for (int e : by_env[env_idx])
                    episodes[e] = run_episode(*envs[env_idx], ck.net, cfg,
                                              episode_seed(cfg.seed, u, e));
            }
        };
        const int nthreads = std::min<int>(workers, static_cast<int>(groups.size()));
        if (nthreads <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }

        UpdateStats st;
        st.update = u;
        st.episodes = n_ep;
        std::vector<Sample> batch;
        for (Episode& ep : episodes) {
            st.steps += static_cast<int>(ep.samples.size());
            for (double r : ep.rewards) st.mean_reward += r;
            for (double r : ep.raw) st.mean_raw_reward += r;
            if (!ep.raw.empty()) st.mean_final_raw += ep.raw.back();
            st.truncated += ep.truncated;
            for (Sample& s : ep.samples) batch.push_back(std::move(s));
        }
        if (st.steps > 0) {
            st.mean_reward /= st.steps;
            st.mean_raw_reward /= st.steps;
        }
        st.mean_final_raw /= n_ep;
        {
            std::vector<double> adv(batch.size());
            for (std::size_t i = 0; i < batch.size(); ++i) adv[i] = batch[i].advantage;
            normalize(adv);
            for (std::size_t i = 0; i < batch.size(); ++i) batch[i].advantage = adv[i];
        }

        std::vector<std::size_t> order(batch.size());
        bool diverged = false;
        int mb_count = 0;
        for (int epoch = 0; epoch < cfg.epochs_per_update && !diverged; ++epoch) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            for (std::size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[rng() % i]);
            for (std::size_t start = 0; start < order.size(); start += cfg.minibatch_size) {
                const std::size_t end = std::min(order.size(), start + cfg.minibatch_size);
                std::vector<Sample> mb;
                for (std::size_t i = start; i < end; ++i) mb.push_back(batch[order[i]]);
                std::vector<double> gp(ck.net.policy.params().size(), 0.0);
                std::vector<double> gv(ck.net.value.params().size(), 0.0);
                const PpoLosses l = ppo_losses(ck.net, mb, cfg, &gp, &gv);
                g_policy_forwards.fetch_add(static_cast<std::int64_t>(mb.size()));
                if (!std::isfinite(l.combined) || !all_finite(gp) || !all_finite(gv)) {
                    diverged = true;
                    break;
                }
                clip_grad_norm(gp, cfg.max_grad_norm);
                clip_grad_norm(gv, cfg.max_grad_norm);
                const ActorCritic before = ck.net;
                opt_p.step(ck.net.policy.params(), gp);
                opt_v.step(ck.net.value.params(), gv);
                if (!all_finite(ck.net.policy.params()) || !all_finite(ck.net.value.params())) {
                    ck.net = before;
                    diverged = true;
                    break;
                }
                st.l_clip += l.l_clip;
                st.l_value += l.l_value;
                st.entropy += l.entropy;
                st.clip_fraction += l.clip_fraction;
                ++mb_count;
            }
        }
        if (mb_count > 0) {
            st.l_clip /= mb_count;
            st.l_value /= mb_count;
            st.entropy /= mb_count;
            st.clip_fraction /= mb_count;
        }
        ck.trace.push_back(st);
        if (progress) progress(st);
        if (diverged) {
            ck.diverged = true;
            break;
        }
    }
    return ck;
}

// ---- serialization ---------------------------------------------------------

namespace {

using nlohmann::ordered_json;

ordered_json config_json(const PpoConfig& c) {
    return ordered_json{{"discount_gamma", c.discount_gamma},
                        {"gae_lambda", c.gae_lambda},
                        {"clip_eps", c.clip_eps},
                        {"c1", c.c1},
                        {"c2", c.c2},
                        {"learning_rate", c.learning_rate},
                        {"epochs_per_update", c.epochs_per_update},
                        {"minibatch_size", c.minibatch_size},
                        {"rollout_clips", c.rollout_clips},
                        {"updates", c.updates},
                        {"C", c.C},
                        {"hidden", c.hidden},
                        {"max_grad_norm", c.max_grad_norm},
                        {"init_zero_action_prob", c.init_zero_action_prob},
                        {"seed", c.seed}};
}

PpoConfig config_from(const nlohmann::json& j) {
    PpoConfig c;
    c.discount_gamma = j.at("discount_gamma");
    c.gae_lambda = j.at("gae_lambda");
    c.clip_eps = j.at("clip_eps");
    c.c1 = j.at("c1");
    c.c2 = j.at("c2");
    c.learning_rate = j.at("learning_rate");
    c.epochs_per_update = j.at("epochs_per_update");
    c.minibatch_size = j.at("minibatch_size");
    c.rollout_clips = j.at("rollout_clips");
    c.updates = j.at("updates");
    c.C = j.at("C");
    c.hidden = j.at("hidden").get<std::vector<int>>();
    c.max_grad_norm = j.at("max_grad_norm");
    c.init_zero_action_prob = j.at("init_zero_action_prob");
    c.seed = j.at("seed");
    return c;
}

ordered_json stats_json(const UpdateStats& s) {
    return ordered_json{{"update", s.update},          {"episodes", s.episodes},
                        {"steps", s.steps},            {"mean_reward", s.mean_reward},
                        {"mean_raw_reward", s.mean_raw_reward},
                        {"mean_final_raw", s.mean_final_raw},
                        {"l_clip", s.l_clip},          {"l_value", s.l_value},
                        {"entropy", s.entropy},        {"clip_fraction", s.clip_fraction},
                        {"truncated", s.truncated}};
}

UpdateStats stats_from(const nlohmann::json& j) {
    UpdateStats s;
    s.update = j.at("update");
    s.episodes = j.at("episodes");
    s.steps = j.at("steps");
    s.mean_reward = j.at("mean_reward");
    s.mean_raw_reward = j.at("mean_raw_reward");
    s.mean_final_raw = j.at("mean_final_raw");
    s.l_clip = j.at("l_clip");
    s.l_value = j.at("l_value");
    s.entropy = j.at("entropy");
    s.clip_fraction = j.at("clip_fraction");
    s.truncated = j.at("truncated");
    return s;
}

Mlp mlp_from(const nlohmann::json& j) {
    Mlp m(j.at("sizes").get<std::vector<int>>());
    auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != m.params().size())
        throw ValidationError("checkpoint parameter count does not match layer sizes");
    m.params() = std::move(params);
    return m;
}

}  // namespace

std::string checkpoint_to_json(const PolicyCheckpoint& ck) {
    ordered_json j;
    j["format"] = "opcrecipe-policy";
    j["version"] = 1;
    j["config"] = config_json(ck.config);
    j["diverged"] = ck.diverged;
    j["policy"] = ordered_json{{"sizes", ck.net.policy.sizes()}, {"params", ck.net.policy.params()}};
    j["value"] = ordered_json{{"sizes", ck.net.value.sizes()}, {"params", ck.net.value.params()}};
    ordered_json trace = ordered_json::array();
    for (const UpdateStats& s : ck.trace) trace.push_back(stats_json(s));
    j["trace"] = trace;
    return j.dump(1);
}

PolicyCheckpoint checkpoint_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format") != "opcrecipe-policy") throw ValidationError("not a policy checkpoint");
        if (j.at("version") != 1) throw ValidationError("unsupported checkpoint version");
        PolicyCheckpoint ck;
        ck.config = config_from(j.at("config"));
        ck.diverged = j.at("diverged");
        ck.net.policy = mlp_from(j.at("policy"));
        ck.net.value = mlp_from(j.at("value"));
        for (const auto& s : j.at("trace")) ck.trace.push_back(stats_from(s));
        return ck;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::string& path, const PolicyCheckpoint& ck) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write checkpoint '" + path + "'");
    out << checkpoint_to_json(ck) << '\n';
}

PolicyCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read checkpoint '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_json(ss.str());
}

std::string reward_trace_csv(const std::vector<UpdateStats>& trace) {
    std::ostringstream os;
    os << "update,episodes,steps,mean_reward,mean_raw_reward,mean_final_raw,l_clip,l_value,"
          "entropy,clip_fraction,truncated\n";
    char buf[512];
    for (const UpdateStats& s : trace) {
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%.6f,%.4f,%.4f,%.6f,%.6f,%.6f,%.4f,%d\n",
                      s.update, s.episodes, s.steps, s.mean_reward, s.mean_raw_reward,
                      s.mean_final_raw, s.l_clip, s.l_value, s.entropy, s.clip_fraction,
                      s.truncated);
        os << buf;
    }
    return os.str();
}

}  // namespace opcrecipe::rl
