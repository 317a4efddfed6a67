#include <doctest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "opcrecipe/error.hpp"
#include "opcrecipe/rl/env.hpp"
#include "opcrecipe/rl/movements.hpp"
#include "opcrecipe/rl/nn.hpp"
#include "opcrecipe/rl/ppo.hpp"
#include "opcrecipe/rl/trainer.hpp"
#include "oracles.hpp"

using namespace opcrecipe;
using namespace opcrecipe::rl;

TEST_CASE("discounted returns") {
    const std::vector<double> r{1, 1, 1};
    CHECK(discounted_returns(r, 0.9)[0] == doctest::Approx(2.71).epsilon(1e-15));
    CHECK(discounted_returns(r, 0.0) == r);
    CHECK(discounted_returns(r, 1.0)[0] == 3.0);
}

TEST_CASE("gae identities") {
    const std::vector<double> r1{2.5}, v1{0.0};
    CHECK(gae(r1, v1, 0.99, 0.95)[0] == 2.5);
    const std::vector<double> r{1.0, 0.0}, v{0.5, 0.5};
    const auto a = gae(r, v, 1.0, 0.5);
    CHECK(a[0] == 0.75);
    CHECK(a[1] == -0.5);
}

TEST_CASE("property: gae with lambda 1 and zero values equals discounted returns") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> r(1 + trial % 17);
        for (double& x : r) x = nd(rng);
        const std::vector<double> zero(r.size(), 0.0);
        const double g = unit_uniform(rng);
        const auto a = gae(r, zero, g, 1.0), ret = discounted_returns(r, g);
        for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(a[i] - ret[i]) <= 1e-12);
    }
}

TEST_CASE("normalize") {
    std::vector<double> v{1, 2, 3, 4};
    normalize(v);
    double m = 0, s = 0;
    for (double x : v) m += x;
    for (double x : v) s += x * x;
    CHECK(std::abs(m) < 1e-12);
    CHECK(s / 4 == doctest::Approx(1.0));
    std::vector<double> c{3, 3, 3};
    normalize(c);
    CHECK(c == std::vector<double>{0, 0, 0});
}

TEST_CASE("softmax family") {
    const std::vector<double> z{1.0, 2.0, 3.0};
    const auto p = softmax(z);
    CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0));
    CHECK(p[2] / p[1] == doctest::Approx(std::exp(1.0)));
    const auto lp = log_softmax(z);
    for (int i = 0; i < 3; ++i) CHECK(std::exp(lp[i]) == doctest::Approx(p[i]));
    const std::vector<double> big{1000.0, 0.0};
    CHECK(softmax(big)[0] == 1.0);
    const std::vector<double> uniform(4, 0.25);
    CHECK(entropy(uniform) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("adam first step moves each parameter by the learning rate") {
    Adam opt(3, 0.1);
    std::vector<double> p{0, 0, 0};
    const std::vector<double> g{2.0, -0.5, 0.0};
    opt.step(p, g);
    CHECK(p[0] == doctest::Approx(-0.1));
    CHECK(p[1] == doctest::Approx(0.1));
    CHECK(p[2] == 0.0);
    CHECK(opt.steps() == 1);
}

TEST_CASE("gradient clipping") {
    std::vector<double> g{3, 4};
    CHECK(clip_grad_norm(g, 1.0) == doctest::Approx(5.0));
    CHECK(g[0] == doctest::Approx(0.6));
    std::vector<double> small{0.1, 0.1};
    clip_grad_norm(small, 1.0);
    CHECK(small[0] == 0.1);
}

TEST_CASE("ppo objective identities") {
    PpoConfig cfg;
    cfg.C = 1;
    cfg.c2 = 0.0;
    std::mt19937_64 rng(1);
    ActorCritic ac(2, 2, 3, {4});
    ac.init(rng, 0.0, 1);
    std::vector<Sample> batch(2);
    batch[0] = {{0.3, -0.2}, {0.3, -0.2}, 0, 0.0, 1.5, 0.0};
    batch[1] = {{-1.0, 0.4}, {-1.0, 0.4}, 2, 0.0, -0.5, 0.0};
    for (Sample& s : batch) {
        s.old_logp = log_softmax(ac.policy.forward(s.policy_input))[s.action];
        s.ret = ac.v(s.value_input);
    }
    const auto l = ppo_losses(ac, batch, cfg);
    CHECK(l.l_clip == doctest::Approx(0.5));
    CHECK(l.l_value == doctest::Approx(0.0));
    CHECK(l.clip_fraction == 0.0);
    // Ratio 2 with a positive advantage contributes (1 + eps) * A.
    std::vector<Sample> one{batch[0]};
    one[0].old_logp -= std::log(2.0);
    CHECK(ppo_losses(ac, one, cfg).l_clip == doctest::Approx(1.2 * 1.5));
}

TEST_CASE("ppo gradients match finite differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto g = testing::ppo_gradcheck(seed);
        CHECK(g.policy_rel_error < 1e-4);
        CHECK(g.value_rel_error < 1e-4);
    }
}

TEST_CASE("initial no-move probability") {
    std::mt19937_64 rng(3);
    ActorCritic ac(5, 5, 9, {16});
    ac.init(rng, 0.6, 4);
    const std::vector<double> x{0.1, 0.2, -0.3, 0.0, 1.0};
    CHECK(ac.probs(x)[4] == doctest::Approx(0.6).epsilon(0.01));
}

TEST_CASE("training is seed-deterministic and independent of workers") {
    PpoConfig cfg;
    cfg.C = 2;
    cfg.updates = 5;
    cfg.rollout_clips = 3;
    cfg.hidden = {8};
    TargetActionEnv a(6, 0), b(6, 0), c(6, 0);
    const auto ck1 = train({&a, &b, &c}, cfg, 1);
    const auto ck2 = train({&a, &b, &c}, cfg, 3);
    CHECK(reward_trace_csv(ck1.trace) == reward_trace_csv(ck2.trace));
    CHECK(ck1.net.policy.params() == ck2.net.policy.params());
    CHECK(checkpoint_to_json(ck1) == checkpoint_to_json(checkpoint_from_json(checkpoint_to_json(ck1))));
}

TEST_CASE("policy evaluations are counted") {
    std::mt19937_64 rng(0);
    ActorCritic ac(2, 2, 3, {4});
    ac.init(rng, 0.0, 1);
    const auto before = policy_forward_count();
    const std::vector<double> x{0.0, 1.0};
    policy_probs(ac, x);
    policy_probs(ac, x);
    CHECK(policy_forward_count() - before == 2);
}

TEST_CASE("action sampling") {
    std::mt19937_64 rng(0);
    const std::vector<double> p{0.0, 1.0, 0.0};
    for (int i = 0; i < 20; ++i) CHECK(sample_action(p, rng) == 1);
    CHECK(argmax_action({0.1, 0.5, 0.5}) == 1);
}

TEST_CASE("opc environment") {
    const auto clip = testing::clip_of({testing::rect(300, 200, 360, 500), testing::rect(460, 200, 520, 420)}, 640, 640);
    OpcEnvConfig ec;
    ec.train_iters = 6;
    OpcEnv env(clip, LithoConfig{}, OpcConfig{}, MetricsConfig{}, 4, ec);
    const auto o = env.reset();
    CHECK(int(o.policy.size()) == env.policy_size());
    CHECK(int(o.value.size()) == env.value_size());
    // Zero moves leave the loss at its baseline.
    const auto s = env.step(0);
    CHECK(s.reward == doctest::Approx(0.0));
    CHECK(-s.raw_reward == doctest::Approx(env.baseline_loss()));
    // Class +C is a 40 nm offset.
    const auto& home = env.base_layout().points[3];
    const auto moved = apply_class(home, 4, 4, 1000);
    CHECK(moved.offset_nm == 40);
    int steps = 1;
    while (!env.step(0).done) ++steps;
    CHECK(steps + 1 == env.steps());
    CHECK_THROWS_AS(env.step(0), ContractError);
}

TEST_CASE("point encoding is fixed-length and deterministic") {
    const auto clip = testing::clip_of({testing::rect(300, 200, 360, 500)}, 640, 640);
    const auto layout = place_control_points(clip, FragmentPolicy{});
    EncodingConfig cfg;
    for (const auto& p : layout.points) {
        const auto e = encode_point(clip, layout, p, cfg);
        CHECK(int(e.size()) == policy_input_size(cfg));
        CHECK(e == encode_point(clip, layout, p, cfg));
    }
}

TEST_CASE("movement records") {
    ControlPoint p;
    p.id = 10;
    const auto m = make_movement("c0", p, 1, 4);
    CHECK(m.cls == 1);
    CHECK(m.distance_nm == 10);
    CHECK(m.sign == '+');
    CHECK(make_movement("c0", p, 0, 4).distance_nm == 0);
    const auto n = make_movement("c0", p, -3, 4);
    CHECK(n.offset_nm() == -30);
    const std::vector<MovementRecord> recs{m, n, make_movement("c1", p, 4, 4)};
    CHECK(movements_from_jsonl(movements_to_jsonl(recs)) == recs);
    CHECK(classes_for_clip(recs, "c1", 12)[10] == 4);
    CHECK(classes_for_clip(recs, "c1", 12)[0] == 0);
}
