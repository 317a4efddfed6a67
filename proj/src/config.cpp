#include "opcrecipe/config.hpp"

#include <set>

#include <json.hpp>

#include "opcrecipe/error.hpp"

namespace opcrecipe {

using ojson = nlohmann::ordered_json;

namespace {

// Reads or writes one object level; unknown keys and type errors are
// collected as violations rather than thrown one at a time.
struct Reader {
    const ojson& j;
    std::string path;
    std::vector<std::string>& errors;
    std::set<std::string> seen;

    template <typename T>
    void field(const char* key, T& out) {
        seen.insert(key);
        if (!j.contains(key)) return;
        try {
            out = j.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            errors.push_back(path + key + ": wrong type");
        }
    }
    const ojson* object(const char* key) {
        seen.insert(key);
        if (!j.contains(key)) return nullptr;
        if (!j.at(key).is_object()) {
            errors.push_back(path + key + ": expected an object");
            return nullptr;
        }
        return &j.at(key);
    }
    void finish() {
        for (const auto& [k, v] : j.items())
            if (!seen.count(k)) errors.push_back(path + k + ": unknown key");
    }
};

ojson synth_json(const SynthParams& s) {
    return {{"width_nm", s.width_nm},         {"height_nm", s.height_nm},
            {"margin_nm", s.margin_nm},       {"min_width_nm", s.min_width_nm},
            {"max_width_nm", s.max_width_nm}, {"min_space_nm", s.min_space_nm},
            {"min_length_nm", s.min_length_nm}, {"max_length_nm", s.max_length_nm},
            {"allow_jogs", s.allow_jogs},     {"min_jog_nm", s.min_jog_nm},
            {"max_jog_nm", s.max_jog_nm},     {"min_shapes", s.min_shapes},
            {"max_shapes", s.max_shapes},     {"max_attempts", s.max_attempts}};
}

void read_synth(Reader r, SynthParams& s) {
    r.field("width_nm", s.width_nm);
    r.field("height_nm", s.height_nm);
    r.field("margin_nm", s.margin_nm);
    r.field("min_width_nm", s.min_width_nm);
    r.field("max_width_nm", s.max_width_nm);
    r.field("min_space_nm", s.min_space_nm);
    r.field("min_length_nm", s.min_length_nm);
    r.field("max_length_nm", s.max_length_nm);
    r.field("allow_jogs", s.allow_jogs);
    r.field("min_jog_nm", s.min_jog_nm);
    r.field("max_jog_nm", s.max_jog_nm);
    r.field("min_shapes", s.min_shapes);
    r.field("max_shapes", s.max_shapes);
    r.field("max_attempts", s.max_attempts);
    r.finish();
}

ojson to_json(const RunConfig& c) {
    ojson j;
    j["seed"] = c.seed;
    j["C"] = c.C;
    j["variant"] = c.variant;
    j["run_dir"] = c.run_dir;
    j["cache_dir"] = c.cache_dir;
    j["tag"] = c.tag;
    j["workers"] = c.workers;
    j["record_runtime"] = c.record_runtime;
    j["held_out_every"] = c.held_out_every;
    j["self_improve_rounds"] = c.self_improve_rounds;
    j["suite"] = {{"count", c.suite.count}, {"synth", synth_json(c.suite.synth)}};
    const LithoConfig& l = c.litho;
    j["litho"] = {{"kernel_sigma_nm", l.kernel_sigma_nm}, {"resist_threshold", l.resist_threshold},
                  {"resist_steepness", l.resist_steepness}, {"dose_nominal", l.dose_nominal},
                  {"dose_delta", l.dose_delta},         {"pixel_nm", l.pixel_nm},
                  {"search_range_nm", l.search_range_nm}, {"search_step_nm", l.search_step_nm}};
    const OpcConfig& o = c.opc;
    j["opc"] = {{"max_iters", o.max_iters},
                {"gain", o.gain},
                {"per_iter_cap_nm", o.per_iter_cap_nm},
                {"stop_epsilon_nm", o.stop_epsilon_nm},
                {"max_bias_nm", o.max_bias_nm},
                {"coverage_mask", o.coverage_mask},
                {"epe_axis", o.epe_axis == MoveAxis::Tangential ? "tangential" : "normal"},
                {"fragment_policy",
                 {{"corner_segment_nm", o.fragment_policy.corner_segment_nm},
                  {"max_fragment_nm", o.fragment_policy.max_fragment_nm},
                  {"min_fragment_nm", o.fragment_policy.min_fragment_nm}}}};
    const MetricsConfig& m = c.metrics;
    j["metrics"] = {{"epe_threshold_nm", m.epe_threshold_nm},
                    {"guard_band_nm", m.guard_band_nm},
                    {"checker_pitch_nm", m.checker_pitch_nm},
                    {"alpha", m.weights.alpha},
                    {"beta", m.weights.beta},
                    {"gamma_w", m.weights.gamma_w},
                    {"epe_term", m.weights.epe_term == EpeTerm::Count ? "count" : "distance"}};
    const rl::PpoConfig& p = c.ppo;
    j["ppo"] = {{"discount_gamma", p.discount_gamma}, {"gae_lambda", p.gae_lambda},
                {"clip_eps", p.clip_eps},             {"c1", p.c1},
                {"c2", p.c2},                         {"learning_rate", p.learning_rate},
                {"epochs_per_update", p.epochs_per_update}, {"minibatch_size", p.minibatch_size},
                {"rollout_clips", p.rollout_clips},   {"updates", p.updates},
                {"hidden", p.hidden},                 {"max_grad_norm", p.max_grad_norm},
                {"init_zero_action_prob", p.init_zero_action_prob}};
    const rl::OpcEnvConfig& e = c.env;
    j["env"] = {{"train_iters", e.train_iters},
                {"truncation_penalty", e.truncation_penalty},
                {"incremental_reward", e.incremental_reward},
                {"window_px", e.encoding.window_px},
                {"window_pixel_nm", e.encoding.window_pixel_nm}};
    j["tree"] = {{"max_depth", c.tree.max_depth},
                 {"min_samples_leaf", c.tree.min_samples_leaf},
                 {"min_samples_split", c.tree.min_samples_split}};
    const FeatureThresholds& t = c.thresholds;
    j["features"] = {{"near_nm", t.near_nm},           {"far_nm", t.far_nm},
                     {"jog_nm", t.jog_nm},             {"long_path_nm", t.long_path_nm},
                     {"corner_seg_nm", t.corner_seg_nm}, {"ray_start_nm", t.ray_start_nm}};
    const AnnotatorConfig& a = c.annotator;
    j["annotator"] = {{"mode", to_string(a.mode)},       {"endpoint", a.endpoint},
                      {"model", a.model},                {"credential_env", a.credential_env},
                      {"timeout_s", a.timeout_s},        {"max_parallel", a.max_parallel},
                      {"attempts", a.attempts},          {"backoff_s", a.backoff_s},
                      {"canvas_px", a.canvas_px}};
    return j;
}

void from_json(const ojson& j, RunConfig& c, std::vector<std::string>& errors) {
    Reader r{j, "", errors, {}};
    r.field("seed", c.seed);
    r.field("C", c.C);
    r.field("variant", c.variant);
    r.field("run_dir", c.run_dir);
    r.field("cache_dir", c.cache_dir);
    r.field("tag", c.tag);
    r.field("workers", c.workers);
    r.field("record_runtime", c.record_runtime);
    r.field("held_out_every", c.held_out_every);
    r.field("self_improve_rounds", c.self_improve_rounds);
    if (const ojson* s = r.object("suite")) {
        Reader rs{*s, "suite.", errors, {}};
        rs.field("count", c.suite.count);
        if (const ojson* sy = rs.object("synth")) read_synth({*sy, "suite.synth.", errors, {}}, c.suite.synth);
        rs.finish();
    }
    if (const ojson* s = r.object("litho")) {
        Reader q{*s, "litho.", errors, {}};
        LithoConfig& l = c.litho;
        q.field("kernel_sigma_nm", l.kernel_sigma_nm);
        q.field("resist_threshold", l.resist_threshold);
        q.field("resist_steepness", l.resist_steepness);
        q.field("dose_nominal", l.dose_nominal);
        q.field("dose_delta", l.dose_delta);
        q.field("pixel_nm", l.pixel_nm);
        q.field("search_range_nm", l.search_range_nm);
        q.field("search_step_nm", l.search_step_nm);
        q.finish();
    }
    if (const ojson* s = r.object("opc")) {
        Reader q{*s, "opc.", errors, {}};
        OpcConfig& o = c.opc;
        q.field("max_iters", o.max_iters);
        q.field("gain", o.gain);
        q.field("per_iter_cap_nm", o.per_iter_cap_nm);
        q.field("stop_epsilon_nm", o.stop_epsilon_nm);
        q.field("max_bias_nm", o.max_bias_nm);
        q.field("coverage_mask", o.coverage_mask);
        std::string axis = o.epe_axis == MoveAxis::Tangential ? "tangential" : "normal";
        q.field("epe_axis", axis);
        if (axis == "tangential") o.epe_axis = MoveAxis::Tangential;
        else if (axis == "normal") o.epe_axis = MoveAxis::Normal;
        else errors.push_back("opc.epe_axis: expected tangential or normal");
        if (const ojson* f = q.object("fragment_policy")) {
            Reader qf{*f, "opc.fragment_policy.", errors, {}};
            qf.field("corner_segment_nm", o.fragment_policy.corner_segment_nm);
            qf.field("max_fragment_nm", o.fragment_policy.max_fragment_nm);
            qf.field("min_fragment_nm", o.fragment_policy.min_fragment_nm);
            qf.finish();
        }
        q.finish();
    }
    if (const ojson* s = r.object("metrics")) {
        Reader q{*s, "metrics.", errors, {}};
        MetricsConfig& m = c.metrics;
        q.field("epe_threshold_nm", m.epe_threshold_nm);
        q.field("guard_band_nm", m.guard_band_nm);
        q.field("checker_pitch_nm", m.checker_pitch_nm);
        q.field("alpha", m.weights.alpha);
        q.field("beta", m.weights.beta);
        q.field("gamma_w", m.weights.gamma_w);
        std::string term = m.weights.epe_term == EpeTerm::Count ? "count" : "distance";
        q.field("epe_term", term);
        if (term == "count") m.weights.epe_term = EpeTerm::Count;
        else if (term == "distance") m.weights.epe_term = EpeTerm::Distance;
        else errors.push_back("metrics.epe_term: expected count or distance");
        q.finish();
    }
    if (const ojson* s = r.object("ppo")) {
        Reader q{*s, "ppo.", errors, {}};
        rl::PpoConfig& p = c.ppo;
        q.field("discount_gamma", p.discount_gamma);
        q.field("gae_lambda", p.gae_lambda);
        q.field("clip_eps", p.clip_eps);
        q.field("c1", p.c1);
        q.field("c2", p.c2);
        q.field("learning_rate", p.learning_rate);
        q.field("epochs_per_update", p.epochs_per_update);
        q.field("minibatch_size", p.minibatch_size);
        q.field("rollout_clips", p.rollout_clips);
        q.field("updates", p.updates);
        q.field("hidden", p.hidden);
        q.field("max_grad_norm", p.max_grad_norm);
        q.field("init_zero_action_prob", p.init_zero_action_prob);
        q.finish();
    }
    if (const ojson* s = r.object("env")) {
        Reader q{*s, "env.", errors, {}};
        q.field("train_iters", c.env.train_iters);
        q.field("truncation_penalty", c.env.truncation_penalty);
        q.field("incremental_reward", c.env.incremental_reward);
        q.field("window_px", c.env.encoding.window_px);
        q.field("window_pixel_nm", c.env.encoding.window_pixel_nm);
        q.finish();
    }
    if (const ojson* s = r.object("tree")) {
        Reader q{*s, "tree.", errors, {}};
        q.field("max_depth", c.tree.max_depth);
        q.field("min_samples_leaf", c.tree.min_samples_leaf);
        q.field("min_samples_split", c.tree.min_samples_split);
        q.finish();
    }
    if (const ojson* s = r.object("features")) {
        Reader q{*s, "features.", errors, {}};
        FeatureThresholds& t = c.thresholds;
        q.field("near_nm", t.near_nm);
        q.field("far_nm", t.far_nm);
        q.field("jog_nm", t.jog_nm);
        q.field("long_path_nm", t.long_path_nm);
        q.field("corner_seg_nm", t.corner_seg_nm);
        q.field("ray_start_nm", t.ray_start_nm);
        q.finish();
    }
    if (const ojson* s = r.object("annotator")) {
        Reader q{*s, "annotator.", errors, {}};
        AnnotatorConfig& a = c.annotator;
        std::string mode = to_string(a.mode);
        q.field("mode", mode);
        try {
            a.mode = annotator_mode_from_string(mode);
        } catch (const ConfigError& e) {
            errors.push_back(std::string("annotator.mode: ") + e.what());
        }
        q.field("endpoint", a.endpoint);
        q.field("model", a.model);
        q.field("credential_env", a.credential_env);
        q.field("timeout_s", a.timeout_s);
        q.field("max_parallel", a.max_parallel);
        q.field("attempts", a.attempts);
        q.field("backoff_s", a.backoff_s);
        q.field("canvas_px", a.canvas_px);
        q.finish();
    }
    r.finish();
}

template <typename F>
void check(std::vector<std::string>& out, const char* where, F&& fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        out.push_back(std::string(where) + ": " + e.what());
    } catch (const ValidationError& e) {
        out.push_back(std::string(where) + ": " + e.what());
    }
}

}  // namespace

std::vector<std::string> RunConfig::violations() const {
    std::vector<std::string> v;
    if (C < 1 || 40 % C != 0) v.push_back("C must be a positive divisor of 40");
    if (variant != "opc" && variant != "opc+rl" && variant != "opc+llm")
        v.push_back("variant must be opc, opc+rl or opc+llm");
    if (workers < 1) v.push_back("workers must be >= 1");
    if (held_out_every < 2) v.push_back("held_out_every must be >= 2");
    if (self_improve_rounds < 1) v.push_back("self_improve_rounds must be >= 1");
    if (suite.count < 1) v.push_back("suite.count must be >= 1");
    if (ppo.C != C) v.push_back("ppo C must equal the run C");
    check(v, "suite.synth", [&] { suite.synth.validate(); });
    check(v, "litho", [&] { litho.validate(); });
    check(v, "opc", [&] { opc.validate(); });
    check(v, "metrics", [&] { metrics.validate(); });
    check(v, "ppo", [&] { ppo.validate(); });
    check(v, "tree", [&] { tree.validate(); });
    check(v, "features", [&] { thresholds.validate(); });
    check(v, "annotator", [&] { annotator.validate(); });
    if (env.train_iters < 1) v.push_back("env.train_iters must be >= 1");
    return v;
}

void RunConfig::validate() const {
    const auto v = violations();
    if (v.empty()) return;
    std::string msg = "invalid configuration:";
    for (const auto& s : v) msg += "\n  " + s;
    throw ConfigError(msg);
}

std::string config_to_json(const RunConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

RunConfig merge_config(const RunConfig& base, const std::string& overrides_json) {
    ojson j;
    try {
        j = ojson::parse(overrides_json);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("configuration is not JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    RunConfig c = base;
    std::vector<std::string> errors;
    from_json(j, c, errors);
    // The ppo block carries no C of its own.
    c.ppo.C = c.C;
    c.ppo.seed = c.seed;
    if (!errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& s : errors) msg += "\n  " + s;
        throw ConfigError(msg);
    }
    return c;
}

RunConfig config_from_json(const std::string& text) { return merge_config(RunConfig{}, text); }

std::string config_hash(const RunConfig& cfg) { return sha256_hex(to_json(cfg).dump()); }

RunConfig desk_config() {
    RunConfig c;
    c.suite.count = 20;
    SynthParams& s = c.suite.synth;
    s.width_nm = s.height_nm = 640;
    s.min_shapes = 2;
    s.max_shapes = 3;
    s.max_length_nm = s.width_nm - 2 * s.margin_nm - 20;
    c.ppo.init_zero_action_prob = 0.6;
    c.ppo.updates = 150;
    // Reward and reported loss weigh EPE by distance, the quantity compared
    // across variants, at a scale comparable to L2 and PV band.
    c.metrics.weights.epe_term = EpeTerm::Distance;
    c.metrics.weights.beta = 1.0;
    c.env.train_iters = 20;
    c.env.incremental_reward = true;
    return c;
}

}  // namespace opcrecipe
