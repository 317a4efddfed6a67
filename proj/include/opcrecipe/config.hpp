#pragma once

#include <string>
#include <vector>

#include "opcrecipe/annotator.hpp"
#include "opcrecipe/features.hpp"
#include "opcrecipe/opc.hpp"
#include "opcrecipe/recipes.hpp"
#include "opcrecipe/rl/env.hpp"
#include "opcrecipe/rl/ppo.hpp"
#include "opcrecipe/synth.hpp"

namespace opcrecipe {

struct SuiteConfig {
    int count = 20;
    SynthParams synth;
};

struct RunConfig {
    std::uint64_t seed = 0;
    int C = 4;
    std::string variant = "opc";  // opc, opc+rl or opc+llm
    std::string run_dir = "runs";
    std::string cache_dir = "cache";
    std::string tag = "run";
    int workers = 1;
    bool record_runtime = false;  // runtime column in metrics CSVs
    int held_out_every = 4;       // clip i is held out when i % n == n - 1
    int self_improve_rounds = 2;

    SuiteConfig suite;
    LithoConfig litho;
    OpcConfig opc;
    MetricsConfig metrics;
    rl::PpoConfig ppo;
    rl::OpcEnvConfig env;
    TreeParams tree;
    FeatureThresholds thresholds;
    AnnotatorConfig annotator;

    /// Every violated invariant, one message each.
    std::vector<std::string> violations() const;
    /// Throws ConfigError listing all violations.
    void validate() const;
};

/// Canonical JSON: every field, fixed key order.
std::string config_to_json(const RunConfig& cfg);
/// Missing keys keep their defaults; unknown keys are violations.
RunConfig config_from_json(const std::string& text);
/// Applies a JSON object of overrides on top of `base`.
RunConfig merge_config(const RunConfig& base, const std::string& overrides_json);

/// SHA-256 of the canonical JSON.
std::string config_hash(const RunConfig& cfg);

/// Defaults used by the acceptance suite and the `all` command: 640 nm clips
/// holding two or three shapes.
RunConfig desk_config();

}  // namespace opcrecipe
