#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "opcrecipe/config.hpp"
#include "opcrecipe/error.hpp"
#include "opcrecipe/rl/movements.hpp"

namespace opcrecipe {

// A prerequisite artifact is absent; the message names the command that
// produces it.
class MissingArtifactError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

struct StageTiming {
    std::string variant;
    double total_s = 0.0;
    std::int64_t policy_evaluations = 0;
};

inline constexpr const char* kVersion = "0.1.0";

// Run directory layout:
//   config/ manifests/ layouts/ checkpoints/ labels/ trees/ recipes/ metrics/ svg/
class Pipeline {
public:
    /// Creates the directory tree and writes config/config.json.
    Pipeline(RunConfig cfg, std::string run_dir);

    void gen();
    void ingest(const std::vector<std::string>& files);
    void opc();
    void rl_train();
    void annotate();
    void tree();
    void emit();
    /// Variant opc+rl (movement records) or opc+llm (recipe).
    void apply(const std::string& variant);
    void report();
    void svg();
    /// gen, opc, rl-train, apply opc+rl, annotate, tree, emit, apply opc+llm, report.
    void all();

    const std::string& dir() const { return dir_; }
    const RunConfig& config() const { return cfg_; }
    std::string path(const std::string& rel) const;

    std::vector<LayoutClip> load_clips() const;
    bool held_out(std::size_t clip_index) const;

private:
    void write(const std::string& rel, const std::string& content) const;
    std::string read(const std::string& rel, const char* producer) const;
    void manifest(const std::string& command, const std::vector<std::string>& inputs,
                  const std::vector<std::string>& outputs,
                  const std::map<std::string, std::string>& extra = {}) const;
    void save_clips(const std::vector<LayoutClip>& clips) const;
    void run_variant(const std::string& variant, const std::vector<ControlLayout>& layouts,
                     const std::vector<LayoutClip>& clips, std::int64_t policy_evals_before,
                     double setup_s, const std::vector<std::string>& inputs);

    RunConfig cfg_;
    std::string dir_;
};

/// Default run directory: <run_dir>/<YYYYmmdd-HHMMSS>-<tag>.
std::string timestamped_run_dir(const RunConfig& cfg);

/// Runs fn(i) for i in [0, n) on up to `workers` threads; the first exception
/// is rethrown after all threads stop.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// Overlay of the target, a corrected mask and the control points.
std::string clip_svg(const LayoutClip& clip, const std::vector<Polygon>& mask,
                     const ControlLayout& layout);

std::string mask_to_json(const std::string& clip_id, const std::vector<Polygon>& mask);
std::vector<Polygon> mask_from_json(const std::string& text);

std::string timing_to_json(const StageTiming& t);
StageTiming timing_from_json(const std::string& text);

}  // namespace opcrecipe
