#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "opcrecipe/error.hpp"
#include "opcrecipe/pipeline.hpp"

using namespace opcrecipe;

namespace {

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kRuntime = 3 };

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OPC recipe development pipeline"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path, out, variant, mode;
    std::int64_t seed = 0;
    int clips = 0, workers = 0;
    bool desk = false;
    std::vector<std::string> files;

    app.add_option("--config", config_path, "JSON file of configuration overrides");
    app.add_flag("--desk", desk, "start from the desk-scale defaults instead of the library defaults");
    auto* seed_opt = app.add_option("--seed", seed, "global seed");
    auto* clips_opt = app.add_option("--clips", clips, "number of synthetic clips for gen")->check(CLI::PositiveNumber);
    auto* workers_opt = app.add_option("--workers", workers, "worker threads for per-clip stages")->check(CLI::PositiveNumber);
    app.add_option("--mode", mode, "annotator mode")
        ->check(CLI::IsMember({"deterministic", "remote", "remote-with-fallback"}));
    app.add_option("--variant", variant, "apply/svg variant")->check(CLI::IsMember({"opc", "opc+rl", "opc+llm"}));
    app.add_option("--out", out, "run directory (default: <run_dir>/<timestamp>-<tag>)");

    const std::vector<std::pair<const char*, const char*>> commands = {
        {"gen", "generate the synthetic clip suite"},
        {"ingest", "copy layout files into the run"},
        {"opc", "baseline OPC and metrics"},
        {"rl-train", "train the placement policy and extract movement records"},
        {"annotate", "label every control point with geometric features"},
        {"tree", "train per-kind decision trees with self-improvement"},
        {"emit", "write the recipe as jsonl and downstream script"},
        {"apply", "OPC with recipe (opc+llm) or RL (opc+rl) point placement"},
        {"report", "ratio table against baseline OPC"},
        {"svg", "mask overlays for one variant"},
        {"all", "run the full pipeline"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : commands) subs.push_back(app.add_subcommand(name, help));
    subs[1]->add_option("files", files, "layout files")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    try {
        // Later stages inherit the configuration saved by the first one.
        const std::string saved = out.empty() ? "" : out + "/config/config.json";
        RunConfig cfg = !saved.empty() && std::ifstream(saved) ? config_from_json(read_text(saved))
                        : desk                                 ? desk_config()
                                                               : RunConfig{};
        if (!config_path.empty()) cfg = merge_config(cfg, read_text(config_path));
        if (*seed_opt) cfg.seed = seed;
        if (*clips_opt) cfg.suite.count = clips;
        if (*workers_opt) cfg.workers = workers;
        if (!mode.empty()) cfg.annotator.mode = annotator_mode_from_string(mode);
        if (!variant.empty()) cfg.variant = variant;
        cfg.validate();
        if (cmd == "apply" && cfg.variant == "opc")
            throw ValidationError("apply needs --variant opc+rl or opc+llm");
        if (out.empty()) {
            if (cmd != "gen" && cmd != "ingest" && cmd != "all")
                throw ValidationError("--out is required for '" + cmd + "'");
            out = timestamped_run_dir(cfg);
        }

        Pipeline p(cfg, out);
        if (cmd == "gen") p.gen();
        else if (cmd == "ingest") p.ingest(files);
        else if (cmd == "opc") p.opc();
        else if (cmd == "rl-train") p.rl_train();
        else if (cmd == "annotate") p.annotate();
        else if (cmd == "tree") p.tree();
        else if (cmd == "emit") p.emit();
        else if (cmd == "apply") p.apply(cfg.variant);
        else if (cmd == "report") p.report();
        else if (cmd == "svg") p.svg();
        else if (cmd == "all") p.all();
        std::cout << p.dir() << "\n";
        return kOk;
    } catch (const ValidationError& e) {
        std::cerr << "opcrecipe " << cmd << ": " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "opcrecipe " << cmd << ": " << e.what() << "\n";
        return kRuntime;
    }
}
