#include "opcrecipe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "opcrecipe/error.hpp"
#include "opcrecipe/layout_io.hpp"
#include "opcrecipe/prompts.hpp"
#include "opcrecipe/rl/trainer.hpp"

namespace opcrecipe {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

namespace {

const char* const kSubdirs[] = {"config", "manifests", "layouts", "checkpoints", "labels",
                                "trees",  "recipes",   "metrics", "svg"};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string variant_file(const std::string& variant) { return "metrics/" + variant + ".csv"; }

}  // namespace

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    const std::size_t k = std::min<std::size_t>(std::max(1, workers), n);
    if (k <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex m;
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < k; ++t)
        threads.emplace_back([&] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(m);
                    if (!failure) failure = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::string timestamped_run_dir(const RunConfig& cfg) {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
    return (fs::path(cfg.run_dir) / (std::string(buf) + "-" + cfg.tag)).string();
}

Pipeline::Pipeline(RunConfig cfg, std::string run_dir) : cfg_(std::move(cfg)), dir_(std::move(run_dir)) {
    cfg_.ppo.C = cfg_.C;
    cfg_.ppo.seed = cfg_.seed;
    cfg_.validate();
    for (const char* s : kSubdirs) fs::create_directories(fs::path(dir_) / s);
    write("config/config.json", config_to_json(cfg_));
}

std::string Pipeline::path(const std::string& rel) const { return (fs::path(dir_) / rel).string(); }

void Pipeline::write(const std::string& rel, const std::string& content) const {
    const fs::path p = path(rel);
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    out << content;
}

std::string Pipeline::read(const std::string& rel, const char* producer) const {
    const fs::path p = path(rel);
    if (!fs::exists(p))
        throw MissingArtifactError("missing " + rel + " in " + dir_ + "; run `opcrecipe " +
                                   producer + "` first");
    return slurp(p);
}

void Pipeline::manifest(const std::string& command, const std::vector<std::string>& inputs,
                        const std::vector<std::string>& outputs,
                        const std::map<std::string, std::string>& extra) const {
    ojson j;
    j["command"] = command;
    j["version"] = kVersion;
    j["seed"] = cfg_.seed;
    j["config_hash"] = config_hash(cfg_);
    ojson in = ojson::object(), out = ojson::object();
    for (const auto& rel : inputs) in[rel] = sha256_hex(slurp(path(rel)));
    for (const auto& rel : outputs) out[rel] = sha256_hex(slurp(path(rel)));
    j["inputs"] = in;
    j["outputs"] = out;
    for (const auto& [k, v] : extra) j[k] = v;
    std::string name = command;
    std::replace(name.begin(), name.end(), '+', '_');
    write("manifests/" + name + ".json", j.dump(2) + "\n");
}

// ---- clips -----------------------------------------------------------------

void Pipeline::save_clips(const std::vector<LayoutClip>& clips) const {
    std::string index;
    std::vector<std::string> outputs{"layouts/index.txt"};
    for (const LayoutClip& c : clips) {
        write("layouts/" + c.id + ".clip", format_layout(c));
        index += c.id + "\n";
        outputs.push_back("layouts/" + c.id + ".clip");
    }
    write("layouts/index.txt", index);
}

std::vector<LayoutClip> Pipeline::load_clips() const {
    std::istringstream in(read("layouts/index.txt", "gen` or `opcrecipe ingest"));
    std::vector<LayoutClip> clips;
    for (std::string id; std::getline(in, id);)
        if (!id.empty()) clips.push_back(parse_layout(read("layouts/" + id + ".clip", "gen")));
    if (clips.empty()) throw ValidationError("layouts/index.txt lists no clips");
    return clips;
}

bool Pipeline::held_out(std::size_t i) const {
    return int(i % cfg_.held_out_every) == cfg_.held_out_every - 1;
}

void Pipeline::gen() {
    const auto clips = synth_suite(cfg_.seed, cfg_.suite.count, cfg_.suite.synth);
    save_clips(clips);
    std::vector<std::string> outs{"layouts/index.txt"};
    for (const auto& c : clips) outs.push_back("layouts/" + c.id + ".clip");
    manifest("gen", {"config/config.json"}, outs);
}

void Pipeline::ingest(const std::vector<std::string>& files) {
    if (files.empty()) throw ValidationError("ingest needs at least one layout file");
    std::vector<LayoutClip> clips;
    for (const auto& f : files) clips.push_back(read_layout_file(f));
    std::vector<std::string> ids;
    for (const auto& c : clips) {
        if (std::find(ids.begin(), ids.end(), c.id) != ids.end())
            throw ValidationError("duplicate clip id '" + c.id + "'");
        ids.push_back(c.id);
    }
    save_clips(clips);
    std::vector<std::string> outs{"layouts/index.txt"};
    for (const auto& c : clips) outs.push_back("layouts/" + c.id + ".clip");
    manifest("ingest", {}, outs);
}

// ---- OPC variants ----------------------------------------------------------

void Pipeline::run_variant(const std::string& variant, const std::vector<ControlLayout>& layouts,
                           const std::vector<LayoutClip>& clips, std::int64_t evals_before,
                           double setup_s, const std::vector<std::string>& inputs) {
    const auto t0 = Clock::now();
    std::vector<MetricsRow> rows(clips.size());
    std::vector<std::vector<Polygon>> masks(clips.size());
    parallel_for(clips.size(), cfg_.workers, [&](std::size_t i) {
        const auto c0 = Clock::now();
        const OpcResult r = run_opc(clips[i], cfg_.litho, cfg_.opc, cfg_.metrics, layouts[i]);
        MetricsRow row;
        row.clip_id = clips[i].id;
        row.variant = variant;
        row.pvb = r.final.pvb.value;
        row.epe_n = r.final.epe.epe_n;
        row.epe_d = r.final.epe.epe_d;
        row.l2 = r.final.loss.l2;
        row.loss_total = r.final.loss.total;
        if (cfg_.record_runtime) row.runtime_ms = 1000.0 * seconds_since(c0);
        rows[i] = std::move(row);
        masks[i] = r.mask;
    });
    StageTiming timing{variant, setup_s + seconds_since(t0),
                       rl::policy_forward_count() - evals_before};
    write(variant_file(variant), metrics_csv(rows));
    std::vector<std::string> outs{variant_file(variant)};
    for (std::size_t i = 0; i < clips.size(); ++i) {
        const std::string rel = "layouts/masks/" + variant + "/" + clips[i].id + ".json";
        write(rel, mask_to_json(clips[i].id, masks[i]));
        outs.push_back(rel);
    }
    write("metrics/timing_" + variant + ".json", timing_to_json(timing));
    manifest(variant == "opc" ? "opc" : "apply_" + variant, inputs, outs,
             {{"policy_evaluations", std::to_string(timing.policy_evaluations)}});
}

void Pipeline::opc() {
    const auto evals = rl::policy_forward_count();
    const auto t0 = Clock::now();
    const auto clips = load_clips();
    std::vector<ControlLayout> layouts;
    for (const auto& c : clips) layouts.push_back(place_control_points(c, cfg_.opc.fragment_policy));
    run_variant("opc", layouts, clips, evals, seconds_since(t0), {"layouts/index.txt"});
}

void Pipeline::apply(const std::string& variant) {
    const auto evals = rl::policy_forward_count();
    const auto t0 = Clock::now();
    const auto clips = load_clips();
    std::vector<ControlLayout> layouts(clips.size());
    std::vector<std::string> inputs{"layouts/index.txt"};
    if (variant == "opc+rl") {
        const auto moves = rl::movements_from_jsonl(read("labels/movements.jsonl", "rl-train"));
        inputs.push_back("labels/movements.jsonl");
        for (std::size_t i = 0; i < clips.size(); ++i) {
            const ControlLayout base = place_control_points(clips[i], cfg_.opc.fragment_policy);
            layouts[i] = apply_classes(base, rl::classes_for_clip(moves, clips[i].id, base.points.size()),
                                       cfg_.C);
        }
    } else if (variant == "opc+llm") {
        const auto rules = parse_jsonl(read("recipes/recipe.jsonl", "emit"));
        FeaturePool pool;
        {
            const auto j = ojson::parse(read("trees/pool.json", "tree"));
            for (const auto& f : j.at("features"))
                pool.features.push_back({f.at("name").get<std::string>(), f.at("description").get<std::string>()});
            pool.thresholds = cfg_.thresholds;
        }
        inputs.insert(inputs.end(), {"recipes/recipe.jsonl", "trees/pool.json"});
        parallel_for(clips.size(), cfg_.workers, [&](std::size_t i) {
            const ControlLayout base = place_control_points(clips[i], cfg_.opc.fragment_policy);
            layouts[i] = apply_recipe_points(clips[i], base, rules, pool, cfg_.C);
        });
    } else {
        throw ValidationError("apply variant must be opc+rl or opc+llm, got '" + variant + "'");
    }
    run_variant(variant, layouts, clips, evals, seconds_since(t0), inputs);
}

// ---- stage 1 ---------------------------------------------------------------

void Pipeline::rl_train() {
    const auto clips = load_clips();
    std::vector<std::unique_ptr<rl::OpcEnv>> envs(clips.size());
    parallel_for(clips.size(), cfg_.workers, [&](std::size_t i) {
        envs[i] = std::make_unique<rl::OpcEnv>(clips[i], cfg_.litho, cfg_.opc, cfg_.metrics, cfg_.C, cfg_.env);
    });
    std::vector<rl::Environment*> ptrs;
    for (auto& e : envs) ptrs.push_back(e.get());
    const rl::PolicyCheckpoint ck = rl::train(ptrs, cfg_.ppo, cfg_.workers);
    write("checkpoints/policy.json", rl::checkpoint_to_json(ck));
    write("checkpoints/reward_trace.csv", rl::reward_trace_csv(ck.trace));
    const auto moves = rl::extract_movements(ck, clips, cfg_.opc.fragment_policy, cfg_.env.encoding);
    write("labels/movements.jsonl", rl::movements_to_jsonl(moves));
    manifest("rl-train", {"layouts/index.txt"},
             {"checkpoints/policy.json", "checkpoints/reward_trace.csv", "labels/movements.jsonl"},
             {{"diverged", ck.diverged ? "true" : "false"}});
    if (ck.diverged) throw TrainingError("PPO diverged; last finite policy saved to checkpoints/policy.json");
}

// ---- stage 2 ---------------------------------------------------------------

namespace {

std::string pool_to_json(const FeaturePool& pool) {
    ojson j;
    ojson arr = ojson::array();
    for (const auto& f : pool.features) arr.push_back({{"name", f.name}, {"description", f.description}});
    j["features"] = arr;
    return j.dump(1) + "\n";
}

}  // namespace

void Pipeline::annotate() {
    const auto clips = load_clips();
    const auto moves = rl::movements_from_jsonl(read("labels/movements.jsonl", "rl-train"));
    AnnotatorConfig acfg = cfg_.annotator;
    acfg.cache_dir = cfg_.cache_dir.empty() ? "" : (fs::path(cfg_.cache_dir) / "annotator").string();
    Annotator annotator(acfg);
    FeaturePool pool;
    if (acfg.mode == AnnotatorMode::Deterministic) {
        pool = builtin_pool();
    } else {
        // Seed mining with one EPE point per clip.
        std::vector<RenderedPointImage> images;
        for (const auto& c : clips) {
            const ControlLayout l = place_control_points(c, cfg_.opc.fragment_policy);
            const auto it = std::find_if(l.points.begin(), l.points.end(),
                                         [](const ControlPoint& p) { return p.kind == PointKind::Epe; });
            if (it != l.points.end()) images.push_back(render_point_image(c, l, *it, acfg.canvas_px));
        }
        pool = annotator.mine_features(images, prompts::kFeatureMining);
    }
    pool.thresholds = cfg_.thresholds;
    std::vector<std::vector<LabelRecord>> per_clip(clips.size());
    // Remote requests are already bounded inside annotate_clip.
    const int workers = acfg.mode == AnnotatorMode::Deterministic ? cfg_.workers : 1;
    parallel_for(clips.size(), workers, [&](std::size_t i) {
        const ControlLayout l = place_control_points(clips[i], cfg_.opc.fragment_policy);
        const auto classes = rl::classes_for_clip(moves, clips[i].id, l.points.size());
        const auto vecs = annotator.annotate_clip(clips[i], l, pool);
        for (std::size_t k = 0; k < vecs.size(); ++k) per_clip[i].push_back({clips[i].id, vecs[k], classes[k]});
    });
    std::vector<LabelRecord> all;
    for (auto& v : per_clip) all.insert(all.end(), v.begin(), v.end());
    write("labels/labels.jsonl", labels_to_jsonl(all));
    write("labels/pool.json", pool_to_json(pool));
    const AnnotateStats st = annotator.stats();
    manifest("annotate", {"layouts/index.txt", "labels/movements.jsonl"},
             {"labels/labels.jsonl", "labels/pool.json"},
             {{"mode", to_string(acfg.mode)},
              {"network_requests", std::to_string(st.network_requests)},
              {"cache_hits", std::to_string(st.cache_hits)},
              {"fallbacks", std::to_string(st.fallbacks)}});
}

void Pipeline::tree() {
    const auto clips = load_clips();
    const auto records = labels_from_jsonl(read("labels/labels.jsonl", "annotate"));
    FeaturePool pool;
    for (const auto& f : ojson::parse(read("labels/pool.json", "annotate")).at("features"))
        pool.features.push_back({f.at("name").get<std::string>(), f.at("description").get<std::string>()});
    pool.thresholds = cfg_.thresholds;

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < clips.size(); ++i) index[clips[i].id] = i;
    std::vector<LabelRecord> train, held;
    for (const auto& r : records) {
        const auto it = index.find(r.clip_id);
        if (it == index.end()) throw ValidationError("label for unknown clip '" + r.clip_id + "'");
        (held_out(it->second) ? held : train).push_back(r);
    }
    std::vector<ControlLayout> layouts;
    for (const auto& c : clips) layouts.push_back(place_control_points(c, cfg_.opc.fragment_policy));
    AnnotatorConfig acfg = cfg_.annotator;
    acfg.cache_dir = cfg_.cache_dir.empty() ? "" : (fs::path(cfg_.cache_dir) / "annotator").string();
    Annotator annotator(acfg);
    Relabeler relabel = [&](std::vector<LabelRecord>& recs, const std::vector<FeatureDef>& added) {
        FeaturePool extra;
        extra.features = added;
        extra.thresholds = cfg_.thresholds;
        for (auto& r : recs) {
            const std::size_t ci = index.at(r.clip_id);
            const ControlPoint& p = layouts[ci].points.at(r.features.point_id);
            const FeatureVector v = annotator.annotate_point(clips[ci], layouts[ci], p, extra);
            r.features.values.insert(r.features.values.end(), v.values.begin(), v.values.end());
        }
    };
    FeatureSource source = acfg.mode == AnnotatorMode::Deterministic ? reserve_source(reserve_pool())
                                                                     : reserve_source(reserve_pool());
    const ImproveResult res = self_improve(pool, train, held, cfg_.self_improve_rounds, cfg_.C,
                                           cfg_.tree, source, relabel);

    std::vector<std::string> outs;
    std::vector<int> truth, pred;
    ojson importance_rows = ojson::array();
    std::string imp_csv = "feature";
    for (const auto& t : res.trees) imp_csv += std::string(",") + to_string(t.kind);
    imp_csv += "\n";
    std::vector<std::map<std::string, double>> imps;
    for (const auto& t : res.trees) {
        const std::string kind = to_string(t.kind);
        write("trees/tree_" + kind + ".json", tree_to_json(t));
        outs.push_back("trees/tree_" + kind + ".json");
        const Dataset d = make_dataset(res.held_out, t.kind, t.features);
        if (d.size()) {
            write("trees/report_" + kind + ".json", report_to_json(evaluate(t, d)));
            outs.push_back("trees/report_" + kind + ".json");
        }
        imps.push_back(feature_importance(t));
    }
    for (const auto& col : training_columns(res.pool)) {
        imp_csv += col;
        char buf[32];
        for (const auto& m : imps) {
            std::snprintf(buf, sizeof buf, ",%.6f", m.count(col) ? m.at(col) : 0.0);
            imp_csv += buf;
        }
        imp_csv += "\n";
    }
    for (const auto& r : res.held_out) {
        truth.push_back(r.result);
        const auto it = std::find_if(res.trees.begin(), res.trees.end(),
                                     [&](const DecisionTree& t) { return t.kind == r.features.kind; });
        pred.push_back(it == res.trees.end() ? 0 : it->predict(r.features));
    }
    write("trees/report.json", report_to_json(evaluate(truth, pred, cfg_.C)));
    write("trees/importance.csv", imp_csv);
    write("trees/pool.json", pool_to_json(res.pool));
    ojson audit = ojson::array();
    for (const auto& a : res.audit)
        audit.push_back({{"round", a.round},
                         {"removed", a.removed},
                         {"added", a.added},
                         {"train_accuracy", a.train_accuracy},
                         {"held_out_accuracy", a.held_out_accuracy}});
    write("trees/audit.json", ojson{{"rounds", audit}, {"exhausted", res.exhausted}}.dump(1) + "\n");
    std::vector<LabelRecord> final_labels = res.train;
    final_labels.insert(final_labels.end(), res.held_out.begin(), res.held_out.end());
    write("labels/labels_final.jsonl", labels_to_jsonl(final_labels));
    outs.insert(outs.end(), {"trees/report.json", "trees/importance.csv", "trees/pool.json",
                             "trees/audit.json", "labels/labels_final.jsonl"});
    manifest("tree", {"labels/labels.jsonl", "labels/pool.json"}, outs);
}

void Pipeline::emit() {
    std::vector<RecipeRule> rules;
    std::vector<std::string> inputs;
    for (const char* kind : {"EPE", "FRAG"}) {
        const std::string rel = std::string("trees/tree_") + kind + ".json";
        if (!fs::exists(path(rel))) continue;
        const auto r = emit_rules(tree_from_json(read(rel, "tree")));
        rules.insert(rules.end(), r.begin(), r.end());
        inputs.push_back(rel);
    }
    if (inputs.empty()) throw MissingArtifactError("no trees in " + dir_ + "; run `opcrecipe tree` first");
    FeaturePool pool;
    for (const auto& f : ojson::parse(read("trees/pool.json", "tree")).at("features"))
        pool.features.push_back({f.at("name").get<std::string>(), f.at("description").get<std::string>()});
    inputs.push_back("trees/pool.json");
    validate_rules(rules, training_columns(pool));
    write("recipes/recipe.jsonl", emit_jsonl(rules));
    write("recipes/recipe_downstream.txt", emit_downstream(rules, default_naming(pool), cfg_.C));
    manifest("emit", inputs, {"recipes/recipe.jsonl", "recipes/recipe_downstream.txt"});
}

// ---- reporting -------------------------------------------------------------

void Pipeline::report() {
    const auto base = parse_metrics_csv(read(variant_file("opc"), "opc"));
    std::vector<std::string> names{"OPC"};
    std::vector<VariantSummary> variants;
    std::vector<std::string> inputs{variant_file("opc")};
    for (const auto& [v, label] : std::vector<std::pair<std::string, std::string>>{
             {"opc+llm", "OPC+LLM"}, {"opc+rl", "OPC+RL"}}) {
        if (!fs::exists(path(variant_file(v)))) continue;
        variants.push_back(summarize(v, parse_metrics_csv(read(variant_file(v), "apply"))));
        names.push_back(label);
        inputs.push_back(variant_file(v));
    }
    write("metrics/table.csv", ratio_table_csv(names, ratio_table(summarize("opc", base), variants)));
    manifest("report", inputs, {"metrics/table.csv"});
}

void Pipeline::svg() {
    const auto clips = load_clips();
    std::vector<std::string> outs;
    const std::string variant = cfg_.variant;
    const std::string producer = variant == "opc" ? "opc" : "apply";
    for (const auto& c : clips) {
        const auto mask = mask_from_json(read("layouts/masks/" + variant + "/" + c.id + ".json", producer.c_str()));
        const ControlLayout l = place_control_points(c, cfg_.opc.fragment_policy);
        write("svg/" + c.id + "." + variant + ".svg", clip_svg(c, mask, l));
        outs.push_back("svg/" + c.id + "." + variant + ".svg");
    }
    manifest("svg", {"layouts/index.txt"}, outs);
}

void Pipeline::all() {
    gen();
    opc();
    rl_train();
    apply("opc+rl");
    annotate();
    tree();
    emit();
    apply("opc+llm");
    report();
}

// ---- small formats ---------------------------------------------------------

std::string clip_svg(const LayoutClip& clip, const std::vector<Polygon>& mask,
                     const ControlLayout& layout) {
    std::ostringstream os;
    const int w = clip.width_nm, h = clip.height_nm;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << w << ' ' << h
       << "\" width=\"" << w << "\" height=\"" << h << "\">\n";
    os << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    auto path = [&](const Polygon& p, const char* style) {
        os << "<path d=\"";
        for (std::size_t i = 0; i < p.size(); ++i) {
            const Point v = p.vertex(i);
            os << (i ? " L" : "M") << v.x << ',' << (h - v.y);
        }
        os << " Z\" " << style << "/>\n";
    };
    for (const auto& p : mask) path(p, "fill=\"#9ecae1\" stroke=\"none\"");
    for (const auto& p : clip.polygons) path(p, "fill=\"none\" stroke=\"black\" stroke-width=\"1\"");
    for (const ControlPoint& pt : layout.points) {
        const PointF at = point_location(layout, pt);
        os << "<circle cx=\"" << at.x << "\" cy=\"" << (h - at.y) << "\" r=\"3\" fill=\""
           << (pt.kind == PointKind::Epe ? "red" : "green") << "\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string mask_to_json(const std::string& clip_id, const std::vector<Polygon>& mask) {
    ojson j;
    j["clip_id"] = clip_id;
    ojson polys = ojson::array();
    for (const auto& p : mask) {
        ojson coords = ojson::array();
        for (std::size_t i = 0; i < p.size(); ++i) {
            coords.push_back(p.vertex(i).x);
            coords.push_back(p.vertex(i).y);
        }
        polys.push_back(coords);
    }
    j["polygons"] = polys;
    return j.dump() + "\n";
}

std::vector<Polygon> mask_from_json(const std::string& text) {
    std::vector<Polygon> out;
    try {
        for (const auto& coords : ojson::parse(text).at("polygons")) {
            std::vector<Point> pts;
            for (std::size_t i = 0; i + 1 < coords.size(); i += 2)
                pts.push_back({coords[i].get<int>(), coords[i + 1].get<int>()});
            out.push_back(make_polygon(std::move(pts)));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed mask file: ") + e.what());
    }
    return out;
}

std::string timing_to_json(const StageTiming& t) {
    return ojson{{"variant", t.variant}, {"total_s", t.total_s}, {"policy_evaluations", t.policy_evaluations}}
               .dump(1) + "\n";
}

StageTiming timing_from_json(const std::string& text) {
    const auto j = ojson::parse(text);
    return {j.at("variant").get<std::string>(), j.at("total_s").get<double>(),
            j.at("policy_evaluations").get<std::int64_t>()};
}

}  // namespace opcrecipe
