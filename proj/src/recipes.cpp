#include "opcrecipe/recipes.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "opcrecipe/error.hpp"

namespace opcrecipe {

using ojson = nlohmann::ordered_json;

void TreeParams::validate() const {
    if (max_depth < 0) throw ConfigError("tree max_depth must be >= 0");
    if (min_samples_leaf < 1) throw ConfigError("tree min_samples_leaf must be >= 1");
    if (min_samples_split < 2) throw ConfigError("tree min_samples_split must be >= 2");
}

int DecisionTree::predict(const FeatureLookup& x) const {
    if (nodes.empty()) throw ContractError("predict on an untrained tree");
    int i = 0;
    while (!nodes[i].leaf()) i = x(nodes[i].feature) ? nodes[i].on_true : nodes[i].on_false;
    return nodes[i].cls;
}

int DecisionTree::predict(const FeatureVector& v) const {
    return predict([&](const std::string& n) { return v.get(n); });
}

int DecisionTree::depth() const {
    std::function<int(int)> rec = [&](int i) -> int {
        return nodes[i].leaf() ? 0 : 1 + std::max(rec(nodes[i].on_true), rec(nodes[i].on_false));
    };
    return nodes.empty() ? 0 : rec(0);
}

int DecisionTree::leaves() const {
    return static_cast<int>(std::count_if(nodes.begin(), nodes.end(),
                                          [](const TreeNode& n) { return n.leaf(); }));
}

std::vector<std::string> training_columns(const FeaturePool& pool) {
    auto cols = pool.names();
    for (const auto& t : type_feature_names()) cols.push_back(t);
    return cols;
}

Dataset make_dataset(const std::vector<LabelRecord>& records, PointKind kind,
                     const std::vector<std::string>& columns) {
    Dataset d;
    d.columns = columns;
    for (const LabelRecord& r : records) {
        if (r.features.kind != kind) continue;
        std::vector<bool> row;
        row.reserve(columns.size());
        for (const auto& c : columns) row.push_back(r.features.get(c));
        d.rows.push_back(std::move(row));
        d.labels.push_back(r.result);
    }
    return d;
}

double gini(const std::vector<int>& h) {
    const double n = std::accumulate(h.begin(), h.end(), 0.0);
    if (n == 0) return 0.0;
    double s = 1.0;
    for (int c : h) s -= (c / n) * (c / n);
    return s;
}

namespace {

int majority(const std::vector<int>& h, int C) {
    // Visit 0, -1, +1, -2, +2, ... so ties fall toward 0 and then negative.
    int best = 0, best_n = -1;
    for (int m = 0; m <= C; ++m)
        for (int cls : {-m, m}) {
            if (m == 0 && cls != 0) continue;
            if (h[cls + C] > best_n) {
                best_n = h[cls + C];
                best = cls;
            }
            if (m == 0) break;
        }
    return best;
}

struct Builder {
    const Dataset& data;
    int C;
    const TreeParams& p;
    std::vector<std::size_t> order;  // columns by name
    DecisionTree& tree;

    std::vector<int> histogram(const std::vector<std::size_t>& idx) const {
        std::vector<int> h(2 * C + 1, 0);
        for (std::size_t i : idx) ++h[data.labels[i] + C];
        return h;
    }

    int build(const std::vector<std::size_t>& idx, int depth) {
        const int me = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        TreeNode node;
        node.histogram = histogram(idx);
        node.samples = static_cast<int>(idx.size());
        node.gini = gini(node.histogram);
        node.cls = majority(node.histogram, C);

        std::size_t best_col = 0;
        double best_gain = 1e-12;
        bool found = false;
        if (depth < p.max_depth && node.gini > 0.0 && node.samples >= p.min_samples_split) {
            const double n = node.samples;
            for (std::size_t col : order) {
                std::vector<int> ht(2 * C + 1, 0), hf(2 * C + 1, 0);
                int nt = 0;
                for (std::size_t i : idx) {
                    if (data.rows[i][col]) {
                        ++ht[data.labels[i] + C];
                        ++nt;
                    } else {
                        ++hf[data.labels[i] + C];
                    }
                }
                const int nf = node.samples - nt;
                if (nt < p.min_samples_leaf || nf < p.min_samples_leaf) continue;
                const double gain = node.gini - (nt / n) * gini(ht) - (nf / n) * gini(hf);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_col = col;
                    found = true;
                }
            }
        }
        if (found) {
            std::vector<std::size_t> t, f;
            for (std::size_t i : idx) (data.rows[i][best_col] ? t : f).push_back(i);
            node.feature = data.columns[best_col];
            node.on_true = build(t, depth + 1);
            node.on_false = build(f, depth + 1);
        }
        tree.nodes[me] = std::move(node);
        return me;
    }
};

}  // namespace

DecisionTree train_tree(const Dataset& data, PointKind kind, int C, const TreeParams& params) {
    params.validate();
    if (C < 1) throw ConfigError("C must be >= 1");
    if (data.size() == 0) throw TrainingError("cannot train a tree on an empty dataset");
    if (std::set<std::string>(data.columns.begin(), data.columns.end()).size() != data.columns.size())
        throw TrainingError("duplicate training column");
    for (int y : data.labels)
        if (y < -C || y > C) throw TrainingError("label " + std::to_string(y) + " outside [-C, C]");
    DecisionTree tree;
    tree.kind = kind;
    tree.C = C;
    tree.params = params;
    tree.features = data.columns;
    Builder b{data, C, params, {}, tree};
    b.order.resize(data.columns.size());
    std::iota(b.order.begin(), b.order.end(), 0);
    std::sort(b.order.begin(), b.order.end(),
              [&](std::size_t a, std::size_t c) { return data.columns[a] < data.columns[c]; });
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    b.build(all, 0);
    return tree;
}

std::map<std::string, double> feature_importance(const DecisionTree& tree) {
    std::map<std::string, double> imp;
    for (const auto& f : tree.features) imp[f] = 0.0;
    if (tree.nodes.empty()) return imp;
    const double total = tree.nodes[0].samples;
    double sum = 0.0;
    for (const TreeNode& n : tree.nodes) {
        if (n.leaf()) continue;
        const TreeNode& t = tree.nodes[n.on_true];
        const TreeNode& f = tree.nodes[n.on_false];
        const double dec = (n.samples * n.gini - t.samples * t.gini - f.samples * f.gini) / total;
        imp[n.feature] += dec;
        sum += dec;
    }
    if (sum > 0)
        for (auto& [k, v] : imp) v /= sum;
    return imp;
}

TrainReport evaluate(const std::vector<int>& truth, const std::vector<int>& predicted, int C) {
    if (truth.size() != predicted.size()) throw ContractError("truth and predictions differ in size");
    const int k = 2 * C + 1;
    TrainReport r;
    for (int c = -C; c <= C; ++c) r.classes.push_back(c);
    r.confusion.assign(k, std::vector<int>(k, 0));
    r.support.assign(k, 0);
    r.precision.assign(k, 0.0);
    r.recall.assign(k, 0.0);
    r.f1.assign(k, 0.0);
    r.samples = static_cast<int>(truth.size());
    int correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < -C || truth[i] > C || predicted[i] < -C || predicted[i] > C)
            throw RangeError("class outside [-C, C] in evaluation");
        ++r.confusion[truth[i] + C][predicted[i] + C];
        ++r.support[truth[i] + C];
        correct += truth[i] == predicted[i];
    }
    int present = 0;
    for (int i = 0; i < k; ++i) {
        int pred_n = 0;
        for (int j = 0; j < k; ++j) pred_n += r.confusion[j][i];
        const int tp = r.confusion[i][i];
        if (pred_n) r.precision[i] = double(tp) / pred_n;
        if (r.support[i]) r.recall[i] = double(tp) / r.support[i];
        if (r.precision[i] + r.recall[i] > 0)
            r.f1[i] = 2 * r.precision[i] * r.recall[i] / (r.precision[i] + r.recall[i]);
        if (pred_n || r.support[i]) {
            ++present;
            r.macro_precision += r.precision[i];
            r.macro_recall += r.recall[i];
            r.macro_f1 += r.f1[i];
        }
    }
    if (present) {
        r.macro_precision /= present;
        r.macro_recall /= present;
        r.macro_f1 /= present;
    }
    r.accuracy = r.samples ? double(correct) / r.samples : 0.0;
    return r;
}

TrainReport evaluate(const DecisionTree& tree, const Dataset& held_out) {
    std::vector<int> pred;
    std::vector<std::size_t> col(tree.features.size());
    for (std::size_t j = 0; j < tree.features.size(); ++j) {
        const auto it = std::find(held_out.columns.begin(), held_out.columns.end(), tree.features[j]);
        if (it == held_out.columns.end())
            throw ValidationError("held-out data lacks column '" + tree.features[j] + "'");
        col[j] = static_cast<std::size_t>(it - held_out.columns.begin());
    }
    std::map<std::string, std::size_t> where;
    for (std::size_t j = 0; j < held_out.columns.size(); ++j) where[held_out.columns[j]] = j;
    for (const auto& row : held_out.rows)
        pred.push_back(tree.predict([&](const std::string& n) { return bool(row[where.at(n)]); }));
    return evaluate(held_out.labels, pred, tree.C);
}

// ---- serialization ---------------------------------------------------------

std::string tree_to_json(const DecisionTree& tree) {
    ojson j;
    j["format"] = "opcrecipe-tree";
    j["version"] = 1;
    j["kind"] = to_string(tree.kind);
    j["C"] = tree.C;
    j["params"] = {{"max_depth", tree.params.max_depth},
                   {"min_samples_leaf", tree.params.min_samples_leaf},
                   {"min_samples_split", tree.params.min_samples_split}};
    j["features"] = tree.features;
    ojson nodes = ojson::array();
    for (const TreeNode& n : tree.nodes) {
        ojson o;
        if (n.leaf()) {
            o["class"] = n.cls;
        } else {
            o["feature"] = n.feature;
            o["true"] = n.on_true;
            o["false"] = n.on_false;
        }
        o["samples"] = n.samples;
        o["gini"] = n.gini;
        o["histogram"] = n.histogram;
        nodes.push_back(o);
    }
    j["nodes"] = nodes;
    return j.dump(1) + "\n";
}

DecisionTree tree_from_json(const std::string& text) {
    try {
        const auto j = ojson::parse(text);
        if (j.at("format") != "opcrecipe-tree" || j.at("version") != 1)
            throw ValidationError("not an opcrecipe-tree version 1 document");
        DecisionTree t;
        t.kind = point_kind_from_string(j.at("kind").get<std::string>());
        t.C = j.at("C").get<int>();
        const auto& p = j.at("params");
        t.params = {p.at("max_depth").get<int>(), p.at("min_samples_leaf").get<int>(),
                    p.at("min_samples_split").get<int>()};
        t.features = j.at("features").get<std::vector<std::string>>();
        for (const auto& o : j.at("nodes")) {
            TreeNode n;
            if (o.contains("feature")) {
                n.feature = o.at("feature").get<std::string>();
                n.on_true = o.at("true").get<int>();
                n.on_false = o.at("false").get<int>();
            } else {
                n.cls = o.at("class").get<int>();
            }
            n.samples = o.at("samples").get<int>();
            n.gini = o.at("gini").get<double>();
            n.histogram = o.at("histogram").get<std::vector<int>>();
            t.nodes.push_back(std::move(n));
        }
        const int count = static_cast<int>(t.nodes.size());
        for (const TreeNode& n : t.nodes)
            if (!n.leaf() && (n.on_true <= 0 || n.on_true >= count || n.on_false <= 0 ||
                              n.on_false >= count))
                throw ValidationError("tree node child index out of range");
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed tree JSON: ") + e.what());
    }
}

std::string report_to_json(const TrainReport& r) {
    ojson j;
    j["samples"] = r.samples;
    j["accuracy"] = r.accuracy;
    j["macro_precision"] = r.macro_precision;
    j["macro_recall"] = r.macro_recall;
    j["macro_f1"] = r.macro_f1;
    ojson per = ojson::array();
    for (std::size_t i = 0; i < r.classes.size(); ++i)
        per.push_back({{"class", r.classes[i]},
                       {"precision", r.precision[i]},
                       {"recall", r.recall[i]},
                       {"f1", r.f1[i]},
                       {"support", r.support[i]}});
    j["per_class"] = per;
    j["confusion"] = r.confusion;
    return j.dump(1) + "\n";
}

// ---- rules -----------------------------------------------------------------

namespace {

std::pair<std::string, bool> parse_literal(const std::string& lit) {
    if (lit.rfind("not ", 0) == 0) return {lit.substr(4), false};
    return {lit, true};
}

}  // namespace

std::vector<RecipeRule> emit_rules(const DecisionTree& tree) {
    std::vector<RecipeRule> out;
    std::vector<std::string> path;
    std::function<void(int)> walk = [&](int i) {
        const TreeNode& n = tree.nodes[i];
        if (n.leaf()) {
            out.push_back({path, tree.kind, n.cls});
            return;
        }
        path.push_back(n.feature);
        walk(n.on_true);
        path.back() = "not " + n.feature;
        walk(n.on_false);
        path.pop_back();
    };
    if (!tree.nodes.empty()) walk(0);
    return out;
}

std::string emit_jsonl(const std::vector<RecipeRule>& rules) {
    std::string out;
    for (const RecipeRule& r : rules) {
        ojson j;
        j["condition"] = r.condition;
        j["type"] = to_string(r.type);
        j["class"] = r.cls;
        out += j.dump() + "\n";
    }
    return out;
}

std::vector<RecipeRule> parse_jsonl(const std::string& text) {
    std::vector<RecipeRule> out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = ojson::parse(line);
            RecipeRule r;
            r.condition = j.at("condition").get<std::vector<std::string>>();
            r.type = point_kind_from_string(j.at("type").get<std::string>());
            r.cls = j.at("class").get<int>();
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, std::string("bad recipe rule: ") + e.what());
        }
    }
    return out;
}

void validate_rules(const std::vector<RecipeRule>& rules, const std::vector<std::string>& known) {
    const std::set<std::string> names(known.begin(), known.end());
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < rules.size(); ++i) {
        std::map<std::string, bool> seen;
        for (const auto& lit : rules[i].condition) {
            const auto [name, positive] = parse_literal(lit);
            if (!names.count(name))
                problems.push_back("rule " + std::to_string(i) + ": unknown feature '" + name + "'");
            const auto it = seen.find(name);
            if (it != seen.end() && it->second != positive)
                problems.push_back("rule " + std::to_string(i) + ": '" + name +
                                   "' and its negation");
            seen[name] = positive;
        }
    }
    if (!problems.empty()) {
        std::string msg = "invalid recipe:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw RecipeError(msg);
    }
}

int apply_rules(const std::vector<RecipeRule>& rules, PointKind kind, const FeatureLookup& x) {
    for (const RecipeRule& r : rules) {
        if (r.type != kind) continue;
        const bool all = std::all_of(r.condition.begin(), r.condition.end(), [&](const auto& lit) {
            const auto [name, positive] = parse_literal(lit);
            return x(name) == positive;
        });
        if (all) return r.cls;
    }
    return 0;
}

int apply_rules(const std::vector<RecipeRule>& rules, const FeatureVector& v) {
    return apply_rules(rules, v.kind, [&](const std::string& n) { return v.get(n); });
}

DownstreamNaming default_naming(const FeaturePool& pool) {
    DownstreamNaming n;
    for (const auto& c : training_columns(pool)) n.tokens[c] = c;
    return n;
}

std::string emit_downstream(const std::vector<RecipeRule>& rules, const DownstreamNaming& naming,
                            int C) {
    std::vector<std::string> unmapped;
    std::vector<std::vector<std::string>> tags;  // distinct condition sets, first-seen order
    std::vector<int> tag_of;
    for (const RecipeRule& r : rules) {
        for (const auto& lit : r.condition) {
            const auto name = parse_literal(lit).first;
            if (!naming.tokens.count(name) &&
                std::find(unmapped.begin(), unmapped.end(), lit) == unmapped.end())
                unmapped.push_back(lit);
        }
        auto key = r.condition;
        std::sort(key.begin(), key.end());
        const auto it = std::find(tags.begin(), tags.end(), key);
        tag_of.push_back(static_cast<int>(it - tags.begin()));
        if (it == tags.end()) tags.push_back(key);
    }
    if (!unmapped.empty()) {
        std::string msg = "no downstream token for:";
        for (const auto& u : unmapped) msg += " '" + u + "'";
        throw RecipeError(msg);
    }
    std::ostringstream os;
    os << "# opcrecipe downstream recipe\n";
    os << "# layer " << naming.layer << ", offsets in um, class step " << 40 / C << " nm\n";
    // Tags are emitted in rule order so the script is stable for a fixed rule list.
    std::vector<bool> emitted(tags.size(), false);
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const int t = tag_of[i];
        if (emitted[t]) continue;
        emitted[t] = true;
        os << "NEWTAG edge " << naming.layer;
        for (const auto& lit : rules[i].condition) {
            const auto [name, positive] = parse_literal(lit);
            os << ' ' << (positive ? "" : "not ") << naming.tokens.at(name);
        }
        os << " -out tag" << t << '\n';
    }
    char um[32];
    for (std::size_t i = 0; i < rules.size(); ++i) {
        std::snprintf(um, sizeof um, "%.3f", class_to_offset(rules[i].cls, C) / 1000.0);
        if (rules[i].type == PointKind::Frag)
            os << "fragment_corner " << naming.layer << " convex concave mid_length " << um
               << " -tag tag" << tag_of[i] << '\n';
        else
            os << "retarget_layer " << naming.layer << " pattern_epe shift " << um << " -tag tag"
               << tag_of[i] << '\n';
    }
    return os.str();
}

ControlLayout apply_classes(const ControlLayout& base, const std::vector<int>& classes, int C) {
    if (classes.size() != base.points.size())
        throw ContractError("one class per control point is required");
    ControlLayout out = base;
    for (std::size_t i = 0; i < out.points.size(); ++i) {
        ControlPoint home = base.points[i];
        home.offset_nm = 0;
        home.clamped = false;
        out.points[i] = move_point_tangential(home, class_to_offset(classes[i], C),
                                              base.host(home).edge.length_nm);
    }
    return out;
}

ControlLayout apply_recipe_points(const LayoutClip& clip, const ControlLayout& base,
                                  const std::vector<RecipeRule>& rules, const FeaturePool& pool,
                                  int C) {
    validate_rules(rules, training_columns(pool));
    if (rules.empty()) return base;
    std::vector<int> classes;
    classes.reserve(base.points.size());
    for (const ControlPoint& p : base.points)
        classes.push_back(apply_rules(rules, label_point(clip, base, p, pool)));
    return apply_classes(base, classes, C);
}

// ---- self-improvement ------------------------------------------------------

const DecisionTree& tree_for(const std::vector<DecisionTree>& trees, PointKind kind) {
    for (const auto& t : trees)
        if (t.kind == kind) return t;
    throw ContractError(std::string("no tree for point kind ") + to_string(kind));
}

double accuracy(const std::vector<DecisionTree>& trees, const std::vector<LabelRecord>& records) {
    if (records.empty()) return 0.0;
    int correct = 0;
    for (const LabelRecord& r : records) {
        const auto it = std::find_if(trees.begin(), trees.end(),
                                     [&](const DecisionTree& t) { return t.kind == r.features.kind; });
        const int pred = it == trees.end() ? 0 : it->predict(r.features);
        correct += pred == r.result;
    }
    return double(correct) / records.size();
}

FeatureSource reserve_source(FeaturePool reserve) {
    return [reserve](const std::vector<std::string>&, const FeaturePool& current, int wanted) {
        std::vector<FeatureDef> out;
        for (const FeatureDef& f : reserve.features) {
            if (int(out.size()) >= wanted) break;
            if (!current.contains(f.name)) out.push_back(f);
        }
        return out;
    };
}

namespace {

std::vector<DecisionTree> train_all(const FeaturePool& pool, const std::vector<LabelRecord>& recs,
                                    int C, const TreeParams& params) {
    std::vector<DecisionTree> trees;
    const auto cols = training_columns(pool);
    for (PointKind k : {PointKind::Epe, PointKind::Frag}) {
        const Dataset d = make_dataset(recs, k, cols);
        if (d.size()) trees.push_back(train_tree(d, k, C, params));
    }
    if (trees.empty()) throw TrainingError("no training records");
    return trees;
}

}  // namespace

ImproveResult self_improve(FeaturePool pool, std::vector<LabelRecord> train,
                           std::vector<LabelRecord> held_out, int rounds, int C,
                           const TreeParams& params, const FeatureSource& source,
                           const Relabeler& relabel) {
    if (rounds < 1) throw ConfigError("self-improvement needs at least one round");
    ImproveResult res;
    res.trees = train_all(pool, train, C, params);
    res.audit.push_back({0, {}, {}, accuracy(res.trees, train), accuracy(res.trees, held_out)});
    // Retired names are never drawn again.
    std::set<std::string> retired;
    for (int round = 1; round <= rounds; ++round) {
        std::map<std::string, double> total;
        for (const auto& f : pool.features) total[f.name] = 0.0;
        for (const auto& t : res.trees)
            for (const auto& [name, v] : feature_importance(t))
                if (total.count(name)) total[name] += v;
        ImproveRound rec;
        rec.round = round;
        for (const auto& f : pool.features)
            if (total[f.name] == 0.0) rec.removed.push_back(f.name);
        if (rec.removed.empty()) {
            rec.train_accuracy = res.audit.back().train_accuracy;
            rec.held_out_accuracy = res.audit.back().held_out_accuracy;
            res.audit.push_back(rec);
            break;
        }
        const std::set<std::string> drop(rec.removed.begin(), rec.removed.end());
        retired.insert(drop.begin(), drop.end());
        std::erase_if(pool.features, [&](const FeatureDef& f) { return drop.count(f.name) > 0; });
        for (auto* set : {&train, &held_out})
            for (auto& r : *set)
                std::erase_if(r.features.values, [&](const auto& v) { return drop.count(v.first) > 0; });

        std::vector<FeatureDef> added;
        if (source) {
            FeaturePool view = pool;
            for (const auto& name : retired) view.features.push_back({name, ""});
            added = source(rec.removed, view, static_cast<int>(rec.removed.size()));
        }
        std::erase_if(added, [&](const FeatureDef& f) { return pool.contains(f.name) || retired.count(f.name); });
        if (added.size() < rec.removed.size()) res.exhausted = true;
        if (!added.empty()) {
            if (!relabel) throw ContractError("new features need a relabeler");
            relabel(train, added);
            relabel(held_out, added);
            for (const auto& f : added) {
                pool.features.push_back(f);
                rec.added.push_back(f.name);
            }
        }
        res.trees = train_all(pool, train, C, params);
        rec.train_accuracy = accuracy(res.trees, train);
        rec.held_out_accuracy = accuracy(res.trees, held_out);
        res.audit.push_back(rec);
        if (res.exhausted) break;
    }
    res.pool = std::move(pool);
    res.train = std::move(train);
    res.held_out = std::move(held_out);
    return res;
}

}  // namespace opcrecipe
