#include <doctest.h>

#include <map>
#include <random>

#include "opcrecipe/error.hpp"
#include "opcrecipe/recipes.hpp"
#include "opcrecipe/synth.hpp"
#include "oracles.hpp"

using namespace opcrecipe;

namespace {

// Brute-force best split: weighted Gini decrease for every column, first
// maximal column in lexicographic order.
struct SplitChoice {
    std::string feature;
    double decrease = 0.0;
};

double gini_of(const std::vector<int>& labels) {
    if (labels.empty()) return 0.0;
    std::map<int, int> n;
    for (int l : labels) ++n[l];
    double s = 1.0;
    for (auto [_, c] : n) s -= double(c) * c / (double(labels.size()) * labels.size());
    return s;
}

SplitChoice best_split(const Dataset& d, const std::vector<std::size_t>& rows) {
    std::vector<int> all;
    for (auto i : rows) all.push_back(d.labels[i]);
    const double parent = gini_of(all);
    std::vector<std::pair<std::string, std::size_t>> cols;
    for (std::size_t c = 0; c < d.columns.size(); ++c) cols.push_back({d.columns[c], c});
    std::sort(cols.begin(), cols.end());
    SplitChoice best;
    for (const auto& [name, c] : cols) {
        std::vector<int> t, f;
        for (auto i : rows) (d.rows[i][c] ? t : f).push_back(d.labels[i]);
        if (t.empty() || f.empty()) continue;
        const double dec = parent - (t.size() * gini_of(t) + f.size() * gini_of(f)) / rows.size();
        if (dec > best.decrease + 1e-12) best = {name, dec};
    }
    return best;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
    std::vector<std::size_t> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = i;
    return r;
}

Dataset hand_dataset() {
    return make_dataset(testing::hand_records(), PointKind::Epe, training_columns(testing::hand_pool()));
}

FeatureLookup lookup_of(const std::map<std::string, bool>& m) {
    return [&m](const std::string& n) { return m.at(n); };
}

}  // namespace

TEST_CASE("gini") {
    CHECK(gini({4, 0, 0}) == 0.0);
    CHECK(gini({2, 2}) == doctest::Approx(0.5));
    CHECK(gini({0, 0, 0}) == 0.0);
}

TEST_CASE("hand dataset tree matches exhaustive split enumeration") {
    const Dataset d = hand_dataset();
    const auto tree = train_tree(d, PointKind::Epe, 1, TreeParams{});
    const auto root = best_split(d, iota_rows(d.size()));
    CHECK(root.feature == "a");
    CHECK(root.decrease == doctest::Approx(0.375));
    REQUIRE(tree.nodes[0].feature == root.feature);
    // The a-true branch splits on b; the a-false branch is pure.
    std::vector<std::size_t> a_true;
    const auto col_a = std::find(d.columns.begin(), d.columns.end(), "a") - d.columns.begin();
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d.rows[i][col_a]) a_true.push_back(i);
    const auto second = best_split(d, a_true);
    CHECK(second.feature == "b");
    CHECK(second.decrease == doctest::Approx(0.5));
    const auto& t = tree.nodes[tree.nodes[0].on_true];
    CHECK(t.feature == "b");
    CHECK(tree.nodes[tree.nodes[0].on_false].leaf());
    CHECK(tree.nodes[tree.nodes[0].on_false].cls == 0);
    CHECK(tree.nodes[t.on_true].cls == 1);
    CHECK(tree.nodes[t.on_false].cls == -1);
    CHECK(tree.depth() == 2);
    CHECK(tree.leaves() == 3);

    const auto imp = feature_importance(tree);
    CHECK(imp.at("a") == doctest::Approx(0.6));
    CHECK(imp.at("b") == doctest::Approx(0.4));
    CHECK(imp.at("noise") == 0.0);
    CHECK(imp.at("type_H") == 0.0);
    // Identical input gives an identical tree.
    CHECK(tree_to_json(train_tree(d, PointKind::Epe, 1, TreeParams{})) == tree_to_json(tree));
    CHECK(tree_to_json(tree_from_json(tree_to_json(tree))) == tree_to_json(tree));
}

TEST_CASE("single leaf and separable cases") {
    Dataset same;
    same.columns = {"f", "g"};
    same.rows = {{true, false}, {false, true}, {true, true}};
    same.labels = {2, 2, 2};
    const auto leaf = train_tree(same, PointKind::Frag, 4, TreeParams{});
    CHECK(leaf.nodes.size() == 1);
    CHECK(leaf.nodes[0].cls == 2);
    for (const auto& [_, v] : feature_importance(leaf)) CHECK(v == 0.0);

    Dataset sep;
    sep.columns = {"f", "g"};
    sep.rows = {{true, false}, {true, true}, {false, false}, {false, true}};
    sep.labels = {1, 1, -1, -1};
    const auto t = train_tree(sep, PointKind::Epe, 1, TreeParams{});
    CHECK(t.depth() == 1);
    CHECK(feature_importance(t).at("f") == 1.0);
    CHECK(feature_importance(t).at("g") == 0.0);
    CHECK(evaluate(t, sep).accuracy == 1.0);
    const auto rules = emit_rules(t);
    REQUIRE(rules.size() == 2);
    CHECK(rules[0] == RecipeRule{{"f"}, PointKind::Epe, 1});
    CHECK(rules[1] == RecipeRule{{"not f"}, PointKind::Epe, -1});

    CHECK_THROWS_AS(train_tree(Dataset{}, PointKind::Epe, 4, TreeParams{}), TrainingError);
}

TEST_CASE("evaluation metrics") {
    const auto perfect = evaluate({1, -1, 0}, {1, -1, 0}, 4);
    CHECK(perfect.macro_precision == 1.0);
    CHECK(perfect.macro_recall == 1.0);
    CHECK(perfect.macro_f1 == 1.0);
    CHECK(perfect.classes.size() == 9);
    // All predictions one class on a balanced two-class set.
    const auto one = evaluate({1, 1, -1, -1}, {1, 1, 1, 1}, 4);
    CHECK(one.macro_precision == doctest::Approx(0.25));
    CHECK(one.accuracy == doctest::Approx(0.5));
    CHECK(one.confusion[size_t(-1 + 4)][size_t(1 + 4)] == 2);
}

TEST_CASE("rules: jsonl shape, round trip and validation") {
    const std::vector<RecipeRule> rules{{{"near_jog", "on_vertical_edge"}, PointKind::Epe, 1},
                                        {{"not near_jog"}, PointKind::Frag, -3}};
    const auto text = emit_jsonl(rules);
    CHECK(text.substr(0, text.find('\n')) == R"({"condition":["near_jog","on_vertical_edge"],"type":"EPE","class":1})");
    CHECK(parse_jsonl(text) == rules);
    CHECK_THROWS_AS(parse_jsonl("{\"condition\": 3}\n"), ParseError);

    const auto known = builtin_pool().names();
    CHECK_NOTHROW(validate_rules(rules, known));
    CHECK_THROWS_AS(validate_rules({{{"no_such"}, PointKind::Epe, 0}}, known), RecipeError);
    CHECK_THROWS_AS(validate_rules({{{"near_jog", "not near_jog"}, PointKind::Epe, 0}}, known), RecipeError);

    const std::map<std::string, bool> v{{"near_jog", true}, {"on_vertical_edge", false}};
    CHECK(apply_rules(rules, PointKind::Epe, lookup_of(v)) == 0);
    CHECK(apply_rules(rules, PointKind::Frag, lookup_of(v)) == 0);
    const std::map<std::string, bool> w{{"near_jog", false}, {"on_vertical_edge", false}};
    CHECK(apply_rules(rules, PointKind::Frag, lookup_of(w)) == -3);
}

TEST_CASE("downstream script") {
    const auto naming = default_naming(builtin_pool());
    const std::vector<RecipeRule> rules{{{"near_convex_corner"}, PointKind::Frag, 3},
                                        {{"near_convex_corner"}, PointKind::Epe, -1}};
    const auto s = emit_downstream(rules, naming, 4);
    CHECK(s.find("fragment_corner A convex concave mid_length 0.03") != std::string::npos);
    CHECK(s.find("retarget_layer A pattern_epe shift -0.010") != std::string::npos);
    // One shared tag definition, two action lines.
    std::size_t tags = 0;
    for (std::size_t at = s.find("NEWTAG"); at != std::string::npos; at = s.find("NEWTAG", at + 1)) ++tags;
    CHECK(tags == 1);

    const auto empty = emit_downstream({}, naming, 4);
    for (std::size_t i = 0; i < empty.size(); i = empty.find('\n', i) + 1)
        CHECK(empty[i] == '#');
    CHECK_THROWS_AS(emit_downstream({{{"unmapped_thing"}, PointKind::Epe, 1}}, naming, 4), RecipeError);
}

TEST_CASE("property: emitted rules reproduce tree predictions") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Dataset d;
        const int cols = 3 + trial % 6;
        for (int c = 0; c < cols; ++c) d.columns.push_back("f" + std::to_string(c));
        const int n = 10 + trial * 7;
        for (int i = 0; i < n; ++i) {
            std::vector<bool> row;
            for (int c = 0; c < cols; ++c) row.push_back(rng() & 1);
            d.rows.push_back(row);
            // Labels depend on a few columns plus noise.
            int y = (row[0] ? 2 : -1) + (row[1] && row[2] ? 1 : 0);
            if (rng() % 5 == 0) y = int(rng() % 9) - 4;
            d.labels.push_back(std::clamp(y, -4, 4));
        }
        TreeParams tp;
        tp.max_depth = 2 + trial % 5;
        const auto tree = train_tree(d, PointKind::Epe, 4, tp);
        const auto rules = emit_rules(tree);
        auto check = [&](const std::vector<bool>& row) {
            std::map<std::string, bool> m;
            for (int c = 0; c < cols; ++c) m[d.columns[c]] = row[c];
            CHECK(apply_rules(rules, PointKind::Epe, lookup_of(m)) == tree.predict(lookup_of(m)));
        };
        for (const auto& row : d.rows) check(row);
        for (int r = 0; r < 50; ++r) {
            std::vector<bool> row;
            for (int c = 0; c < cols; ++c) row.push_back(rng() & 1);
            check(row);
        }
        // Importances are nonnegative and sum to 0 or 1.
        double sum = 0.0;
        for (const auto& [_, v] : feature_importance(tree)) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK((sum == 0.0 || std::abs(sum - 1.0) < 1e-12));
    }
}

TEST_CASE("property: unbounded tree fits consistent training data") {
    std::mt19937_64 rng(12);
    Dataset d;
    d.columns = {"p", "q", "r", "s"};
    std::map<std::vector<bool>, int> seen;
    for (int i = 0; i < 60; ++i) {
        std::vector<bool> row{bool(rng() & 1), bool(rng() & 1), bool(rng() & 1), bool(rng() & 1)};
        if (!seen.count(row)) seen[row] = int(rng() % 9) - 4;
        d.rows.push_back(row);
        d.labels.push_back(seen[row]);
    }
    TreeParams tp;
    tp.max_depth = 100;
    CHECK(evaluate(train_tree(d, PointKind::Frag, 4, tp), d).accuracy == 1.0);
}

TEST_CASE("self-improvement drops exactly the zero-importance features") {
    const auto train = testing::hand_records();
    const auto held = testing::hand_records();
    FeaturePool reserve;
    reserve.features = {{"extra", "reserve feature"}};
    int relabels = 0;
    const Relabeler relabel = [&](std::vector<LabelRecord>& recs, const std::vector<FeatureDef>& added) {
        ++relabels;
        for (auto& r : recs)
            for (const auto& f : added) r.features.values.push_back({f.name, false});
    };
    const auto res = self_improve(testing::hand_pool(), train, held, 3, 1, TreeParams{},
                                  reserve_source(reserve), relabel);
    REQUIRE(res.audit.size() >= 2);
    CHECK(res.audit[1].removed == std::vector<std::string>{"noise"});
    CHECK(res.audit[1].added == std::vector<std::string>{"extra"});
    for (std::size_t i = 1; i < res.audit.size(); ++i)
        CHECK(res.audit[i].held_out_accuracy >= res.audit[i - 1].held_out_accuracy);
    CHECK(res.pool.contains("a"));
    CHECK(res.pool.contains("b"));
    CHECK_FALSE(res.pool.contains("noise"));
    CHECK(relabels == 2);
    // The constant replacement is removed next round and the reserve is dry.
    CHECK(res.exhausted);
}

TEST_CASE("self-improvement stops when every feature is used") {
    auto recs = testing::hand_records();
    for (auto& r : recs) std::erase_if(r.features.values, [](const auto& v) { return v.first == "noise"; });
    FeaturePool pool = testing::hand_pool();
    pool.features.pop_back();
    const auto res = self_improve(pool, recs, recs, 5, 1, TreeParams{}, nullptr, nullptr);
    REQUIRE(res.audit.size() == 2);
    CHECK(res.audit[1].removed.empty());
    CHECK_FALSE(res.exhausted);
}

TEST_CASE("recipe application with no rules leaves points at home") {
    const auto clip = synth_clip(3, SynthParams{});
    const auto base = place_control_points(clip, FragmentPolicy{});
    const auto out = apply_recipe_points(clip, base, {}, builtin_pool(), 4);
    REQUIRE(out.points.size() == base.points.size());
    for (std::size_t i = 0; i < out.points.size(); ++i) CHECK(out.points[i].offset_nm == 0);
    std::vector<int> classes(base.points.size(), 0);
    classes[0] = 2;
    CHECK(apply_classes(base, classes, 4).points[0].offset_nm == 20);
}
