#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "opcrecipe/features.hpp"

namespace opcrecipe {

struct TreeParams {
    int max_depth = 8;
    int min_samples_leaf = 1;
    int min_samples_split = 2;

    void validate() const;
};

struct TreeNode {
    std::string feature;  // empty for a leaf
    int on_true = -1;
    int on_false = -1;
    int cls = 0;
    int samples = 0;
    double gini = 0.0;
    std::vector<int> histogram;  // counts for classes -C..C

    bool leaf() const { return feature.empty(); }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Lookup of a binary feature by name.
using FeatureLookup = std::function<bool(const std::string&)>;

struct DecisionTree {
    PointKind kind = PointKind::Epe;
    int C = 4;
    TreeParams params;
    std::vector<std::string> features;  // training columns
    std::vector<TreeNode> nodes;        // nodes[0] is the root

    int predict(const FeatureLookup& x) const;
    int predict(const FeatureVector& v) const;
    int depth() const;
    int leaves() const;
};

// Column-major view of labeled vectors for one point kind.
struct Dataset {
    std::vector<std::string> columns;
    std::vector<std::vector<bool>> rows;
    std::vector<int> labels;

    std::size_t size() const { return rows.size(); }
};

/// Pool features plus the four type columns, for the records of `kind`.
Dataset make_dataset(const std::vector<LabelRecord>& records, PointKind kind,
                     const std::vector<std::string>& columns);
/// Pool names followed by type_feature_names().
std::vector<std::string> training_columns(const FeaturePool& pool);

/// Greedy CART on Gini impurity. A split needs a decrease above 1e-12;
/// equal decreases go to the lexicographically lowest feature name. Leaves
/// take the most frequent class, ties to the class nearest 0, then the
/// negative one. Throws TrainingError on an empty dataset.
DecisionTree train_tree(const Dataset& data, PointKind kind, int C, const TreeParams& params);

double gini(const std::vector<int>& histogram);

/// Weighted Gini decrease per feature, normalized to sum 1; every training
/// column is present, all zero when the tree is a single leaf.
std::map<std::string, double> feature_importance(const DecisionTree& tree);

struct TrainReport {
    std::vector<int> classes;  // -C..C
    std::vector<double> precision, recall, f1;
    std::vector<int> support;
    std::vector<std::vector<int>> confusion;  // [true][predicted]
    // Macro averages over the classes that occur in the truth or the
    // predictions; a class never predicted has precision 0.
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double accuracy = 0.0;
    int samples = 0;
};

TrainReport evaluate(const std::vector<int>& truth, const std::vector<int>& predicted, int C);
TrainReport evaluate(const DecisionTree& tree, const Dataset& held_out);

std::string tree_to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const std::string& text);
std::string report_to_json(const TrainReport& r);

// ---- rules -----------------------------------------------------------------

struct RecipeRule {
    std::vector<std::string> condition;  // "feature" or "not feature"
    PointKind type = PointKind::Epe;
    int cls = 0;
    friend bool operator==(const RecipeRule&, const RecipeRule&) = default;
};

/// One rule per leaf, root-to-leaf, true branches first.
std::vector<RecipeRule> emit_rules(const DecisionTree& tree);
std::string emit_jsonl(const std::vector<RecipeRule>& rules);
std::vector<RecipeRule> parse_jsonl(const std::string& text);

/// Throws RecipeError for a literal naming an unknown feature or a rule that
/// holds a feature and its negation.
void validate_rules(const std::vector<RecipeRule>& rules, const std::vector<std::string>& known);

/// Class of the first rule of `kind` whose literals all hold; 0 if none.
int apply_rules(const std::vector<RecipeRule>& rules, PointKind kind, const FeatureLookup& x);
int apply_rules(const std::vector<RecipeRule>& rules, const FeatureVector& v);

struct DownstreamNaming {
    std::string layer = "A";
    std::map<std::string, std::string> tokens;  // feature -> script token
};

/// Identity tokens for every pool feature and type column.
DownstreamNaming default_naming(const FeaturePool& pool);

/// Tag definitions (one per distinct condition set) followed by action
/// statements: fragment_corner for FRAG rules, retarget_layer for EPE rules,
/// offsets in um with three decimals. Throws RecipeError naming any literal
/// without a token.
std::string emit_downstream(const std::vector<RecipeRule>& rules, const DownstreamNaming& naming,
                            int C);

/// Labels every point with `pool`, classes it through `rules` and offsets it
/// tangentially from its home position. Unmatched points stay put.
ControlLayout apply_recipe_points(const LayoutClip& clip, const ControlLayout& base,
                                  const std::vector<RecipeRule>& rules, const FeaturePool& pool,
                                  int C);
/// Same with one class per point, in point order.
ControlLayout apply_classes(const ControlLayout& base, const std::vector<int>& classes, int C);

// ---- self-improvement ------------------------------------------------------

struct ImproveRound {
    int round = 0;
    std::vector<std::string> removed;
    std::vector<std::string> added;
    double train_accuracy = 0.0;
    double held_out_accuracy = 0.0;
};

struct ImproveResult {
    FeaturePool pool;
    std::vector<DecisionTree> trees;  // one per kind present in the training set
    std::vector<LabelRecord> train, held_out;
    std::vector<ImproveRound> audit;
    bool exhausted = false;  // the feature source ran dry
};

// New features to replace `removed`; may return fewer than asked.
using FeatureSource = std::function<std::vector<FeatureDef>(
    const std::vector<std::string>& removed, const FeaturePool& current, int wanted)>;
// Appends values of `added` to every record.
using Relabeler = std::function<void(std::vector<LabelRecord>& records,
                                     const std::vector<FeatureDef>& added)>;

/// Draws unused features from `reserve` in order.
FeatureSource reserve_source(FeaturePool reserve);

/// Per round: train one tree per kind, drop features whose importance is 0
/// in every tree, ask `source` for replacements, relabel only those, and
/// retrain. Stops early when nothing has importance 0.
ImproveResult self_improve(FeaturePool pool, std::vector<LabelRecord> train,
                           std::vector<LabelRecord> held_out, int rounds, int C,
                           const TreeParams& params, const FeatureSource& source,
                           const Relabeler& relabel);

/// Accuracy of per-kind trees over mixed records.
double accuracy(const std::vector<DecisionTree>& trees, const std::vector<LabelRecord>& records);
const DecisionTree& tree_for(const std::vector<DecisionTree>& trees, PointKind kind);

}  // namespace opcrecipe
