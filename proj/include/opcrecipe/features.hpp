#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "opcrecipe/fragment.hpp"

namespace opcrecipe {

struct FeatureThresholds {
    int near_nm = 100;
    int far_nm = 500;
    int jog_nm = 40;
    int long_path_nm = 400;
    int corner_seg_nm = 40;
    int ray_start_nm = 1;  // rays start this far outside the host edge

    void validate() const;
};

struct FeatureDef {
    std::string name;
    std::string description;
};

struct FeaturePool {
    std::vector<FeatureDef> features;
    FeatureThresholds thresholds;

    bool contains(const std::string& name) const;
    std::vector<std::string> names() const;
};

/// The 24 binary features of the mined pool, each backed by a geometric
/// predicate. The categorical "types" feature is carried separately.
FeaturePool builtin_pool();

/// Additional predicates offered when a refinement round asks for new
/// features.
FeaturePool reserve_pool();

/// True when the deterministic labeler can evaluate `name`.
bool has_predicate(const std::string& name);

inline constexpr const char* kTypeTags[] = {"CV", "CH", "H", "V"};

/// One-hot column names for the type tag: type_CV, type_CH, type_H, type_V.
std::vector<std::string> type_feature_names();

struct FeatureVector {
    int point_id = 0;
    PointKind kind = PointKind::Epe;
    std::string type_tag;                             // CV, CH, H or V
    std::vector<std::pair<std::string, bool>> values;  // pool order
    std::vector<std::string> fallback;                 // features filled deterministically
    std::string provenance = "deterministic";          // or "remote"

    bool get(const std::string& name) const;  // type_* names read the tag
    /// Pool values followed by the four type one-hot columns.
    std::vector<std::pair<std::string, bool>> flattened() const;
    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Evaluates every pool feature for the point at its current position.
/// Throws ValidationError for a feature without a predicate.
FeatureVector label_point(const LayoutClip& clip, const ControlLayout& layout,
                          const ControlPoint& point, const FeaturePool& pool);

/// CV/CH within corner_seg_nm of either edge end, H/V elsewhere.
std::string type_tag(const ControlLayout& layout, const ControlPoint& point,
                     const FeatureThresholds& t);

/// clamp(round_half_away(delta / step), -C, C) with step = 40 / C.
/// Throws RangeError when |delta| > 40.
int bin_movement(double delta_nm, int C);
/// Center offset of a class: cls * 40 / C. Throws RangeError outside [-C, C].
int class_to_offset(int cls, int C);

// A labeled training record: {epe_id, features, result}.
struct LabelRecord {
    std::string clip_id;
    FeatureVector features;
    int result = 0;
};

/// One JSON object per line: {"clip_id", "epe_id", "kind", "features": {"types": tag,
/// name: bool, ...}, "result": class}.
std::string labels_to_jsonl(const std::vector<LabelRecord>& records);
std::vector<LabelRecord> labels_from_jsonl(const std::string& text);

}  // namespace opcrecipe
