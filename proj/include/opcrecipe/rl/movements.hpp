#pragma once

#include <string>
#include <vector>

#include "opcrecipe/opc.hpp"
#include "opcrecipe/rl/env.hpp"
#include "opcrecipe/rl/trainer.hpp"

namespace opcrecipe::rl {

// Greedy placement of one control point: direction sign along the traversal
// direction, distance in nm and the binned class.
struct MovementRecord {
    std::string clip_id;
    int point_id = 0;
    PointKind kind = PointKind::Epe;
    char sign = '+';
    int distance_nm = 0;
    int cls = 0;

    int offset_nm() const { return sign == '-' ? -distance_nm : distance_nm; }
    friend bool operator==(const MovementRecord&, const MovementRecord&) = default;
};

MovementRecord make_movement(const std::string& clip_id, const ControlPoint& p, int cls, int C);

/// Argmax action of the policy for every control point of every clip, using
/// the placement the clip would get in training.
std::vector<MovementRecord> extract_movements(const PolicyCheckpoint& ck,
                                              const std::vector<LayoutClip>& clips,
                                              const FragmentPolicy& policy,
                                              const EncodingConfig& encoding);

/// {"clip_id", "epe_id", "kind", "movement": {"sign", "distance_nm"}, "class"} per line.
std::string movements_to_jsonl(const std::vector<MovementRecord>& records);
std::vector<MovementRecord> movements_from_jsonl(const std::string& text);

/// Classes of one clip's points in point order; points without a record get 0.
std::vector<int> classes_for_clip(const std::vector<MovementRecord>& records,
                                  const std::string& clip_id, std::size_t point_count);

}  // namespace opcrecipe::rl
