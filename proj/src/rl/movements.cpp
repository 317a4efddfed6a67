#include "opcrecipe/rl/movements.hpp"

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "opcrecipe/error.hpp"
#include "opcrecipe/features.hpp"

namespace opcrecipe::rl {

MovementRecord make_movement(const std::string& clip_id, const ControlPoint& p, int cls, int C) {
    const int offset = class_to_offset(cls, C);
    MovementRecord m;
    m.clip_id = clip_id;
    m.point_id = p.id;
    m.kind = p.kind;
    m.sign = offset < 0 ? '-' : '+';
    m.distance_nm = std::abs(offset);
    m.cls = cls;
    return m;
}

std::vector<MovementRecord> extract_movements(const PolicyCheckpoint& ck,
                                              const std::vector<LayoutClip>& clips,
                                              const FragmentPolicy& policy,
                                              const EncodingConfig& encoding) {
    const int C = ck.config.C;
    std::vector<MovementRecord> out;
    for (const LayoutClip& clip : clips) {
        const ControlLayout layout = place_control_points(clip, policy);
        for (const ControlPoint& p : layout.points) {
            const auto probs = policy_probs(ck.net, encode_point(clip, layout, p, encoding));
            out.push_back(make_movement(clip.id, p, argmax_action(probs) - C, C));
        }
    }
    return out;
}

std::string movements_to_jsonl(const std::vector<MovementRecord>& records) {
    std::string out;
    for (const MovementRecord& m : records) {
        nlohmann::ordered_json j;
        j["clip_id"] = m.clip_id;
        j["epe_id"] = m.point_id;
        j["kind"] = to_string(m.kind);
        j["movement"] = {{"sign", std::string(1, m.sign)}, {"distance_nm", m.distance_nm}};
        j["class"] = m.cls;
        out += j.dump() + "\n";
    }
    return out;
}

std::vector<MovementRecord> movements_from_jsonl(const std::string& text) {
    std::vector<MovementRecord> out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::ordered_json::parse(line);
            MovementRecord m;
            m.clip_id = j.at("clip_id").get<std::string>();
            m.point_id = j.at("epe_id").get<int>();
            m.kind = point_kind_from_string(j.at("kind").get<std::string>());
            const auto sign = j.at("movement").at("sign").get<std::string>();
            if (sign != "+" && sign != "-") throw ParseError(line_no, "movement sign must be + or -");
            m.sign = sign[0];
            m.distance_nm = j.at("movement").at("distance_nm").get<int>();
            m.cls = j.at("class").get<int>();
            out.push_back(std::move(m));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, std::string("bad movement record: ") + e.what());
        }
    }
    return out;
}

std::vector<int> classes_for_clip(const std::vector<MovementRecord>& records,
                                  const std::string& clip_id, std::size_t point_count) {
    std::vector<int> classes(point_count, 0);
    for (const MovementRecord& m : records) {
        if (m.clip_id != clip_id) continue;
        if (m.point_id < 0 || std::size_t(m.point_id) >= point_count)
            throw ValidationError("movement record for point " + std::to_string(m.point_id) +
                                  " outside clip '" + clip_id + "'");
        classes[m.point_id] = m.cls;
    }
    return classes;
}

}  // namespace opcrecipe::rl
