#include "opcrecipe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "opcrecipe/error.hpp"

namespace opcrecipe {

void SynthParams::validate() const {
    if (width_nm <= 0 || height_nm <= 0) throw ConfigError("synth extent must be positive");
    if (min_width_nm <= 0 || min_space_nm <= 0)
        throw ConfigError("synth min width and min space must be positive");
    if (min_width_nm > max_width_nm || min_length_nm > max_length_nm || min_jog_nm > max_jog_nm ||
        min_shapes > max_shapes || min_shapes < 1)
        throw ConfigError("synth ranges must be ordered");
    if (allow_jogs && (min_jog_nm < 1 || max_jog_nm >= min_width_nm))
        throw ConfigError("synth jogs must be positive and narrower than the wire");
}

namespace {

struct Rect {
    int x0, y0, x1, y1;
};

struct Shape {
    std::vector<Rect> rects;
    std::vector<Point> ring;
};

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    int uniform(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    bool coin() { return (eng_() >> 11) & 1; }

private:
    std::mt19937_64 eng_;
};

double rect_gap(const Rect& a, const Rect& b) {
    const int dx = std::max({0, b.x0 - a.x1, a.x0 - b.x1});
    const int dy = std::max({0, b.y0 - a.y1, a.y0 - b.y1});
    return std::hypot(double(dx), double(dy));
}

Shape rect_shape(int x0, int y0, int w, int h) {
    return {{{x0, y0, x0 + w, y0 + h}}, {{x0, y0}, {x0, y0 + h}, {x0 + w, y0 + h}, {x0 + w, y0}}};
}

// Horizontal wire whose right half is shifted up by `jog`.
Shape stepped_wire(int x0, int y0, int len, int w, int jog, int split) {
    const int xm = x0 + split, x1 = x0 + len;
    return {{{x0, y0, xm, y0 + w}, {xm, y0 + jog, x1, y0 + jog + w}},
            {{x0, y0}, {x0, y0 + w}, {xm, y0 + w}, {xm, y0 + jog + w}, {x1, y0 + jog + w},
             {x1, y0 + jog}, {xm, y0 + jog}, {xm, y0}}};
}

// Horizontal wire that widens by `jog` on its upper side past the split.
Shape widened_wire(int x0, int y0, int len, int w, int jog, int split) {
    const int xm = x0 + split, x1 = x0 + len;
    return {{{x0, y0, xm, y0 + w}, {xm, y0, x1, y0 + w + jog}},
            {{x0, y0}, {x0, y0 + w}, {xm, y0 + w}, {xm, y0 + w + jog}, {x1, y0 + w + jog},
             {x1, y0}}};
}

Shape l_bend(int x0, int y0, int arm_x, int arm_y, int w) {
    return {{{x0, y0, x0 + arm_x, y0 + w}, {x0, y0, x0 + w, y0 + arm_y}},
            {{x0, y0}, {x0, y0 + arm_y}, {x0 + w, y0 + arm_y}, {x0 + w, y0 + w},
             {x0 + arm_x, y0 + w}, {x0 + arm_x, y0}}};
}

Shape transposed(Shape s) {
    for (Rect& r : s.rects) r = {r.y0, r.x0, r.y1, r.x1};
    for (Point& p : s.ring) p = {p.y, p.x};
    return s;
}

Shape flipped_x(Shape s, int pivot) {
    for (Rect& r : s.rects) r = {2 * pivot - r.x1, r.y0, 2 * pivot - r.x0, r.y1};
    for (Point& p : s.ring) p.x = 2 * pivot - p.x;
    return s;
}

BBox shape_box(const Shape& s) {
    BBox b{s.rects[0].x0, s.rects[0].y0, s.rects[0].x1, s.rects[0].y1};
    for (const Rect& r : s.rects) {
        b.xmin = std::min(b.xmin, r.x0);
        b.ymin = std::min(b.ymin, r.y0);
        b.xmax = std::max(b.xmax, r.x1);
        b.ymax = std::max(b.ymax, r.y1);
    }
    return b;
}

// Draws a shape in local coordinates at the origin; kind 0 forces a jog.
Shape draw_shape(Rng& rng, const SynthParams& p, int kind) {
    const int w = rng.uniform(p.min_width_nm, p.max_width_nm);
    const int len = rng.uniform(p.min_length_nm, p.max_length_nm);
    Shape s;
    switch (kind) {
        case 0: {
            const int jog = rng.uniform(p.min_jog_nm, p.max_jog_nm);
            const int split = rng.uniform(len / 3, 2 * len / 3);
            s = rng.coin() ? stepped_wire(0, 0, len, w, jog, split)
                           : widened_wire(0, 0, len, w, jog, split);
            if (rng.coin()) s = flipped_x(std::move(s), len / 2);
            break;
        }
        case 1:
            s = rect_shape(0, 0, len, w);
            break;
        case 2: {
            const int arm_y = rng.uniform(std::max(p.min_length_nm / 2, 2 * w), len);
            s = l_bend(0, 0, len, arm_y, w);
            if (rng.coin()) s = flipped_x(std::move(s), len / 2);
            break;
        }
        default: {
            const int side = rng.uniform(2 * p.min_width_nm, std::max(2 * p.min_width_nm, 2 * p.max_width_nm));
            s = rect_shape(0, 0, side, rng.uniform(2 * p.min_width_nm, side));
            break;
        }
    }
    return rng.coin() ? transposed(std::move(s)) : s;
}

}  // namespace

LayoutClip synth_clip(std::uint64_t seed, const SynthParams& p) {
    p.validate();
    Rng rng(seed * 0x9E3779B97F4A7C15ULL + 0x2545F4914F6CDD1DULL);
    LayoutClip clip;
    clip.id = "synth_" + std::to_string(seed);
    clip.width_nm = p.width_nm;
    clip.height_nm = p.height_nm;

    const int target = rng.uniform(p.min_shapes, p.max_shapes);
    std::vector<Rect> placed;
    int attempts = 0;
    while (static_cast<int>(clip.polygons.size()) < target && attempts < p.max_attempts) {
        ++attempts;
        int kind;
        if (clip.polygons.empty() && p.allow_jogs) {
            kind = 0;
        } else {
            const int roll = rng.uniform(0, 9);
            kind = roll < 4 ? 1 : roll < 6 ? 2 : roll < 8 ? 3 : 0;
            if (kind == 0 && !p.allow_jogs) kind = 1;
        }
        Shape s = draw_shape(rng, p, kind);
        const BBox b = shape_box(s);
        const int span_x = p.width_nm - 2 * p.margin_nm - (b.xmax - b.xmin);
        const int span_y = p.height_nm - 2 * p.margin_nm - (b.ymax - b.ymin);
        if (span_x < 0 || span_y < 0) continue;
        const int dx = p.margin_nm - b.xmin + rng.uniform(0, span_x);
        const int dy = p.margin_nm - b.ymin + rng.uniform(0, span_y);
        for (Rect& r : s.rects) r = {r.x0 + dx, r.y0 + dy, r.x1 + dx, r.y1 + dy};
        for (Point& q : s.ring) q = {q.x + dx, q.y + dy};
        bool clear = true;
        for (const Rect& r : s.rects)
            for (const Rect& o : placed)
                if (rect_gap(r, o) < p.min_space_nm) clear = false;
        if (!clear) continue;
        placed.insert(placed.end(), s.rects.begin(), s.rects.end());
        clip.polygons.push_back(make_polygon(std::move(s.ring)));
    }
    if (clip.polygons.empty())
        throw ValidationError("synthetic constraints leave no room for any shape");
    validate_clip(clip);
    return clip;
}

std::vector<LayoutClip> synth_suite(std::uint64_t base_seed, int count, const SynthParams& params) {
    std::vector<LayoutClip> out;
    for (int i = 0; i < count; ++i) out.push_back(synth_clip(base_seed + i, params));
    return out;
}

}  // namespace opcrecipe
