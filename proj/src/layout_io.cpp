#include "opcrecipe/layout_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "opcrecipe/error.hpp"

namespace opcrecipe {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

int to_int(std::string_view tok, int line) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(line, "expected integer, got '" + std::string(tok) + "'");
    return v;
}

}  // namespace

LayoutClip parse_layout(std::string_view text) {
    LayoutClip clip;
    bool have_header = false;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        const auto toks = split_ws(line);
        if (toks.empty() || toks[0].front() == '#') {
            if (end == text.size()) break;
            continue;
        }
        if (toks[0] == "CLIP") {
            if (have_header) throw ParseError(line_no, "duplicate CLIP header");
            if (toks.size() != 4) throw ParseError(line_no, "CLIP expects <id> <width> <height>");
            clip.id = std::string(toks[1]);
            clip.width_nm = to_int(toks[2], line_no);
            clip.height_nm = to_int(toks[3], line_no);
            if (clip.width_nm <= 0 || clip.height_nm <= 0)
                throw ParseError(line_no, "clip extent must be positive");
            have_header = true;
        } else if (toks[0] == "POLY") {
            if (!have_header) throw ParseError(line_no, "POLY before CLIP header");
            if (toks.size() < 9 || (toks.size() - 1) % 2 != 0)
                throw ParseError(line_no, "POLY expects an even count of at least 8 integers");
            std::vector<Point> ring;
            for (std::size_t k = 1; k < toks.size(); k += 2)
                ring.push_back({to_int(toks[k], line_no), to_int(toks[k + 1], line_no)});
            try {
                clip.polygons.push_back(make_polygon(std::move(ring)));
            } catch (const GeometryError& e) {
                throw GeometryError("line " + std::to_string(line_no) + ": " + e.what());
            }
        } else {
            throw ParseError(line_no, "unknown record '" + std::string(toks[0]) + "'");
        }
        if (end == text.size()) break;
    }
    if (!have_header) throw ParseError(line_no, "missing CLIP header");
    validate_clip(clip);
    return clip;
}

std::string format_layout(const LayoutClip& clip) {
    std::ostringstream os;
    os << "CLIP " << clip.id << ' ' << clip.width_nm << ' ' << clip.height_nm << '\n';
    for (const Polygon& poly : clip.polygons) {
        os << "POLY";
        for (const Point& p : poly.vertices) os << ' ' << p.x << ' ' << p.y;
        os << '\n';
    }
    return os.str();
}

LayoutClip read_layout_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open layout file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_layout(ss.str());
}

void write_layout_file(const std::string& path, const LayoutClip& clip) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write layout file '" + path + "'");
    out << format_layout(clip);
}

}  // namespace opcrecipe
