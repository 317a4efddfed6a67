#include "opcrecipe/annotator.hpp"

#include <png.h>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "opcrecipe/error.hpp"
#include "opcrecipe/prompts.hpp"

namespace opcrecipe {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

const char* to_string(AnnotatorMode m) {
    switch (m) {
        case AnnotatorMode::Deterministic: return "deterministic";
        case AnnotatorMode::Remote: return "remote";
        case AnnotatorMode::RemoteWithFallback: return "remote-with-fallback";
    }
    return "deterministic";
}

AnnotatorMode annotator_mode_from_string(const std::string& s) {
    if (s == "deterministic") return AnnotatorMode::Deterministic;
    if (s == "remote") return AnnotatorMode::Remote;
    if (s == "remote-with-fallback") return AnnotatorMode::RemoteWithFallback;
    throw ConfigError("unknown annotator mode '" + s + "'");
}

void AnnotatorConfig::validate() const {
    if (canvas_px < 16) throw ConfigError("annotator canvas_px must be >= 16");
    if (max_parallel < 1) throw ConfigError("annotator max_parallel must be >= 1");
    if (attempts < 1) throw ConfigError("annotator attempts must be >= 1");
    if (!(timeout_s > 0)) throw ConfigError("annotator timeout must be positive");
    if (backoff_s < 0) throw ConfigError("annotator backoff must be >= 0");
    if (mode == AnnotatorMode::Deterministic) return;
    if (endpoint.empty()) throw ConfigError("remote annotation needs an endpoint");
    if (model.empty()) throw ConfigError("remote annotation needs a model identifier");
    if (credential().empty())
        throw ConfigError("remote annotation needs the credential in $" + credential_env);
}

std::string AnnotatorConfig::credential() const {
    const char* v = credential_env.empty() ? nullptr : std::getenv(credential_env.c_str());
    return v ? v : "";
}

// ---- rendering -------------------------------------------------------------

namespace {

void png_append(png_structp png, png_bytep data, png_size_t n) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + n);
}

std::vector<std::uint8_t> encode_png(const std::vector<std::uint8_t>& rgb, int w, int h) {
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("libpng: cannot create writer");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng: encoding failed");
    }
    png_set_write_fn(png, &out, png_append, nullptr);
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 9);
    png_write_info(png, info);
    for (int r = 0; r < h; ++r)
        png_write_row(png, const_cast<png_bytep>(&rgb[static_cast<std::size_t>(r) * w * 3]));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

}  // namespace

RenderedPointImage render_point_image(const LayoutClip& clip, const ControlLayout& layout,
                                      const ControlPoint& point, int canvas_px) {
    if (canvas_px < 16) throw ConfigError("canvas must be at least 16 pixels");
    const int w = canvas_px, h = canvas_px;
    const double scale = double(canvas_px) / std::max(clip.width_nm, clip.height_nm);
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3, 255);
    auto put = [&](int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        if (x < 0 || y < 0 || x >= w || y >= h) return;
        std::uint8_t* px = &rgb[(static_cast<std::size_t>(y) * w + x) * 3];
        px[0] = r;
        px[1] = g;
        px[2] = b;
    };
    // Pixel centers sampled against each polygon; image row 0 is the top of the clip.
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const PointF p{(x + 0.5) / scale, clip.height_nm - (y + 0.5) / scale};
            if (p.y < 0 || p.x > clip.width_nm) continue;
            for (const Polygon& poly : clip.polygons)
                if (contains(poly, p.x, p.y)) {
                    put(x, y, 60, 60, 60);
                    break;
                }
        }
    RenderedPointImage img;
    img.width = w;
    img.height = h;
    img.clip_width_nm = clip.width_nm;
    img.clip_height_nm = clip.height_nm;
    img.kind = point.kind;
    if (point.polygon >= 0 && point.polygon < int(layout.polygons.size())) {
        const PointF at = point_location(layout, point);
        img.marker_x = std::clamp(static_cast<int>(std::floor(at.x * scale)), 0, w - 1);
        img.marker_y = std::clamp(static_cast<int>(std::floor((clip.height_nm - at.y) * scale)), 0, h - 1);
    } else {
        img.marker_x = w / 2;
        img.marker_y = h / 2;
    }
    const int rad = std::max(1, canvas_px / 128);
    for (int dy = -rad; dy <= rad; ++dy)
        for (int dx = -rad; dx <= rad; ++dx) put(img.marker_x + dx, img.marker_y + dy, 255, 0, 0);
    img.png = encode_png(rgb, w, h);
    return img;
}

std::vector<std::uint8_t> decode_rgb(const RenderedPointImage& image) {
    png_image pi{};
    pi.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&pi, image.png.data(), image.png.size()))
        throw ValidationError("not a PNG image");
    pi.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(pi));
    if (!png_image_finish_read(&pi, nullptr, rgb.data(), 0, nullptr)) {
        png_image_free(&pi);
        throw ValidationError("PNG decode failed");
    }
    return rgb;
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int n = 0;
    if (!EVP_Digest(data.data(), data.size(), md, &n, EVP_sha256(), nullptr))
        throw Error("SHA-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < n; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string base64(std::string_view data) {
    std::string out(4 * ((data.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(data.data()),
                                  static_cast<int>(data.size()));
    out.resize(n);
    return out;
}

std::string default_labeling_template() { return prompts::kFeatureLabeling; }

std::string extract_json_object(const std::string& content) {
    const auto a = content.find('{');
    const auto b = content.rfind('}');
    if (a == std::string::npos || b == std::string::npos || b < a)
        throw SchemaError("reply holds no JSON object", content);
    return content.substr(a, b - a + 1);
}

// ---- client ----------------------------------------------------------------

Annotator::Annotator(AnnotatorConfig cfg, std::shared_ptr<Transport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)),
      labeling_template_(default_labeling_template()) {
    cfg_.validate();
    if (!transport_ && cfg_.mode != AnnotatorMode::Deterministic) transport_ = make_http_transport();
}

AnnotateStats Annotator::stats() const {
    return {cache_hits_.load(), requests_.load(), fallbacks_.load()};
}

std::string Annotator::ask(const std::string& prompt, const RenderedPointImage& image) {
    ojson body;
    body["model"] = cfg_.model;
    const std::string url = "data:image/png;base64," +
                            base64({reinterpret_cast<const char*>(image.png.data()), image.png.size()});
    body["messages"] = ojson::array(
        {{{"role", "user"},
          {"content", ojson::array({{{"type", "text"}, {"text", prompt}},
                                    {{"type", "image_url"}, {"image_url", {{"url", url}}}}})}}});
    body["temperature"] = 0;
    HttpRequest req;
    req.url = cfg_.endpoint;
    req.headers = {{"Authorization", "Bearer " + cfg_.credential()}};
    req.body = body.dump();
    req.timeout_s = cfg_.timeout_s;

    std::string last_error;
    for (int attempt = 0; attempt < cfg_.attempts; ++attempt) {
        if (attempt > 0 && cfg_.backoff_s > 0)
            std::this_thread::sleep_for(
                std::chrono::duration<double>(cfg_.backoff_s * std::pow(2.0, attempt - 1)));
        ++requests_;
        try {
            const HttpResponse resp = transport_->post(req);
            if (resp.status < 200 || resp.status >= 300) {
                last_error = "HTTP " + std::to_string(resp.status);
                continue;
            }
            try {
                const auto j = ojson::parse(resp.body);
                return j.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const nlohmann::json::exception&) {
                throw SchemaError("reply is not a chat completion", resp.body);
            }
        } catch (const TransportError& e) {
            last_error = e.what();
        }
    }
    throw TransportError("annotation request failed after " + std::to_string(cfg_.attempts) +
                         " attempts: " + last_error);
}

std::string Annotator::complete(const std::string& prompt, const RenderedPointImage& image,
                                const std::string& cache_key) {
    fs::path file;
    if (!cfg_.cache_dir.empty()) {
        file = fs::path(cfg_.cache_dir) / (cache_key + ".json");
        std::ifstream in(file);
        if (in) {
            std::stringstream ss;
            ss << in.rdbuf();
            try {
                const auto j = ojson::parse(ss.str());
                ++cache_hits_;
                return j.at("content").get<std::string>();
            } catch (const nlohmann::json::exception&) {
                // unreadable entry: fetch again and overwrite
            }
        }
    }
    std::string content = ask(prompt, image);
    if (!file.empty()) {
        std::lock_guard lock(cache_mutex_);
        fs::create_directories(file.parent_path());
        const fs::path tmp = file.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary);
            ojson j;
            j["key"] = cache_key;
            j["model"] = cfg_.model;
            j["content"] = content;
            out << j.dump(1) << '\n';
        }
        fs::rename(tmp, file);
    }
    return content;
}

FeaturePool Annotator::mine_features(const std::vector<RenderedPointImage>& images,
                                     const std::string& prompt_template, MiningStats* stats) {
    if (cfg_.mode == AnnotatorMode::Deterministic) return builtin_pool();
    if (images.empty()) throw ContractError("feature mining needs at least one image");
    MiningStats local;
    FeaturePool pool;
    for (const RenderedPointImage& img : images) {
        const std::string key = sha256_hex(
            "mine\n" + cfg_.model + "\n" + prompt_template + "\n" +
            std::string(reinterpret_cast<const char*>(img.png.data()), img.png.size()));
        const std::string content = complete(prompt_template, img, key);
        ++local.responses;
        ojson j;
        try {
            j = ojson::parse(extract_json_object(content));
        } catch (const nlohmann::json::exception&) {
            throw SchemaError("mining reply is not JSON", content);
        }
        if (!j.contains("features") || !j["features"].is_object() || !j.contains("explain") ||
            !j["explain"].is_object())
            throw SchemaError("mining reply needs 'features' and 'explain' objects", content);
        for (const auto& [name, value] : j["features"].items()) {
            if (name == "types") continue;
            const auto& ex = j["explain"];
            if (!value.is_boolean() || !ex.contains(name) || !ex[name].is_string() || name.empty()) {
                ++local.malformed_entries;
                continue;
            }
            if (pool.contains(name)) {
                ++local.duplicates;
                continue;
            }
            pool.features.push_back({name, ex[name].get<std::string>()});
        }
    }
    if (stats) *stats = local;
    return pool;
}

namespace {

FeaturePool labelable(const FeaturePool& pool) {
    FeaturePool out;
    out.thresholds = pool.thresholds;
    for (const FeatureDef& f : pool.features)
        if (has_predicate(f.name)) out.features.push_back(f);
    return out;
}

std::string substitute(std::string text, const std::string& key, const std::string& value) {
    for (std::size_t at; (at = text.find(key)) != std::string::npos;) text.replace(at, key.size(), value);
    return text;
}

}  // namespace

FeatureVector Annotator::parse_labels(const std::string& content, const FeaturePool& pool,
                                      const FeatureVector& geometric) const {
    ojson j;
    try {
        j = ojson::parse(extract_json_object(content));
    } catch (const nlohmann::json::exception&) {
        throw SchemaError("labeling reply is not JSON", content);
    }
    if (!j.contains("features") || !j["features"].is_object())
        throw SchemaError("labeling reply needs a 'features' object", content);
    const auto& f = j["features"];
    FeatureVector v;
    v.point_id = geometric.point_id;
    v.kind = geometric.kind;
    v.provenance = "remote";
    const bool tag_ok = f.contains("types") && f["types"].is_string() &&
                        std::find_if(std::begin(kTypeTags), std::end(kTypeTags), [&](const char* t) {
                            return f["types"].get<std::string>() == t;
                        }) != std::end(kTypeTags);
    if (tag_ok) {
        v.type_tag = f["types"].get<std::string>();
    } else {
        v.type_tag = geometric.type_tag;
        v.fallback.push_back("types");
    }
    for (const FeatureDef& d : pool.features) {
        if (f.contains(d.name) && f[d.name].is_boolean()) {
            v.values.emplace_back(d.name, f[d.name].get<bool>());
            continue;
        }
        const auto it = std::find_if(geometric.values.begin(), geometric.values.end(),
                                     [&](const auto& p) { return p.first == d.name; });
        v.values.emplace_back(d.name, it != geometric.values.end() && it->second);
        v.fallback.push_back(d.name);
    }
    return v;
}

FeatureVector Annotator::annotate_point(const LayoutClip& clip, const ControlLayout& layout,
                                        const ControlPoint& point, const FeaturePool& pool) {
    if (pool.features.empty()) throw ContractError("annotation needs a nonempty pool");
    if (cfg_.mode == AnnotatorMode::Deterministic) return label_point(clip, layout, point, pool);

    const FeatureVector geometric = label_point(clip, layout, point, labelable(pool));
    const RenderedPointImage img = render_point_image(clip, layout, point, cfg_.canvas_px);
    std::string names;
    for (const FeatureDef& d : pool.features) names += "- " + d.name + ": " + d.description + "\n";
    const std::string prompt =
        substitute(substitute(labeling_template_, "{{kind}}",
                              point.kind == PointKind::Epe ? "EPE measurement" : "fragment"),
                   "{{features}}", names);
    const std::string key = sha256_hex(
        "label\n" + cfg_.model + "\n" + prompt + "\n" +
        std::string(reinterpret_cast<const char*>(img.png.data()), img.png.size()));
    try {
        return parse_labels(complete(prompt, img, key), pool, geometric);
    } catch (const Error&) {
        if (cfg_.mode != AnnotatorMode::RemoteWithFallback) throw;
        ++fallbacks_;
        FeatureVector v = geometric;
        v.values.clear();
        v.fallback.clear();
        for (const FeatureDef& d : pool.features) {
            const auto it = std::find_if(geometric.values.begin(), geometric.values.end(),
                                         [&](const auto& p) { return p.first == d.name; });
            v.values.emplace_back(d.name, it != geometric.values.end() && it->second);
            v.fallback.push_back(d.name);
        }
        v.provenance = "deterministic";
        return v;
    }
}

std::vector<FeatureVector> Annotator::annotate_clip(const LayoutClip& clip,
                                                    const ControlLayout& layout,
                                                    const FeaturePool& pool) {
    const std::size_t n = layout.points.size();
    std::vector<FeatureVector> out(n);
    if (cfg_.mode == AnnotatorMode::Deterministic) {
        for (std::size_t i = 0; i < n; ++i) out[i] = label_point(clip, layout, layout.points[i], pool);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t i; (i = next++) < n;) {
            try {
                out[i] = annotate_point(clip, layout, layout.points[i], pool);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> threads;
    const int k = static_cast<int>(std::min<std::size_t>(cfg_.max_parallel, n));
    for (int t = 0; t < k; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace opcrecipe
