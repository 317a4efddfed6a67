#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "opcrecipe/features.hpp"

namespace opcrecipe {

enum class AnnotatorMode { Deterministic, Remote, RemoteWithFallback };

const char* to_string(AnnotatorMode m);
AnnotatorMode annotator_mode_from_string(const std::string& s);

struct AnnotatorConfig {
    AnnotatorMode mode = AnnotatorMode::Deterministic;
    std::string endpoint;  // chat-completion URL
    std::string model;
    std::string credential_env = "OPCRECIPE_ANNOTATOR_KEY";
    double timeout_s = 60.0;
    int max_parallel = 4;
    std::string cache_dir;  // empty: no cache
    int attempts = 3;
    double backoff_s = 1.0;  // first retry delay, doubled per retry
    int canvas_px = 256;

    /// Remote modes need an endpoint, a model and the credential variable set.
    void validate() const;
    std::string credential() const;
};

struct RenderedPointImage {
    std::vector<std::uint8_t> png;
    int width = 0, height = 0;
    int marker_x = 0, marker_y = 0;  // marker center, image pixels (row 0 at the top)
    int clip_width_nm = 0, clip_height_nm = 0;
    PointKind kind = PointKind::Epe;
};

/// Whole clip scaled onto a square canvas, polygons dark on white, the
/// point's current position marked by a red square. Deterministic bytes.
RenderedPointImage render_point_image(const LayoutClip& clip, const ControlLayout& layout,
                                      const ControlPoint& point, int canvas_px = 256);

/// Decoded RGB pixels of an image produced by render_point_image.
std::vector<std::uint8_t> decode_rgb(const RenderedPointImage& image);

std::string sha256_hex(std::string_view data);
std::string base64(std::string_view data);

struct HttpRequest {
    std::string url;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
    double timeout_s = 60.0;
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

class Transport {
public:
    virtual ~Transport() = default;
    /// Throws TransportError on connection failure or timeout.
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// cpp-httplib client, http and https.
std::shared_ptr<Transport> make_http_transport();

struct MiningStats {
    int responses = 0;
    int malformed_entries = 0;  // dropped entries without a usable description
    int duplicates = 0;
};

struct AnnotateStats {
    int cache_hits = 0;
    int network_requests = 0;
    int fallbacks = 0;  // vectors answered wholly by the geometric labeler
};

class Annotator {
public:
    explicit Annotator(AnnotatorConfig cfg, std::shared_ptr<Transport> transport = nullptr);

    /// Pool from the mining prompt over each image; deterministic mode
    /// returns builtin_pool().
    FeaturePool mine_features(const std::vector<RenderedPointImage>& images,
                              const std::string& prompt_template, MiningStats* stats = nullptr);

    /// Labels one point. Deterministic mode delegates to label_point;
    /// remote replies missing a feature are completed by the geometric
    /// labeler and the feature is listed in `fallback`.
    FeatureVector annotate_point(const LayoutClip& clip, const ControlLayout& layout,
                                 const ControlPoint& point, const FeaturePool& pool);

    /// All points of a clip, at most max_parallel requests in flight.
    std::vector<FeatureVector> annotate_clip(const LayoutClip& clip, const ControlLayout& layout,
                                             const FeaturePool& pool);

    void set_labeling_template(std::string text) { labeling_template_ = std::move(text); }
    const AnnotatorConfig& config() const { return cfg_; }
    AnnotateStats stats() const;

private:
    std::string complete(const std::string& prompt, const RenderedPointImage& image,
                         const std::string& cache_key);
    std::string ask(const std::string& prompt, const RenderedPointImage& image);
    FeatureVector parse_labels(const std::string& content, const FeaturePool& pool,
                               const FeatureVector& geometric) const;

    AnnotatorConfig cfg_;
    std::shared_ptr<Transport> transport_;
    std::string labeling_template_;
    std::mutex cache_mutex_;
    std::atomic<int> cache_hits_{0}, requests_{0}, fallbacks_{0};
};

/// Default labeling prompt; {{kind}} and {{features}} are substituted.
std::string default_labeling_template();

/// Text between the first '{' and the last '}' of a chat reply.
std::string extract_json_object(const std::string& content);

}  // namespace opcrecipe
