#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <regex>

#include "opcrecipe/annotator.hpp"
#include "opcrecipe/error.hpp"

namespace opcrecipe {

namespace {

class HttplibTransport final : public Transport {
public:
    HttpResponse post(const HttpRequest& request) override {
        static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
        std::smatch m;
        if (!std::regex_match(request.url, m, url_re))
            throw ConfigError("annotator endpoint '" + request.url + "' is not an http(s) URL");
        httplib::Client client(m[1].str());
        const auto secs = std::chrono::duration<double>(request.timeout_s);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
        client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
        httplib::Headers headers;
        for (const auto& [k, v] : request.headers) headers.emplace(k, v);
        const std::string path = m[2].matched ? m[2].str() : "/";
        auto res = client.Post(path, headers, request.body, "application/json");
        if (!res) throw TransportError("request to " + m[1].str() + " failed: " + httplib::to_string(res.error()));
        return {res->status, res->body};
    }
};

}  // namespace

std::shared_ptr<Transport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

}  // namespace opcrecipe
