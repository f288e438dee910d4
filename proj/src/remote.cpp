#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "mmarc/remote.hpp"

namespace mmarc {

using nlohmann::json;

namespace {

struct ParsedEndpoint {
    std::string scheme_host_port;  // e.g. https://api.openai.com
    std::string base_path;         // e.g. /v1
};

ParsedEndpoint parse_endpoint(const std::string& endpoint) {
    const std::size_t scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::ConfigError, "endpoint must start with http:// or https://");
    }
    const std::size_t path_start = endpoint.find('/', scheme_end + 3);
    ParsedEndpoint out;
    if (path_start == std::string::npos) {
        out.scheme_host_port = endpoint;
        out.base_path = "";
    } else {
        out.scheme_host_port = endpoint.substr(0, path_start);
        out.base_path = endpoint.substr(path_start);
        while (!out.base_path.empty() && out.base_path.back() == '/') out.base_path.pop_back();
    }
    return out;
}

// Bounds the number of requests in flight across all worker threads.
class InflightGate {
  public:
    explicit InflightGate(int cap) : cap_(cap > 0 ? cap : 1) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return active_ < cap_; });
        ++active_;
    }
    void release() {
        {
            std::lock_guard<std::mutex> lock(mu_);
            --active_;
        }
        cv_.notify_one();
    }

  private:
    std::mutex mu_;
    std::condition_variable cv_;
    int cap_;
    int active_ = 0;
};

class RateLimiter {
  public:
    explicit RateLimiter(double requests_per_minute) {
        if (requests_per_minute > 0) {
            interval_ = std::chrono::duration<double>(60.0 / requests_per_minute);
        }
    }

    void wait_turn() {
        if (interval_.count() <= 0) return;
        std::chrono::steady_clock::time_point wake;
        {
            std::lock_guard<std::mutex> lock(mu_);
            const auto now = std::chrono::steady_clock::now();
            next_ = std::max(next_, now);
            wake = next_;
            next_ += std::chrono::duration_cast<std::chrono::steady_clock::duration>(interval_);
        }
        std::this_thread::sleep_until(wake);
    }

  private:
    std::mutex mu_;
    std::chrono::duration<double> interval_{0};
    std::chrono::steady_clock::time_point next_{};
};

double jitter_seconds(double max_s) {
    thread_local std::mt19937_64 rng(std::random_device{}());
    return std::uniform_real_distribution<double>(0.0, max_s)(rng);
}

}  // namespace

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= bytes.size(); i += 3) {
        const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(alphabet[(n >> 18) & 63]);
        out.push_back(alphabet[(n >> 12) & 63]);
        out.push_back(alphabet[(n >> 6) & 63]);
        out.push_back(alphabet[n & 63]);
    }
    if (i + 1 == bytes.size()) {
        const std::uint32_t n = bytes[i] << 16;
        out.push_back(alphabet[(n >> 18) & 63]);
        out.push_back(alphabet[(n >> 12) & 63]);
        out += "==";
    } else if (i + 2 == bytes.size()) {
        const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(alphabet[(n >> 18) & 63]);
        out.push_back(alphabet[(n >> 12) & 63]);
        out.push_back(alphabet[(n >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

struct RemoteBackend::Impl {
    RemoteConfig cfg;
    ParsedEndpoint endpoint;
    InflightGate gate;
    RateLimiter limiter;

    explicit Impl(RemoteConfig c)
        : cfg(std::move(c)),
          endpoint(parse_endpoint(cfg.endpoint)),
          gate(cfg.max_inflight),
          limiter(cfg.requests_per_minute) {}
};

RemoteBackend::RemoteBackend(RemoteConfig cfg) {
    if (cfg.endpoint.empty()) {
        throw Error(ErrorCode::ConfigError, "remote backend requires an endpoint");
    }
    if (cfg.model.empty()) {
        throw Error(ErrorCode::ConfigError, "remote backend requires a model id");
    }
    impl_ = std::make_unique<Impl>(std::move(cfg));
}

RemoteBackend::~RemoteBackend() = default;

std::string RemoteBackend::identity() const {
    return "remote:" + impl_->cfg.endpoint + "#" + impl_->cfg.model;
}

std::string RemoteBackend::wire_body(const ModelRequest& req) {
    json messages = json::array();
    for (const Message& msg : req.messages) {
        json m = {{"role", msg.role}};
        if (msg.parts.size() == 1 && msg.parts[0].kind == PartKind::Text) {
            m["content"] = msg.parts[0].text;
        } else {
            json content = json::array();
            for (const MessagePart& part : msg.parts) {
                if (part.kind == PartKind::Text) {
                    content.push_back({{"type", "text"}, {"text", part.text}});
                } else {
                    content.push_back(
                        {{"type", "image_url"},
                         {"image_url",
                          {{"url", "data:image/png;base64," + base64_encode(part.png)}}}});
                }
            }
            m["content"] = std::move(content);
        }
        messages.push_back(std::move(m));
    }
    json body = {
        {"model", req.model_id},
        {"temperature", req.temperature},
        {"max_tokens", req.max_output_tokens},
        {"messages", std::move(messages)},
    };
    return body.dump();
}

ModelResponse RemoteBackend::complete(const ModelRequest& req) {
    const std::string body = wire_body(req);
    const std::string path = impl_->endpoint.base_path + "/chat/completions";

    httplib::Headers headers;
    if (!impl_->cfg.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + impl_->cfg.api_key);
    }

    std::string last_error;
    bool rate_limited = false;
    for (int attempt = 1; attempt <= impl_->cfg.max_attempts; ++attempt) {
        if (attempt > 1) {
            const double delay = impl_->cfg.backoff_base_s * static_cast<double>(1 << (attempt - 2)) +
                                 jitter_seconds(impl_->cfg.backoff_base_s / 2.0);
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
        impl_->limiter.wait_turn();
        impl_->gate.acquire();
        const auto start = std::chrono::steady_clock::now();
        httplib::Client client(impl_->endpoint.scheme_host_port);
        client.set_connection_timeout(impl_->cfg.connect_timeout_s, 0);
        client.set_read_timeout(impl_->cfg.read_timeout_s, 0);
        auto result = client.Post(path, headers, body, "application/json");
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
        impl_->gate.release();

        if (!result) {
            last_error = "transport failure: " + httplib::to_string(result.error());
            rate_limited = false;
            continue;
        }
        const int status = result->status;
        if (status == 401 || status == 403) {
            throw Error(ErrorCode::AuthError,
                        "endpoint rejected credentials (HTTP " + std::to_string(status) + ")");
        }
        if (status == 429 || status >= 500) {
            last_error = "HTTP " + std::to_string(status);
            rate_limited = (status == 429);
            continue;
        }
        if (status != 200) {
            throw Error(ErrorCode::ProviderSchemaError,
                        "unexpected HTTP " + std::to_string(status) + ": " + result->body);
        }

        json parsed = json::parse(result->body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty()) {
            throw Error(ErrorCode::ProviderSchemaError, "response body lacks choices");
        }
        const json& message = parsed["choices"][0].value("message", json::object());
        std::string text;
        if (message.contains("content")) {
            const json& content = message["content"];
            if (content.is_string()) {
                text = content.get<std::string>();
            } else if (content.is_array()) {
                for (const json& piece : content) {
                    if (piece.value("type", "") == "text") text += piece.value("text", "");
                }
            }
        }
        ModelResponse resp;
        resp.text = std::move(text);
        resp.latency_ms = elapsed;
        resp.backend_kind = BackendKind::Remote;
        if (parsed.contains("usage")) {
            TokenUsage usage;
            usage.prompt_tokens =
                parsed["usage"].value("prompt_tokens", static_cast<std::int64_t>(0));
            usage.completion_tokens =
                parsed["usage"].value("completion_tokens", static_cast<std::int64_t>(0));
            resp.usage = usage;
        }
        return resp;
    }
    if (rate_limited) {
        throw Error(ErrorCode::RateLimited, "retries exhausted: " + last_error);
    }
    throw Error(ErrorCode::TransportError, "retries exhausted: " + last_error);
}

}  // namespace mmarc
