#pragma once

#include <memory>
#include <string>

#include "mmarc/backend.hpp"

namespace mmarc {

// OpenAI-compatible chat-completions endpoint; images travel as inline
// base64 PNG data URLs.
struct RemoteConfig {
    std::string endpoint;  // base URL, e.g. https://api.openai.com/v1
    std::string model;
    std::string api_key;

    int max_attempts = 5;          // total tries per logical call
    double backoff_base_s = 0.5;   // doubled per attempt, plus jitter
    int connect_timeout_s = 15;
    int read_timeout_s = 300;
    int max_inflight = 8;          // global in-flight request cap
    double requests_per_minute = 0;  // 0 disables the rate limiter
};

class RemoteBackend : public Backend {
  public:
    explicit RemoteBackend(RemoteConfig cfg);
    ~RemoteBackend() override;

    ModelResponse complete(const ModelRequest& req) override;
    BackendKind kind() const override { return BackendKind::Remote; }
    std::string identity() const override;

    // Request body in the provider wire shape; exposed for tests.
    static std::string wire_body(const ModelRequest& req);

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::string base64_encode(const std::vector<std::uint8_t>& bytes);

}  // namespace mmarc
