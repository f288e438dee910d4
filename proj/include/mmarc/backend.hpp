#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mmarc/prompt.hpp"

namespace mmarc {

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct ModelRequest {
    std::string model_id;
    MessageSeq messages;
    double temperature = 0.7;
    int max_output_tokens = 8192;
    std::string request_tag;  // "<task_id>[#test]/<stage>/<round>", unique per run
};

enum class BackendKind { Remote, Scripted, Replay };

const char* backend_kind_name(BackendKind kind);

struct ModelResponse {
    std::string text;
    std::optional<TokenUsage> usage;
    std::int64_t latency_ms = 0;
    BackendKind backend_kind = BackendKind::Scripted;
};

// Canonical content serialization: image parts collapse to the SHA-256 of
// their PNG bytes, so the digest depends only on content, not object
// identity. The digest keys transcript lookup during replay.
nlohmann::json canonical_messages_json(const MessageSeq& messages);
std::string request_digest(const ModelRequest& req);

class Backend {
  public:
    virtual ~Backend() = default;
    virtual ModelResponse complete(const ModelRequest& req) = 0;
    virtual BackendKind kind() const = 0;
    virtual std::string identity() const = 0;
};

// Deterministic test double. Either a FIFO queue of canned replies or a
// responder function computed from the request. Captures every request for
// inspection. Thread-safe.
class ScriptedBackend : public Backend {
  public:
    explicit ScriptedBackend(std::vector<std::string> responses);
    explicit ScriptedBackend(std::function<std::string(const ModelRequest&)> responder);

    ModelResponse complete(const ModelRequest& req) override;
    BackendKind kind() const override { return BackendKind::Scripted; }
    std::string identity() const override;

    std::vector<ModelRequest> requests() const;
    std::size_t call_count() const;

  private:
    mutable std::mutex mu_;
    std::deque<std::string> queue_;
    std::function<std::string(const ModelRequest&)> responder_;
    std::vector<ModelRequest> seen_;
};

// Append-only JSONL transcript plus a content-addressed PNG blob directory.
// Appends are serialized through one writer lock and flushed per line.
class TranscriptWriter {
  public:
    TranscriptWriter(std::string jsonl_path, std::string blob_dir);

    void append(const ModelRequest& req, const std::string& digest, const ModelResponse& resp);

    const std::string& path() const { return jsonl_path_; }
    const std::string& blob_dir() const { return blob_dir_; }

  private:
    std::mutex mu_;
    std::string jsonl_path_;
    std::string blob_dir_;
    std::set<std::string> seen_tags_;
    std::set<std::string> written_blobs_;
};

// Pass-through backend that persists every call to a transcript store.
class RecordingBackend : public Backend {
  public:
    RecordingBackend(Backend& inner, TranscriptWriter& store);

    ModelResponse complete(const ModelRequest& req) override;
    BackendKind kind() const override { return inner_.kind(); }
    std::string identity() const override { return inner_.identity(); }

  private:
    Backend& inner_;
    TranscriptWriter& store_;
};

// Replays a recorded transcript strictly: a request whose digest was never
// recorded (or whose recorded occurrences are exhausted) is a ReplayMiss.
// Performs no network operations by construction.
class ReplayBackend : public Backend {
  public:
    explicit ReplayBackend(const std::string& jsonl_path);

    ModelResponse complete(const ModelRequest& req) override;
    BackendKind kind() const override { return BackendKind::Replay; }
    std::string identity() const override;

    std::size_t served() const;
    std::size_t entries_loaded() const { return loaded_; }

  private:
    struct Entry {
        std::string text;
        std::optional<TokenUsage> usage;
        std::int64_t latency_ms = 0;
    };

    mutable std::mutex mu_;
    std::string path_;
    std::map<std::string, std::deque<Entry>> by_digest_;
    std::size_t loaded_ = 0;
    std::size_t served_ = 0;
};

}  // namespace mmarc
