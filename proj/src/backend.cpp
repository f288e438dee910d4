#include "mmarc/backend.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "mmarc/digest.hpp"
#include "mmarc/runner.hpp"

namespace mmarc {

using nlohmann::json;

const char* backend_kind_name(BackendKind kind) {
    switch (kind) {
        case BackendKind::Remote: return "remote";
        case BackendKind::Scripted: return "scripted";
        case BackendKind::Replay: return "replay";
    }
    return "unknown";
}

json canonical_messages_json(const MessageSeq& messages) {
    json out = json::array();
    for (const Message& msg : messages) {
        json parts = json::array();
        for (const MessagePart& part : msg.parts) {
            if (part.kind == PartKind::Text) {
                parts.push_back({{"kind", "text"}, {"text", part.text}});
            } else {
                parts.push_back({{"kind", "image"}, {"sha256", sha256_hex(part.png)}});
            }
        }
        out.push_back({{"role", msg.role}, {"parts", std::move(parts)}});
    }
    return out;
}

std::string request_digest(const ModelRequest& req) {
    json canon = {
        {"model", req.model_id},
        {"temperature", req.temperature},
        {"messages", canonical_messages_json(req.messages)},
    };
    return sha256_hex(canon.dump());
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses)
    : queue_(responses.begin(), responses.end()) {}

ScriptedBackend::ScriptedBackend(std::function<std::string(const ModelRequest&)> responder)
    : responder_(std::move(responder)) {}

ModelResponse ScriptedBackend::complete(const ModelRequest& req) {
    std::string text;
    {
        std::lock_guard<std::mutex> lock(mu_);
        seen_.push_back(req);
        if (responder_) {
            text = responder_(req);
        } else {
            if (queue_.empty()) {
                throw Error(ErrorCode::TransportError, "scripted response queue exhausted at tag " +
                                                           req.request_tag);
            }
            text = std::move(queue_.front());
            queue_.pop_front();
        }
    }
    ModelResponse resp;
    resp.text = std::move(text);
    resp.latency_ms = 0;
    resp.backend_kind = BackendKind::Scripted;
    return resp;
}

std::string ScriptedBackend::identity() const {
    return responder_ ? "scripted:responder" : "scripted:queue";
}

std::vector<ModelRequest> ScriptedBackend::requests() const {
    std::lock_guard<std::mutex> lock(mu_);
    return seen_;
}

std::size_t ScriptedBackend::call_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return seen_.size();
}

TranscriptWriter::TranscriptWriter(std::string jsonl_path, std::string blob_dir)
    : jsonl_path_(std::move(jsonl_path)), blob_dir_(std::move(blob_dir)) {
    namespace fs = std::filesystem;
    std::error_code ec;
    const fs::path jsonl(jsonl_path_);
    if (jsonl.has_parent_path()) fs::create_directories(jsonl.parent_path(), ec);
    fs::create_directories(blob_dir_, ec);
    if (!fs::is_directory(blob_dir_)) {
        throw Error(ErrorCode::StorageError, "cannot create blob directory " + blob_dir_);
    }
    std::ofstream probe(jsonl_path_, std::ios::app);
    if (!probe) {
        throw Error(ErrorCode::StorageError, "cannot open transcript " + jsonl_path_ + " for append");
    }
}

void TranscriptWriter::append(const ModelRequest& req, const std::string& digest,
                              const ModelResponse& resp) {
    json request_json = {
        {"model", req.model_id},
        {"temperature", req.temperature},
        {"max_output_tokens", req.max_output_tokens},
        {"messages", canonical_messages_json(req.messages)},
    };
    json response_json = {
        {"text", resp.text},
        {"latency_ms", resp.latency_ms},
        {"backend", backend_kind_name(resp.backend_kind)},
    };
    if (resp.usage) {
        response_json["usage"] = {{"prompt_tokens", resp.usage->prompt_tokens},
                                  {"completion_tokens", resp.usage->completion_tokens}};
    }
    json entry = {
        {"digest", digest},
        {"tag", req.request_tag},
        {"ts", now_rfc3339_utc()},
        {"request", std::move(request_json)},
        {"response", std::move(response_json)},
    };
    const std::string line = entry.dump();

    std::lock_guard<std::mutex> lock(mu_);
    if (!req.request_tag.empty() && !seen_tags_.insert(req.request_tag).second) {
        throw Error(ErrorCode::UsageError, "duplicate request tag " + req.request_tag);
    }
    for (const Message& msg : req.messages) {
        for (const MessagePart& part : msg.parts) {
            if (part.kind != PartKind::Image) continue;
            const std::string hash = sha256_hex(part.png);
            if (!written_blobs_.insert(hash).second) continue;
            const std::filesystem::path blob = std::filesystem::path(blob_dir_) / (hash + ".png");
            if (std::filesystem::exists(blob)) continue;
            std::ofstream out(blob, std::ios::binary | std::ios::trunc);
            if (!out || !out.write(reinterpret_cast<const char*>(part.png.data()),
                                   static_cast<std::streamsize>(part.png.size()))) {
                throw Error(ErrorCode::StorageError, "cannot write blob " + blob.string());
            }
        }
    }
    std::ofstream out(jsonl_path_, std::ios::app);
    if (!out || !(out << line << '\n' << std::flush)) {
        throw Error(ErrorCode::StorageError, "cannot append to transcript " + jsonl_path_);
    }
}

RecordingBackend::RecordingBackend(Backend& inner, TranscriptWriter& store)
    : inner_(inner), store_(store) {}

ModelResponse RecordingBackend::complete(const ModelRequest& req) {
    ModelResponse resp = inner_.complete(req);
    store_.append(req, request_digest(req), resp);
    return resp;
}

ReplayBackend::ReplayBackend(const std::string& jsonl_path) : path_(jsonl_path) {
    std::ifstream in(jsonl_path);
    if (!in) {
        throw Error(ErrorCode::StorageError, "cannot open transcript " + jsonl_path);
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json entry = json::parse(line, nullptr, false);
        if (entry.is_discarded() || !entry.contains("digest") || !entry.contains("response")) {
            throw Error(ErrorCode::StorageError, "transcript " + jsonl_path + " line " +
                                                     std::to_string(line_no) + " is not a valid entry");
        }
        Entry e;
        const json& resp = entry["response"];
        e.text = resp.value("text", "");
        e.latency_ms = resp.value("latency_ms", static_cast<std::int64_t>(0));
        if (resp.contains("usage")) {
            TokenUsage usage;
            usage.prompt_tokens = resp["usage"].value("prompt_tokens", static_cast<std::int64_t>(0));
            usage.completion_tokens =
                resp["usage"].value("completion_tokens", static_cast<std::int64_t>(0));
            e.usage = usage;
        }
        by_digest_[entry["digest"].get<std::string>()].push_back(std::move(e));
        ++loaded_;
    }
}

ModelResponse ReplayBackend::complete(const ModelRequest& req) {
    const std::string digest = request_digest(req);
    std::lock_guard<std::mutex> lock(mu_);
    auto it = by_digest_.find(digest);
    if (it == by_digest_.end() || it->second.empty()) {
        throw Error(ErrorCode::ReplayMiss, "no recorded response for digest " + digest + " (tag " +
                                               req.request_tag + ")");
    }
    Entry e = std::move(it->second.front());
    it->second.pop_front();
    ++served_;
    ModelResponse resp;
    resp.text = std::move(e.text);
    resp.usage = e.usage;
    resp.latency_ms = e.latency_ms;
    resp.backend_kind = BackendKind::Replay;
    return resp;
}

std::string ReplayBackend::identity() const {
    return "replay:" + path_;
}

std::size_t ReplayBackend::served() const {
    std::lock_guard<std::mutex> lock(mu_);
    return served_;
}

}  // namespace mmarc
