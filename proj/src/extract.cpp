#include "mmarc/extract.hpp"

#include <algorithm>
#include <cctype>

namespace mmarc {

std::string trim_copy(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

namespace {

constexpr std::string_view kBoxedMarker = "\\boxed{";

// Payload span of the balanced \boxed{...} starting at `marker_pos`, or
// npos-pair when the group never closes.
std::pair<std::size_t, std::size_t> boxed_payload_span(std::string_view text, std::size_t marker_pos) {
    std::size_t depth = 1;
    const std::size_t start = marker_pos + kBoxedMarker.size();
    for (std::size_t i = start; i < text.size(); ++i) {
        if (text[i] == '{') {
            ++depth;
        } else if (text[i] == '}') {
            if (--depth == 0) return {start, i};
        }
    }
    return {std::string_view::npos, std::string_view::npos};
}

// All balanced boxed payloads in order of appearance.
std::vector<std::string> all_boxed(std::string_view text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = text.find(kBoxedMarker, pos)) != std::string_view::npos) {
        auto [start, end] = boxed_payload_span(text, pos);
        if (start != std::string_view::npos) {
            out.emplace_back(text.substr(start, end - start));
        }
        pos = pos + kBoxedMarker.size();
    }
    return out;
}

bool grid_literal_charset(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) ||
               std::isspace(static_cast<unsigned char>(c)) || c == '[' || c == ']' || c == ',' ||
               c == '-';
    });
}

// Last balanced bracket group that looks like a nested integer list.
// Syntactic discovery only; semantic validation is the caller's job.
std::optional<std::string> find_last_grid_literal(std::string_view text) {
    std::optional<std::string> found;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t open = text.find('[', pos);
        if (open == std::string_view::npos) break;
        // Must open a nested list: next non-space char is another '['.
        std::size_t inner = open + 1;
        while (inner < text.size() && std::isspace(static_cast<unsigned char>(text[inner]))) ++inner;
        if (inner >= text.size() || text[inner] != '[') {
            pos = open + 1;
            continue;
        }
        std::size_t depth = 0;
        std::size_t close = std::string_view::npos;
        for (std::size_t i = open; i < text.size(); ++i) {
            if (text[i] == '[') {
                ++depth;
            } else if (text[i] == ']') {
                if (depth == 0) break;
                if (--depth == 0) {
                    close = i;
                    break;
                }
            }
        }
        if (close == std::string_view::npos) {
            pos = open + 1;
            continue;
        }
        std::string_view candidate = text.substr(open, close - open + 1);
        if (grid_literal_charset(candidate)) {
            found = std::string(candidate);
            pos = close + 1;
        } else {
            pos = open + 1;
        }
    }
    return found;
}

}  // namespace

std::optional<std::string> extract_boxed(std::string_view text) {
    auto boxes = all_boxed(text);
    if (boxes.empty()) return std::nullopt;
    return boxes.back();
}

Grid parse_matrix_answer(std::string_view text) {
    std::string_view haystack = text;
    std::string boxed_storage;
    if (auto boxed = extract_boxed(text)) {
        // The model committed to a boxed answer; look only inside it.
        boxed_storage = std::move(*boxed);
        haystack = boxed_storage;
    }
    auto literal = find_last_grid_literal(haystack);
    if (!literal) {
        throw Error(ErrorCode::NoAnswerFound, "no output matrix in model reply");
    }
    return parse_grid_text(*literal);
}

Verdict parse_verdict(std::string_view text) {
    auto boxes = all_boxed(text);
    for (auto it = boxes.rbegin(); it != boxes.rend(); ++it) {
        std::string token = trim_copy(*it);
        std::transform(token.begin(), token.end(), token.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (token == "true") {
            return Verdict{VerdictValue::Yes, *it, ParseQuality::Explicit};
        }
        if (token == "false") {
            return Verdict{VerdictValue::No, *it, ParseQuality::Explicit};
        }
    }
    return Verdict{VerdictValue::Yes, "", ParseQuality::Defaulted};
}

std::string parse_rule(std::string_view text) {
    if (auto boxed = extract_boxed(text)) {
        std::string body = trim_copy(*boxed);
        if (!body.empty()) return body;
    }
    std::string body = trim_copy(text);
    if (body.empty()) {
        throw Error(ErrorCode::EmptyResponse, "summarization reply is empty");
    }
    return body;
}

}  // namespace mmarc
