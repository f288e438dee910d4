#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "mmarc/grid.hpp"

namespace mmarc {

// Content of the last balanced \boxed{...} group, or nullopt when the text
// has none. Unbalanced groups do not count.
std::optional<std::string> extract_boxed(std::string_view text);

// Predicted output matrix from a model reply: boxed payload when present,
// otherwise the last nested-list literal anywhere in the text. The found
// literal is validated through the grid codec, so RaggedRows /
// ValueOutOfRange / SizeOutOfRange propagate. Throws NoAnswerFound when
// nothing grid-shaped exists.
Grid parse_matrix_answer(std::string_view text);

enum class VerdictValue { Yes, No };
enum class ParseQuality { Explicit, Defaulted };

struct Verdict {
    VerdictValue value = VerdictValue::Yes;
    std::string raw;  // the boxed payload for explicit verdicts
    ParseQuality quality = ParseQuality::Defaulted;
};

// Last boxed True/False (case-insensitive) wins; with no boxed verdict the
// result defaults to yes so an unparseable critic reply stops the loop.
// Total: never throws.
Verdict parse_verdict(std::string_view text);

// Rule text from a summarization reply: boxed payload when present and
// non-empty, else the whole trimmed reply. Throws EmptyResponse when the
// reply is blank.
std::string parse_rule(std::string_view text);

std::string trim_copy(std::string_view text);

}  // namespace mmarc
