#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmarc/grid.hpp"
#include "mmarc/render.hpp"

namespace mmarc {

enum class PartKind { Text, Image };

struct MessagePart {
    PartKind kind = PartKind::Text;
    std::string text;                // set for Text parts
    std::vector<std::uint8_t> png;   // set for Image parts (lossless PNG bytes)

    static MessagePart text_part(std::string t);
    static MessagePart image_part(std::vector<std::uint8_t> png_bytes);

    friend bool operator==(const MessagePart&, const MessagePart&) = default;
};

struct Message {
    std::string role = "user";
    std::vector<MessagePart> parts;

    friend bool operator==(const Message&, const Message&) = default;
};

using MessageSeq = std::vector<Message>;

// One family per pipeline stage; the _text/_vision variants cover the
// modality-ablation arms.
enum class PromptFamily {
    TextBaseline,
    RuleSummarizationVision,
    RuleSummarizationText,
    RuleApplicationText,
    RuleApplicationVision,
    VerificationVision,
    VerificationText,
    RefinementText,
};

const char* prompt_family_name(PromptFamily family);

// Carried into a refinement round: what the previous attempt produced and
// what the critic said about it.
struct Feedback {
    std::optional<Grid> previous_prediction;
    std::string critic_rationale;
    int round_index = 0;  // 1-based index of the round being revised
};

// Fixed prompt wording lives in external text assets with {{placeholder}}
// markers; a checksum of the loaded set goes into every run manifest.
class TemplateSet {
  public:
    static TemplateSet load(const std::string& dir);

    const std::string& get(const std::string& name) const;
    const std::string& checksum() const { return checksum_; }
    const std::string& dir() const { return dir_; }

  private:
    std::map<std::string, std::string> templates_;
    std::string checksum_;
    std::string dir_;
};

struct PromptInputs {
    const RedactedTask* task = nullptr;
    int test_index = 0;
    std::optional<std::string> rule;
    std::optional<Grid> prediction;
    std::optional<Feedback> feedback;
};

class PromptKit {
  public:
    PromptKit(TemplateSet templates, RenderConfig render_cfg);

    // Builds the family's message sequence. Deterministic: identical inputs
    // yield byte-identical sequences. Throws MissingArgument when a required
    // input for the family is absent.
    MessageSeq build(PromptFamily family, const PromptInputs& in) const;

    const TemplateSet& templates() const { return templates_; }
    const RenderConfig& render_config() const { return render_cfg_; }

  private:
    TemplateSet templates_;
    RenderConfig render_cfg_;
};

// True iff no test ground-truth output appears in any part, textually
// (canonical nested-list form as a substring) or as rendered PNG bytes.
// Conservative: a model prediction that happens to equal the ground truth
// is indistinguishable from a leak and is reported as one.
bool audit_no_ground_truth(const MessageSeq& seq, const Task& task, const RenderConfig& cfg);

}  // namespace mmarc
