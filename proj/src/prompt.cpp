#include "mmarc/prompt.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmarc/digest.hpp"

namespace mmarc {

namespace {

const char* const kTemplateNames[] = {
    "text_baseline",
    "rule_summarization_vision",
    "rule_summarization_text",
    "rule_application_text",
    "rule_application_vision",
    "verification_vision",
    "verification_text",
    "refinement_block",
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::ConfigError, "cannot read template " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string rstrip(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

}  // namespace

MessagePart MessagePart::text_part(std::string t) {
    MessagePart p;
    p.kind = PartKind::Text;
    p.text = std::move(t);
    return p;
}

MessagePart MessagePart::image_part(std::vector<std::uint8_t> png_bytes) {
    MessagePart p;
    p.kind = PartKind::Image;
    p.png = std::move(png_bytes);
    return p;
}

const char* prompt_family_name(PromptFamily family) {
    switch (family) {
        case PromptFamily::TextBaseline: return "text_baseline";
        case PromptFamily::RuleSummarizationVision: return "rule_summarization_vision";
        case PromptFamily::RuleSummarizationText: return "rule_summarization_text";
        case PromptFamily::RuleApplicationText: return "rule_application_text";
        case PromptFamily::RuleApplicationVision: return "rule_application_vision";
        case PromptFamily::VerificationVision: return "verification_vision";
        case PromptFamily::VerificationText: return "verification_text";
        case PromptFamily::RefinementText: return "refinement_text";
    }
    return "unknown";
}

TemplateSet TemplateSet::load(const std::string& dir) {
    TemplateSet set;
    set.dir_ = dir;
    std::string checksum_input;
    for (const char* name : kTemplateNames) {
        std::string content = read_file(std::filesystem::path(dir) / (std::string(name) + ".txt"));
        checksum_input += name;
        checksum_input += '\n';
        checksum_input += content;
        checksum_input += '\n';
        set.templates_.emplace(name, std::move(content));
    }
    set.checksum_ = sha256_hex(checksum_input);
    return set;
}

const std::string& TemplateSet::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) {
        throw Error(ErrorCode::ConfigError, "unknown template " + name);
    }
    return it->second;
}

PromptKit::PromptKit(TemplateSet templates, RenderConfig render_cfg)
    : templates_(std::move(templates)), render_cfg_(std::move(render_cfg)) {
    render_cfg_.validate();
}

namespace {

enum class GridChannel { Text, Image };

struct Layout {
    const char* template_name = nullptr;
    GridChannel grids = GridChannel::Text;  // how matrices are conveyed
    bool needs_rule = false;
    bool needs_prediction = false;
    bool needs_feedback = false;
};

Layout family_layout(PromptFamily family) {
    switch (family) {
        case PromptFamily::TextBaseline:
            return {"text_baseline", GridChannel::Text, false, false, false};
        case PromptFamily::RuleSummarizationVision:
            return {"rule_summarization_vision", GridChannel::Image, false, false, false};
        case PromptFamily::RuleSummarizationText:
            return {"rule_summarization_text", GridChannel::Text, false, false, false};
        case PromptFamily::RuleApplicationText:
            return {"rule_application_text", GridChannel::Text, true, false, false};
        case PromptFamily::RuleApplicationVision:
            return {"rule_application_vision", GridChannel::Image, true, false, false};
        case PromptFamily::VerificationVision:
            return {"verification_vision", GridChannel::Image, false, true, false};
        case PromptFamily::VerificationText:
            return {"verification_text", GridChannel::Text, false, true, false};
        case PromptFamily::RefinementText:
            return {"rule_application_text", GridChannel::Text, true, false, true};
    }
    throw Error(ErrorCode::MissingArgument, "unknown prompt family");
}

// Streams template text into message parts, flushing the text buffer
// whenever an image must be inserted.
class PartAssembler {
  public:
    explicit PartAssembler(const RenderConfig& cfg) : cfg_(cfg) {}

    void text(const std::string& t) { buffer_ += t; }

    void grid(const Grid& g, GridChannel channel) {
        if (channel == GridChannel::Text) {
            buffer_ += encode_grid_text(g);
        } else {
            flush();
            parts_.push_back(MessagePart::image_part(encode_png(render_grid(g, cfg_))));
        }
    }

    std::vector<MessagePart> finish() {
        std::string tail = rstrip(std::move(buffer_));
        buffer_.clear();
        if (!tail.empty()) {
            parts_.push_back(MessagePart::text_part(std::move(tail)));
        }
        return std::move(parts_);
    }

  private:
    void flush() {
        if (!buffer_.empty()) {
            parts_.push_back(MessagePart::text_part(std::move(buffer_)));
            buffer_.clear();
        }
    }

    const RenderConfig& cfg_;
    std::string buffer_;
    std::vector<MessagePart> parts_;
};

}  // namespace

MessageSeq PromptKit::build(PromptFamily family, const PromptInputs& in) const {
    const Layout layout = family_layout(family);
    if (in.task == nullptr) {
        throw Error(ErrorCode::MissingArgument, "prompt requires a task view");
    }
    const RedactedTask& task = *in.task;
    if (task.examples.empty()) {
        throw Error(ErrorCode::MissingArgument, "task has no example pairs");
    }
    if (in.test_index < 0 || static_cast<std::size_t>(in.test_index) >= task.test_inputs.size()) {
        throw Error(ErrorCode::MissingArgument, "test index out of range");
    }
    if (layout.needs_rule && !in.rule) {
        throw Error(ErrorCode::MissingArgument,
                    std::string(prompt_family_name(family)) + " requires a rule");
    }
    if (layout.needs_prediction && !in.prediction) {
        throw Error(ErrorCode::MissingArgument,
                    std::string(prompt_family_name(family)) + " requires a prediction");
    }
    if (layout.needs_feedback && !in.feedback) {
        throw Error(ErrorCode::MissingArgument,
                    std::string(prompt_family_name(family)) + " requires feedback");
    }

    const std::string& tmpl = templates_.get(layout.template_name);
    PartAssembler assembler(render_cfg_);

    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const std::size_t open = tmpl.find("{{", pos);
        if (open == std::string::npos) {
            assembler.text(tmpl.substr(pos));
            break;
        }
        assembler.text(tmpl.substr(pos, open - pos));
        const std::size_t close = tmpl.find("}}", open + 2);
        if (close == std::string::npos) {
            throw Error(ErrorCode::ConfigError,
                        std::string("unterminated placeholder in template ") + layout.template_name);
        }
        const std::string key = tmpl.substr(open + 2, close - open - 2);
        pos = close + 2;

        if (key == "examples") {
            for (std::size_t k = 0; k < task.examples.size(); ++k) {
                if (k > 0) assembler.text("\n");
                assembler.text("Example Input " + std::to_string(k + 1) + ": ");
                assembler.grid(task.examples[k].input, layout.grids);
                assembler.text("\nExample Output " + std::to_string(k + 1) + ": ");
                assembler.grid(*task.examples[k].output, layout.grids);
            }
        } else if (key == "test_input") {
            assembler.grid(task.test_inputs[static_cast<std::size_t>(in.test_index)], layout.grids);
        } else if (key == "prediction") {
            assembler.grid(*in.prediction, layout.grids);
        } else if (key == "rule") {
            assembler.text(*in.rule);
        } else if (key == "legend") {
            assembler.text(color_legend_text(render_cfg_.palette));
        } else if (key == "feedback") {
            if (in.feedback) {
                const std::string& block = templates_.get("refinement_block");
                std::string expanded;
                std::size_t bpos = 0;
                while (bpos < block.size()) {
                    const std::size_t bopen = block.find("{{", bpos);
                    if (bopen == std::string::npos) {
                        expanded += block.substr(bpos);
                        break;
                    }
                    expanded += block.substr(bpos, bopen - bpos);
                    const std::size_t bclose = block.find("}}", bopen + 2);
                    if (bclose == std::string::npos) {
                        throw Error(ErrorCode::ConfigError,
                                    "unterminated placeholder in refinement_block");
                    }
                    const std::string bkey = block.substr(bopen + 2, bclose - bopen - 2);
                    bpos = bclose + 2;
                    if (bkey == "previous_prediction") {
                        expanded += in.feedback->previous_prediction
                                        ? encode_grid_text(*in.feedback->previous_prediction)
                                        : "(no valid output matrix was produced)";
                    } else if (bkey == "critic_rationale") {
                        expanded += in.feedback->critic_rationale;
                    } else {
                        throw Error(ErrorCode::ConfigError,
                                    "unknown placeholder {{" + bkey + "}} in refinement_block");
                    }
                }
                assembler.text("\n\n" + rstrip(std::move(expanded)));
            }
        } else {
            throw Error(ErrorCode::ConfigError, "unknown placeholder {{" + key + "}} in template " +
                                                    layout.template_name);
        }
    }

    Message msg;
    msg.role = "user";
    msg.parts = assembler.finish();
    return MessageSeq{std::move(msg)};
}

bool audit_no_ground_truth(const MessageSeq& seq, const Task& task, const RenderConfig& cfg) {
    std::vector<std::string> forbidden_text;
    std::vector<std::vector<std::uint8_t>> forbidden_png;
    for (const Pair& test : task.tests) {
        if (!test.output) continue;
        forbidden_text.push_back(encode_grid_text(*test.output));
        forbidden_png.push_back(encode_png(render_grid(*test.output, cfg)));
    }
    if (forbidden_text.empty()) return true;

    for (const Message& msg : seq) {
        for (const MessagePart& part : msg.parts) {
            if (part.kind == PartKind::Text) {
                for (const std::string& needle : forbidden_text) {
                    if (part.text.find(needle) != std::string::npos) return false;
                }
            } else {
                for (const auto& png : forbidden_png) {
                    if (part.png == png) return false;
                }
            }
        }
    }
    return true;
}

}  // namespace mmarc
