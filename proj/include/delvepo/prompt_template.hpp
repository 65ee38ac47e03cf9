#pragma once

#include <set>
#include <string>
#include <vector>

#include "delvepo/component.hpp"
#include "delvepo/errors.hpp"
#include "delvepo/markup.hpp"

namespace delvepo {

/// One piece of a prompt template: fixed text, or a component slot with an
/// optional descriptive wrapper that disappears together with an empty value.
struct TemplateSegment {
    enum class Kind { Literal, Slot };
    Kind kind = Kind::Literal;
    std::string text;            // Literal
    std::string slot_name;       // Slot
    std::string wrapper_prefix;  // Slot, may be empty
    std::string wrapper_suffix;  // Slot, may be empty
};

/// Template file syntax:
///   {{name}}                     a bare slot
///   {{#name}}pre {{name}} post{{/name}}   a slot with wrapper text
/// Wrapper text renders only when the slot value is non-empty.
class PromptTemplate {
  public:
    static PromptTemplate parse(const std::string& source, const Registry& registry) {
        PromptTemplate t;
        t.source_ = source;
        std::string literal;
        std::size_t pos = 0;
        auto flush_literal = [&] {
            if (!literal.empty()) {
                t.segments_.push_back({TemplateSegment::Kind::Literal, literal, "", "", ""});
                literal.clear();
            }
        };
        while (pos < source.size()) {
            auto open = source.find("{{", pos);
            if (open == std::string::npos) {
                literal += source.substr(pos);
                break;
            }
            literal += source.substr(pos, open - pos);
            auto close = source.find("}}", open + 2);
            if (close == std::string::npos)
                throw ConfigError("template: unterminated '{{' at offset " +
                                  std::to_string(open));
            std::string token = source.substr(open + 2, close - open - 2);
            pos = close + 2;
            if (token.empty())
                throw ConfigError("template: empty '{{}}' token");
            if (token[0] == '/')
                throw ConfigError("template: '{{/" + token.substr(1) +
                                  "}}' without a matching '{{#" + token.substr(1) + "}}'");
            if (token[0] == '#') {
                std::string name = token.substr(1);
                std::string end_marker = "{{/" + name + "}}";
                auto end = source.find(end_marker, pos);
                if (end == std::string::npos)
                    throw ConfigError("template: wrapper '{{#" + name + "}}' is never closed");
                std::string body = source.substr(pos, end - pos);
                std::string slot_marker = "{{" + name + "}}";
                auto slot = body.find(slot_marker);
                if (slot == std::string::npos)
                    throw ConfigError("template: wrapper for '" + name +
                                      "' does not contain the '{{" + name + "}}' slot");
                if (body.find("{{", slot + slot_marker.size()) != std::string::npos ||
                    body.substr(0, slot).find("{{") != std::string::npos)
                    throw ConfigError("template: wrapper for '" + name +
                                      "' may contain only its own slot");
                flush_literal();
                t.segments_.push_back({TemplateSegment::Kind::Slot, "", name,
                                       body.substr(0, slot),
                                       body.substr(slot + slot_marker.size())});
                pos = end + end_marker.size();
            } else {
                flush_literal();
                t.segments_.push_back({TemplateSegment::Kind::Slot, "", token, "", ""});
            }
        }
        flush_literal();
        t.validate(registry);
        return t;
    }

    /// Generated default: a fixed header plus one wrapped line per registered
    /// type, so null components leave no dangling prose.
    static std::string default_source(const Registry& registry) {
        std::string src =
            "Complete the task below. Each tagged section specifies one aspect of how "
            "you should work.\n\n";
        for (const auto& t : registry.types()) {
            src += "{{#" + t.name + "}}" + wrapper_prefix_for(t.name) + "{{" + t.name +
                   "}}.\n{{/" + t.name + "}}";
        }
        return src;
    }

    static PromptTemplate builtin_default(const Registry& registry) {
        return parse(default_source(registry), registry);
    }

    const std::vector<TemplateSegment>& segments() const { return segments_; }
    const std::string& source() const { return source_; }

  private:
    static std::string wrapper_prefix_for(const std::string& name) {
        if (name == "role") return "You will play the role: ";
        if (name == "task_description") return "Your task is: ";
        if (name == "output_format") return "Your output must follow this format: ";
        if (name == "workflow") return "Follow this workflow: ";
        if (name == "examples") return "Here are examples for reference: ";
        std::string display = name;
        for (auto& c : display)
            if (c == '_') c = ' ';
        return "The " + display + " is: ";
    }

    void validate(const Registry& registry) const {
        std::set<std::string> seen;
        for (const auto& seg : segments_) {
            if (seg.kind == TemplateSegment::Kind::Slot) {
                if (!registry.contains(seg.slot_name))
                    throw ConfigError("template slot '" + seg.slot_name +
                                      "' is not a registered component type");
                if (!seen.insert(seg.slot_name).second)
                    throw ConfigError("template has more than one slot for '" + seg.slot_name +
                                      "'");
                if (contains_any_registered_tag(seg.wrapper_prefix, registry) ||
                    contains_any_registered_tag(seg.wrapper_suffix, registry))
                    throw ConfigError("template wrapper text for '" + seg.slot_name +
                                      "' contains registered markup tags");
            } else if (contains_any_registered_tag(seg.text, registry)) {
                throw ConfigError("template literal text contains registered markup tags");
            }
        }
        for (const auto& t : registry.types())
            if (!seen.count(t.name))
                throw ConfigError("template has no slot for component type '" + t.name + "'");
    }

    std::vector<TemplateSegment> segments_;
    std::string source_;
};

}  // namespace delvepo
