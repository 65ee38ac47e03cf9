#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "delvepo/component.hpp"
#include "delvepo/errors.hpp"

namespace delvepo {

inline std::string open_tag(const std::string& name) { return "<" + name + ">"; }
inline std::string close_tag(const std::string& name) { return "</" + name + ">"; }

inline std::string trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return "";
    auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

/// Content of the first <name>...</name> pair, trimmed. nullopt when no opening
/// tag exists. MalformedMarkup when an opening tag is never closed.
inline std::optional<std::string> find_tag_block(std::string_view text, const std::string& name) {
    const std::string open = open_tag(name);
    const std::string close = close_tag(name);
    auto pos = text.find(open);
    if (pos == std::string_view::npos) return std::nullopt;
    auto start = pos + open.size();
    auto end = text.find(close, start);
    if (end == std::string_view::npos)
        throw MalformedMarkup("opening tag '" + open + "' has no matching closing tag");
    return trim(text.substr(start, end - start));
}

/// Every <name>...</name> block, first to last, non-overlapping. Trimmed.
inline std::vector<std::string> find_all_tag_blocks(std::string_view text,
                                                    const std::string& name) {
    std::vector<std::string> out;
    const std::string open = open_tag(name);
    const std::string close = close_tag(name);
    std::size_t pos = 0;
    while (true) {
        auto o = text.find(open, pos);
        if (o == std::string_view::npos) break;
        auto start = o + open.size();
        auto end = text.find(close, start);
        if (end == std::string_view::npos)
            throw MalformedMarkup("opening tag '" + open + "' has no matching closing tag");
        out.push_back(trim(text.substr(start, end - start)));
        pos = end + close.size();
    }
    return out;
}

inline bool contains_tag_of(std::string_view text, const std::string& name) {
    return text.find(open_tag(name)) != std::string_view::npos ||
           text.find(close_tag(name)) != std::string_view::npos;
}

inline bool contains_any_registered_tag(std::string_view text, const Registry& registry) {
    for (const auto& t : registry.types())
        if (contains_tag_of(text, t.name)) return true;
    return false;
}

/// Removes every literal <name> / </name> occurrence for all registered types.
/// Applied to values extracted from model output so stored component values
/// never carry registered markup.
inline std::string strip_registered_tags(std::string text, const Registry& registry) {
    for (const auto& t : registry.types()) {
        for (const std::string& tag : {open_tag(t.name), close_tag(t.name)}) {
            std::size_t pos = 0;
            while ((pos = text.find(tag, pos)) != std::string::npos) text.erase(pos, tag.size());
        }
    }
    return text;
}

}  // namespace delvepo
