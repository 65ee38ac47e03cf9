#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "delvepo/component.hpp"
#include "delvepo/errors.hpp"
#include "delvepo/markup.hpp"
#include "delvepo/prompt_template.hpp"
#include "delvepo/rng.hpp"

namespace delvepo {

/// The discrete form of a prompt: one value per registered component type.
/// Immutable after construction; mutation produces a new genome.
class ComponentGenome {
  public:
    ComponentGenome() = default;

    static ComponentGenome empty_for(const Registry& registry) {
        ComponentGenome g;
        for (const auto& t : registry.types()) g.slots_[t.name] = "";
        return g;
    }

    static ComponentGenome from_slots(const Registry& registry,
                                      std::map<std::string, std::string> slots) {
        for (const auto& [name, text] : slots) {
            if (!registry.contains(name))
                throw TypeMismatch("genome slot '" + name + "' is not a registered type");
            if (contains_any_registered_tag(text, registry))
                throw TypeMismatch("value for '" + name + "' contains registered markup tags");
        }
        for (const auto& t : registry.types())
            if (!slots.count(t.name)) throw MissingSlotValue(t.name);
        ComponentGenome g;
        g.slots_ = std::move(slots);
        return g;
    }

    const std::string& value_of(const std::string& type_name) const {
        auto it = slots_.find(type_name);
        if (it == slots_.end()) throw MissingSlotValue(type_name);
        return it->second;
    }

    ComponentGenome with_value(const Registry& registry, const std::string& type_name,
                               std::string text) const {
        if (!registry.contains(type_name))
            throw TypeMismatch("'" + type_name + "' is not a registered type");
        if (contains_any_registered_tag(text, registry))
            throw TypeMismatch("value for '" + type_name + "' contains registered markup tags");
        ComponentGenome g = *this;
        g.slots_[type_name] = std::move(text);
        return g;
    }

    const std::map<std::string, std::string>& slots() const { return slots_; }

    std::uint64_t content_hash(const Registry& registry) const {
        std::uint64_t h = 14695981039346656037ULL;
        for (const auto& t : registry.types()) {
            h = fnv1a64(t.name, h);
            h = fnv1a64("\x1f", h);
            auto it = slots_.find(t.name);
            h = fnv1a64(it == slots_.end() ? "" : it->second, h);
            h = fnv1a64("\x1e", h);
        }
        return h;
    }

    bool operator==(const ComponentGenome&) const = default;

  private:
    std::map<std::string, std::string> slots_;
};

enum class EvolutionKind { Init, Mutation, Crossover };

inline const char* evolution_kind_name(EvolutionKind k) {
    switch (k) {
        case EvolutionKind::Init: return "init";
        case EvolutionKind::Mutation: return "mutation";
        case EvolutionKind::Crossover: return "crossover";
    }
    return "?";
}

inline EvolutionKind evolution_kind_from_name(const std::string& s) {
    if (s == "init") return EvolutionKind::Init;
    if (s == "mutation") return EvolutionKind::Mutation;
    if (s == "crossover") return EvolutionKind::Crossover;
    throw ConfigError("unknown evolution kind '" + s + "'");
}

struct Lineage {
    std::vector<int> parents;
    EvolutionKind kind = EvolutionKind::Init;

    bool operator==(const Lineage&) const = default;
};

/// A prompt with its rendered text and dev-set score.
struct ScoredPrompt {
    int id = -1;
    ComponentGenome genome;
    std::string rendered;
    double score = 0.0;
    std::optional<Lineage> lineage;

    bool operator==(const ScoredPrompt&) const = default;
};

/// Injects a genome into a template. Non-empty values render as
/// <name>text</name> inside their wrapper; empty values omit slot and wrapper.
inline std::string render(const ComponentGenome& genome, const PromptTemplate& tmpl) {
    std::string out;
    for (const auto& seg : tmpl.segments()) {
        if (seg.kind == TemplateSegment::Kind::Literal) {
            out += seg.text;
            continue;
        }
        const std::string& value = genome.value_of(seg.slot_name);
        if (value.empty()) continue;
        out += seg.wrapper_prefix;
        out += open_tag(seg.slot_name);
        out += value;
        out += close_tag(seg.slot_name);
        out += seg.wrapper_suffix;
    }
    return out;
}

/// Inverse of render for reading model output: takes the first
/// <name>...</name> pair per registered type, trims it, and strips any stray
/// registered tags from the content. Types with no pair map to the empty
/// value. Throws MalformedMarkup when an opening tag is never closed.
inline ComponentGenome parse_genome(const std::string& text, const Registry& registry) {
    std::map<std::string, std::string> slots;
    for (const auto& t : registry.types()) {
        auto block = find_tag_block(text, t.name);
        slots[t.name] = block ? trim(strip_registered_tags(*block, registry)) : "";
    }
    return ComponentGenome::from_slots(registry, std::move(slots));
}

/// One value uniformly sampled per type, in registry order.
inline ComponentGenome random_genome(const Registry& registry, const ValuePools& pools,
                                     Rng& rng) {
    std::map<std::string, std::string> slots;
    for (const auto& t : registry.types()) {
        auto it = pools.find(t.name);
        if (it == pools.end() || it->second.empty()) throw EmptyPool(t.name);
        slots[t.name] = it->second[uniform_index(rng, it->second.size())];
    }
    return ComponentGenome::from_slots(registry, std::move(slots));
}

}  // namespace delvepo
