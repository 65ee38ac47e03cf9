#pragma once

// The instruction texts sent to the optimizer model. Each builder returns the
// full user message for one operation; the leading "## Task:" marker line
// doubles as a routing key for scripted mock backends. Bump the version when
// any wording changes — run reports record it so results stay attributable.

#include <string>
#include <vector>

#include "delvepo/component.hpp"
#include "delvepo/genome.hpp"
#include "delvepo/memory.hpp"

namespace delvepo {

inline constexpr const char* kMetaPromptVersion = "1";

inline constexpr const char* kOptimizerSystemPrompt =
    "You are an expert prompt engineer. You evolve task prompts by mutating and "
    "recombining their components. Follow the reply format exactly.";

namespace meta {

inline std::string component_lines(const Registry& registry, const ComponentGenome& genome) {
    std::string out;
    for (const auto& t : registry.types())
        out += open_tag(t.name) + genome.value_of(t.name) + close_tag(t.name) + "\n";
    return out;
}

inline std::string type_list(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& n : names) {
        if (!out.empty()) out += ", ";
        out += n;
    }
    return out;
}

// Sub-task on one parent: pick which components to mutate next.
inline std::string direction_single(const Registry& registry, const ScoredPrompt& parent,
                                    const std::string& component_context, int max_mutations) {
    std::string out = "## Task: choose mutation directions\n\n";
    out += component_context;
    out += "\nThe current prompt scored " + format_score(parent.score) +
           " and has these components:\n";
    out += component_lines(registry, parent.genome);
    out += "\nUsing the evolution records as guidance, decide which components are most "
           "promising to mutate next.\n";
    out += "Reply with a single line of the form\n";
    out += "mutate: <" + registry.types().front().name + ">, <" +
           registry.types().back().name + ">\n";
    out += "naming between 1 and " + std::to_string(max_mutations) +
           " component types out of: " + type_list(registry.names()) + ".\n";
    return out;
}

// Sub-task on two parents: for each component outside the shared mutation
// set, pick which parent's value the child keeps.
inline std::string direction_pair_choice(const std::vector<std::string>& types,
                                         const ScoredPrompt& p1, const ScoredPrompt& p2,
                                         const std::string& component_context) {
    std::string out = "## Task: choose parent values\n\n";
    out += component_context;
    out += "\nTwo parent prompts are being combined. Prompt 1 scored " +
           format_score(p1.score) + ", prompt 2 scored " + format_score(p2.score) + ".\n";
    out += "For each component below, decide which parent's value the child should keep.\n\n";
    for (const auto& t : types) {
        out += "Component " + t + ":\n";
        out += "  prompt 1: " + p1.genome.value_of(t) + "\n";
        out += "  prompt 2: " + p2.genome.value_of(t) + "\n";
    }
    out += "\nReply with one line per component, each of the form\n";
    out += types.front() + ": prompt 1\n";
    out += "(or \"prompt 2\").\n";
    return out;
}

inline std::string mutate_instructions(const std::vector<std::string>& types) {
    std::string out;
    out += "Mutate exactly these components: " + type_list(types) + ".\n";
    out += "Reply with the new value of each one wrapped in its markup tag, e.g. <" +
           types.front() + ">new text</" + types.front() + ">.\n";
    out += "An empty tag drops the component from the prompt. Output nothing else.\n";
    return out;
}

// Sub-solution on one parent: produce mutated values for the chosen types.
inline std::string mutate_single(const Registry& registry, const ScoredPrompt& parent,
                                 const std::vector<std::string>& mutate_types,
                                 const std::string& prompt_context) {
    std::string out = "## Task: mutate components\n\n";
    out += prompt_context;
    out += "\nThe prompt being evolved scored " + format_score(parent.score) +
           " and currently reads:\n";
    out += component_lines(registry, parent.genome);
    out += "\nDraw on the top prompts above for what works, then improve on them.\n";
    out += mutate_instructions(mutate_types);
    return out;
}

// Sub-solution on two parents, stage one: mutate one parent's shared
// components to create crossover candidates.
inline std::string mutate_for_crossover(const Registry& registry, const ScoredPrompt& parent,
                                        int parent_number,
                                        const std::vector<std::string>& mutate_types,
                                        const std::string& prompt_context) {
    std::string out = "## Task: mutate components before crossover\n\n";
    out += prompt_context;
    out += "\nParent " + std::to_string(parent_number) + " scored " +
           format_score(parent.score) + " and currently reads:\n";
    out += component_lines(registry, parent.genome);
    out += "\nIts mutated components become crossover candidates for the child prompt.\n";
    out += mutate_instructions(mutate_types);
    return out;
}

// Sub-solution on two parents, stage two: pick or blend one value per shared
// component from the two mutated candidates.
inline std::string crossover(const std::vector<std::string>& types,
                             const std::map<std::string, std::string>& candidate1,
                             const std::map<std::string, std::string>& candidate2,
                             const std::string& prompt_context) {
    std::string out = "## Task: crossover component values\n\n";
    out += prompt_context;
    out += "\nTwo mutated candidate values exist for each component below. Choose the "
           "stronger one, or blend them if a combination would beat both.\n\n";
    for (const auto& t : types) {
        out += "Component " + t + ":\n";
        out += "  candidate 1: " + candidate1.at(t) + "\n";
        out += "  candidate 2: " + candidate2.at(t) + "\n";
    }
    out += "\nReply with the final value of each component wrapped in its markup tag, "
           "e.g. <" + types.front() + ">final text</" + types.front() + ">.\n";
    out += "Output nothing else.\n";
    return out;
}

// Initialization: candidate values for one component type.
inline std::string generate_pool(const ComponentType& type, const std::string& task_description,
                                 int count) {
    std::string out = "## Task: generate component values\n\n";
    out += "Generate " + std::to_string(count) + " diverse candidate values for the prompt "
           "component \"" + type.name + "\" (" + category_name(type.category) + ": " +
           type.description + ").\n";
    out += "The prompts are for this task: " + task_description + "\n";
    out += "\nReply with one candidate per line, each wrapped in " + open_tag(type.name) +
           close_tag(type.name) + " tags. If omitting this component entirely is a "
           "reasonable option, make one candidate an empty tag.\n";
    return out;
}

}  // namespace meta
}  // namespace delvepo
