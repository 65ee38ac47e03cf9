#pragma once

// Selection and the evolution operators. Directions say *what* to change
// (component types, and for two parents which fixed values carry over);
// solutions produce the changed genome via the optimizer model. Every parse
// failure degrades to a documented fallback instead of aborting the run.

#include <algorithm>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "delvepo/component.hpp"
#include "delvepo/errors.hpp"
#include "delvepo/gateway.hpp"
#include "delvepo/genome.hpp"
#include "delvepo/markup.hpp"
#include "delvepo/memory.hpp"
#include "delvepo/meta_prompts.hpp"
#include "delvepo/rng.hpp"

namespace delvepo {

struct Direction1 {
    std::vector<std::string> mutate_types;  // registry order, 1..max_mutations entries
};

struct Direction2 {
    std::vector<std::string> mutate_types;            // shared set, mutated then crossed
    std::map<std::string, std::string> fixed_values;  // remaining types -> inherited text
};

// ---------------------------------------------------------------------------
// Selection
// ---------------------------------------------------------------------------

// Weights for roulette-wheel sampling. Raw scores serve directly when none
// are negative; otherwise everything shifts up by |min|. A small floor keeps
// the worst individual selectable, and identical scores mean uniform.
inline std::vector<double> selection_weights(const std::vector<double>& scores) {
    if (scores.empty()) return {};
    double mn = *std::min_element(scores.begin(), scores.end());
    double mx = *std::max_element(scores.begin(), scores.end());
    if (mn == mx) return std::vector<double>(scores.size(), 1.0);
    double shift = mn < 0.0 ? -mn : 0.0;
    double eps = 1e-6 * (mx - mn + 1.0);
    std::vector<double> weights;
    weights.reserve(scores.size());
    for (double s : scores) weights.push_back(s + shift + eps);
    return weights;
}

// k distinct population indices, each drawn proportionally to its weight.
inline std::vector<std::size_t> roulette_select(const std::vector<ScoredPrompt>& population,
                                                std::size_t k, Rng& rng) {
    if (population.empty() || k > population.size())
        throw PopulationTooSmall("cannot select " + std::to_string(k) + " of " +
                                 std::to_string(population.size()));
    std::vector<double> scores;
    scores.reserve(population.size());
    for (const auto& sp : population) scores.push_back(sp.score);
    std::vector<double> weights = selection_weights(scores);
    std::vector<std::size_t> remaining(population.size());
    std::iota(remaining.begin(), remaining.end(), 0);

    std::vector<std::size_t> chosen;
    for (std::size_t round = 0; round < k; ++round) {
        double total = 0.0;
        for (std::size_t idx : remaining) total += weights[idx];
        std::uniform_real_distribution<double> dist(0.0, total);
        double x = dist(rng);
        std::size_t pos = remaining.size() - 1;  // x == total edge lands on the last
        double acc = 0.0;
        for (std::size_t i = 0; i < remaining.size(); ++i) {
            acc += weights[remaining[i]];
            if (x < acc) {
                pos = i;
                break;
            }
        }
        chosen.push_back(remaining[pos]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pos));
    }
    return chosen;
}

// ---------------------------------------------------------------------------
// Reply parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string regex_escape(const std::string& s) {
    static const std::string special = R"(\.^$|()[]{}*+?)";
    std::string out;
    for (char c : s) {
        if (special.find(c) != std::string::npos) out += '\\';
        out += c;
    }
    return out;
}

inline bool word_at(const std::string& text, std::size_t pos, std::size_t len) {
    auto is_word = [](unsigned char c) { return std::isalnum(c) || c == '_'; };
    if (pos > 0 && is_word(static_cast<unsigned char>(text[pos - 1]))) return false;
    std::size_t end = pos + len;
    if (end < text.size() && is_word(static_cast<unsigned char>(text[end]))) return false;
    return true;
}

}  // namespace detail

// Type names mentioned in a direction reply, ranked by first appearance and
// clamped to max_mutations, then canonicalized to registry order. Tagged
// mentions ("<role>") count first; bare names only matter when no tag at all
// matched. Empty result means the reply was unusable.
inline std::vector<std::string> parse_direction_reply(const std::string& reply,
                                                      const Registry& registry,
                                                      int max_mutations) {
    std::vector<std::pair<std::size_t, std::string>> found;
    for (const auto& t : registry.types()) {
        auto pos = reply.find("<" + t.name);
        if (pos != std::string::npos) found.push_back({pos, t.name});
    }
    if (found.empty()) {
        for (const auto& t : registry.types()) {
            for (std::size_t pos = reply.find(t.name); pos != std::string::npos;
                 pos = reply.find(t.name, pos + 1)) {
                if (detail::word_at(reply, pos, t.name.size())) {
                    found.push_back({pos, t.name});
                    break;
                }
            }
        }
    }
    std::sort(found.begin(), found.end());
    if (found.size() > static_cast<std::size_t>(max_mutations))
        found.resize(static_cast<std::size_t>(max_mutations));
    std::vector<std::string> types;
    for (const auto& name : registry.names())
        for (const auto& [pos, f] : found)
            if (f == name) types.push_back(name);
    return types;
}

// "<type>: prompt 1" style line -> 1 or 2; empty when the reply never commits.
inline std::optional<int> parse_choice_reply(const std::string& reply,
                                             const std::string& type_name) {
    std::regex re("<?" + detail::regex_escape(type_name) + ">?[^\\n]*?prompt\\s*([12])",
                  std::regex::ECMAScript | std::regex::icase);
    std::smatch m;
    if (std::regex_search(reply, m, re)) return m[1].str() == "1" ? 1 : 2;
    return std::nullopt;
}

// First well-formed tag pair per requested type, content sanitized the same
// way genome parsing sanitizes it. Types without a usable pair are absent.
inline std::map<std::string, std::string> extract_tag_values(
    const std::string& reply, const std::vector<std::string>& types,
    const Registry& registry) {
    std::map<std::string, std::string> values;
    for (const auto& t : types) {
        try {
            if (auto block = find_tag_block(reply, t))
                values[t] = trim(strip_registered_tags(*block, registry));
        } catch (const MalformedMarkup&) {
            // unclosed tag: treat as absent, the caller re-asks or falls back
        }
    }
    return values;
}

// ---------------------------------------------------------------------------
// Direction partitioning
// ---------------------------------------------------------------------------

// Shared mutation set = C1 ∩ C2; everything else keeps an inherited value.
// An empty intersection still has to mutate something, so one type is drawn
// from C1 ∪ C2 (or the whole registry when even the union is empty).
inline std::pair<std::vector<std::string>, std::vector<std::string>> partition_directions(
    const std::vector<std::string>& c1, const std::vector<std::string>& c2,
    const Registry& registry, Rng& rng) {
    std::set<std::string> s1(c1.begin(), c1.end());
    std::set<std::string> s2(c2.begin(), c2.end());
    std::vector<std::string> shared;
    for (const auto& name : registry.names())
        if (s1.count(name) && s2.count(name)) shared.push_back(name);
    if (shared.empty()) {
        std::vector<std::string> pool;
        for (const auto& name : registry.names())
            if (s1.count(name) || s2.count(name)) pool.push_back(name);
        if (pool.empty()) pool = registry.names();
        shared.push_back(pool[uniform_index(rng, pool.size())]);
    }
    std::set<std::string> shared_set(shared.begin(), shared.end());
    std::vector<std::string> rest;
    for (const auto& name : registry.names())
        if (!shared_set.count(name)) rest.push_back(name);
    return {shared, rest};
}

// ---------------------------------------------------------------------------
// Evolution context and operators
// ---------------------------------------------------------------------------

struct EvoOptions {
    int max_mutations = 2;
    std::size_t component_context_pairs = 5;  // memory pairs shown per type
    std::size_t prompt_context_entries = 3;   // ledger entries shown
    bool use_memory = true;                   // off = ablation: contexts become sentinels
    bool batched_choice = true;               // one call for all inherited types vs one each
    double temperature = 0.5;
    int max_output_tokens = 1024;
    std::string model_id;
};

struct EvoContext {
    const Registry& registry;
    const PromptTemplate& tmpl;
    ComponentMemory& cmem;
    PromptMemory& pmem;
    Gateway& gateway;
    Rng& rng;
    EvoOptions options;
    std::vector<std::string>* event_log = nullptr;
};

namespace detail {

inline void log_event(EvoContext& ctx, const std::string& message) {
    if (ctx.event_log) ctx.event_log->push_back(message);
}

inline std::string component_context(EvoContext& ctx) {
    if (!ctx.options.use_memory)
        return ComponentMemory(1).context_block(ctx.registry.names(),
                                                ctx.options.component_context_pairs);
    return ctx.cmem.context_block(ctx.registry.names(), ctx.options.component_context_pairs);
}

inline std::string prompt_context(EvoContext& ctx) {
    if (!ctx.options.use_memory)
        return PromptMemory(1, ctx.pmem.form())
            .context_block(ctx.registry, ctx.options.prompt_context_entries);
    return ctx.pmem.context_block(ctx.registry, ctx.options.prompt_context_entries);
}

inline std::string ask_optimizer(EvoContext& ctx, const std::string& user) {
    ChatRequest req;
    req.system = kOptimizerSystemPrompt;
    req.user = user;
    req.temperature = ctx.options.temperature;
    req.max_output_tokens = ctx.options.max_output_tokens;
    req.model_id = ctx.options.model_id;
    return ctx.gateway.generate(req, LlmRole::Optimizer).text;
}

// Asks repeatedly until every requested type has a usable value, collecting
// partial answers across attempts. Types still missing stay absent.
inline std::map<std::string, std::string> ask_for_values(EvoContext& ctx,
                                                         const std::string& meta_prompt,
                                                         const std::vector<std::string>& types) {
    std::map<std::string, std::string> values;
    int attempts = ctx.gateway.retry_policy().max_attempts;
    for (int attempt = 0; attempt < attempts && values.size() < types.size(); ++attempt) {
        std::string reply;
        try {
            reply = ask_optimizer(ctx, meta_prompt);
        } catch (const ContentEmpty&) {
            continue;
        }
        for (auto& [type, text] : extract_tag_values(reply, types, ctx.registry))
            values.emplace(type, std::move(text));
    }
    return values;
}

}  // namespace detail

// Sub-task on one parent: which components to mutate. Unusable replies are
// re-asked; a still-unusable direction falls back to one random type.
inline Direction1 subtask1(const ScoredPrompt& parent, EvoContext& ctx) {
    std::string meta = meta::direction_single(ctx.registry, parent,
                                              detail::component_context(ctx),
                                              ctx.options.max_mutations);
    int attempts = ctx.gateway.retry_policy().max_attempts;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        std::string reply;
        try {
            reply = detail::ask_optimizer(ctx, meta);
        } catch (const ContentEmpty&) {
            continue;
        }
        auto types = parse_direction_reply(reply, ctx.registry, ctx.options.max_mutations);
        if (!types.empty()) return {types};
    }
    const auto& names = ctx.registry.names();
    std::string fallback = names[uniform_index(ctx.rng, names.size())];
    detail::log_event(ctx, "direction fallback: random type '" + fallback + "' for prompt " +
                               std::to_string(parent.id));
    return {{fallback}};
}

// Sub-task on two parents: derive each parent's direction, intersect, then
// let the optimizer pick the inherited value for every non-shared type.
inline Direction2 subtask2(const ScoredPrompt& p1, const ScoredPrompt& p2, EvoContext& ctx) {
    auto c1 = subtask1(p1, ctx).mutate_types;
    auto c2 = subtask1(p2, ctx).mutate_types;
    auto [shared, rest] = partition_directions(c1, c2, ctx.registry, ctx.rng);

    Direction2 direction;
    direction.mutate_types = shared;
    const ScoredPrompt& better = p1.score >= p2.score ? p1 : p2;

    std::vector<std::string> undecided;
    for (const auto& t : rest) {
        if (p1.genome.value_of(t) == p2.genome.value_of(t)) {
            direction.fixed_values[t] = p1.genome.value_of(t);
        } else {
            undecided.push_back(t);
        }
    }

    if (!undecided.empty()) {
        std::vector<std::vector<std::string>> batches;
        if (ctx.options.batched_choice) {
            batches.push_back(undecided);
        } else {
            for (const auto& t : undecided) batches.push_back({t});
        }
        for (const auto& batch : batches) {
            std::string meta =
                meta::direction_pair_choice(batch, p1, p2, detail::component_context(ctx));
            std::string reply;
            try {
                reply = detail::ask_optimizer(ctx, meta);
            } catch (const ContentEmpty&) {
                reply.clear();
            }
            for (const auto& t : batch) {
                auto choice = parse_choice_reply(reply, t);
                if (choice) {
                    direction.fixed_values[t] =
                        (*choice == 1 ? p1 : p2).genome.value_of(t);
                } else {
                    direction.fixed_values[t] = better.genome.value_of(t);
                    detail::log_event(ctx, "choice fallback: '" + t +
                                               "' inherited from higher-scoring parent " +
                                               std::to_string(better.id));
                }
            }
        }
    }
    return direction;
}

// Sub-solution on one parent: mutated values for the directed types, parent
// values everywhere else (and for any type whose mutation never parsed).
inline ComponentGenome subsolution1(const ScoredPrompt& parent, const Direction1& direction,
                                    EvoContext& ctx) {
    std::string meta = meta::mutate_single(ctx.registry, parent, direction.mutate_types,
                                           detail::prompt_context(ctx));
    auto values = detail::ask_for_values(ctx, meta, direction.mutate_types);
    ComponentGenome child = parent.genome;
    for (const auto& t : direction.mutate_types) {
        auto it = values.find(t);
        if (it != values.end()) {
            child = child.with_value(ctx.registry, t, it->second);
        } else {
            detail::log_event(ctx, "mutation fallback: '" + t + "' kept parent value");
        }
    }
    return child;
}

// Sub-solution on two parents: inherited values fill the non-shared types;
// each shared type gets both parents' values mutated, then crossed over.
inline ComponentGenome subsolution2(const ScoredPrompt& p1, const ScoredPrompt& p2,
                                    const Direction2& direction, EvoContext& ctx) {
    const ScoredPrompt& better = p1.score >= p2.score ? p1 : p2;
    const auto& shared = direction.mutate_types;

    auto mutate_parent = [&](const ScoredPrompt& parent, int number) {
        std::string meta = meta::mutate_for_crossover(ctx.registry, parent, number, shared,
                                                      detail::prompt_context(ctx));
        auto values = detail::ask_for_values(ctx, meta, shared);
        for (const auto& t : shared)
            if (!values.count(t)) {
                values[t] = parent.genome.value_of(t);
                detail::log_event(ctx, "crossover-mutation fallback: '" + t +
                                           "' kept parent " + std::to_string(number) +
                                           " value");
            }
        return values;
    };
    auto candidate1 = mutate_parent(p1, 1);
    auto candidate2 = mutate_parent(p2, 2);

    std::string meta = meta::crossover(shared, candidate1, candidate2,
                                       detail::prompt_context(ctx));
    auto crossed = detail::ask_for_values(ctx, meta, shared);
    for (const auto& t : shared)
        if (!crossed.count(t)) {
            crossed[t] = p1.score >= p2.score ? candidate1.at(t) : candidate2.at(t);
            detail::log_event(ctx, "crossover fallback: '" + t +
                                       "' took the higher-scoring parent's candidate");
        }

    std::map<std::string, std::string> slots;
    for (const auto& [t, v] : direction.fixed_values) slots[t] = v;
    for (const auto& t : shared) slots[t] = crossed.at(t);
    // fixed_values ∪ shared should be the whole registry; fill from the
    // better parent if a direction ever arrives short
    for (const auto& name : ctx.registry.names())
        if (!slots.count(name)) slots[name] = better.genome.value_of(name);
    return ComponentGenome::from_slots(ctx.registry, slots);
}

// Elitist Top-N over old and new: scores decide, ties go to the evolved side
// (and among evolved, to the newer of them).
inline std::vector<ScoredPrompt> update_population(const std::vector<ScoredPrompt>& current,
                                                   const std::vector<ScoredPrompt>& evolved,
                                                   std::size_t n) {
    std::vector<ScoredPrompt> merged;
    merged.reserve(current.size() + evolved.size());
    for (auto it = evolved.rbegin(); it != evolved.rend(); ++it) merged.push_back(*it);
    merged.insert(merged.end(), current.begin(), current.end());
    std::stable_sort(merged.begin(), merged.end(),
                     [](const ScoredPrompt& a, const ScoredPrompt& b) {
                         return a.score > b.score;
                     });
    if (merged.size() > n) merged.resize(n);
    return merged;
}

}  // namespace delvepo
