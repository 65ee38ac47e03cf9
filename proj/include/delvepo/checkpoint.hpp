#pragma once

// JSON (de)serialization for run state, plus atomic file writes. Prompts are
// stored as genomes + scores; rendered text is re-derived from the template on
// load so the template stays the single source of truth.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "delvepo/dataset.hpp"
#include "delvepo/errors.hpp"
#include "delvepo/gateway.hpp"
#include "delvepo/genome.hpp"
#include "delvepo/memory.hpp"
#include "delvepo/prompt_template.hpp"

namespace delvepo {

inline nlohmann::json genome_to_json(const ComponentGenome& genome) {
    return nlohmann::json(genome.slots());
}

inline ComponentGenome genome_from_json(const nlohmann::json& j, const Registry& registry) {
    return ComponentGenome::from_slots(registry,
                                       j.get<std::map<std::string, std::string>>());
}

inline nlohmann::json scored_to_json(const ScoredPrompt& sp) {
    nlohmann::json j{{"id", sp.id}, {"genome", genome_to_json(sp.genome)},
                     {"score", sp.score}};
    if (sp.lineage) {
        j["lineage"] = {{"parents", sp.lineage->parents},
                        {"kind", evolution_kind_name(sp.lineage->kind)}};
    }
    return j;
}

inline ScoredPrompt scored_from_json(const nlohmann::json& j, const Registry& registry,
                                     const PromptTemplate& tmpl) {
    ScoredPrompt sp;
    sp.id = j.at("id").get<int>();
    sp.genome = genome_from_json(j.at("genome"), registry);
    sp.rendered = render(sp.genome, tmpl);
    sp.score = j.at("score").get<double>();
    if (j.contains("lineage")) {
        Lineage lineage;
        lineage.parents = j["lineage"].at("parents").get<std::vector<int>>();
        lineage.kind = evolution_kind_from_name(j["lineage"].at("kind").get<std::string>());
        sp.lineage = lineage;
    }
    return sp;
}

inline nlohmann::json component_memory_to_json(const ComponentMemory& mem) {
    nlohmann::json entries = nlohmann::json::object();
    for (const auto& [type, pairs] : mem.entries()) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& p : pairs)
            list.push_back({{"better", p.better.text},
                            {"worse", p.worse.text},
                            {"margin", p.margin}});
        entries[type] = list;
    }
    return {{"capacity_per_type", mem.capacity_per_type()}, {"entries", entries}};
}

inline ComponentMemory component_memory_from_json(const nlohmann::json& j) {
    ComponentMemory mem(j.at("capacity_per_type").get<std::size_t>());
    for (const auto& [type, list] : j.at("entries").items()) {
        auto& pairs = mem.entries()[type];
        for (const auto& pj : list) {
            ValuePair p;
            p.better = {type, pj.at("better").get<std::string>()};
            p.worse = {type, pj.at("worse").get<std::string>()};
            p.margin = pj.at("margin").get<double>();
            pairs.push_back(std::move(p));
        }
    }
    return mem;
}

inline nlohmann::json prompt_memory_to_json(const PromptMemory& mem) {
    nlohmann::json ledger = nlohmann::json::array();
    for (const auto& sp : mem.ledger()) ledger.push_back(scored_to_json(sp));
    return {{"capacity", mem.capacity()},
            {"form", prompt_form_name(mem.form())},
            {"ledger", ledger}};
}

inline PromptMemory prompt_memory_from_json(const nlohmann::json& j, const Registry& registry,
                                            const PromptTemplate& tmpl) {
    PromptMemory mem(j.at("capacity").get<std::size_t>(),
                     prompt_form_from_name(j.at("form").get<std::string>()));
    for (const auto& sj : j.at("ledger"))
        mem.ledger().push_back(scored_from_json(sj, registry, tmpl));
    return mem;
}

inline nlohmann::json usage_to_json(const RoleUsage& u) {
    return {{"calls", u.calls},
            {"prompt_tokens", u.prompt_tokens},
            {"completion_tokens", u.completion_tokens}};
}

inline RoleUsage usage_from_json(const nlohmann::json& j) {
    RoleUsage u;
    u.calls = j.at("calls").get<long>();
    u.prompt_tokens = j.at("prompt_tokens").get<long>();
    u.completion_tokens = j.at("completion_tokens").get<long>();
    return u;
}

inline nlohmann::json ledger_to_json(const UsageLedger& ledger) {
    return {{"optimizer", usage_to_json(ledger.usage(LlmRole::Optimizer))},
            {"target", usage_to_json(ledger.usage(LlmRole::Target))}};
}

inline UsageLedger ledger_from_json(const nlohmann::json& j) {
    UsageLedger ledger;
    ledger.usage(LlmRole::Optimizer) = usage_from_json(j.at("optimizer"));
    ledger.usage(LlmRole::Target) = usage_from_json(j.at("target"));
    return ledger;
}

// Write-then-rename so a crash mid-write never corrupts the previous file.
inline void atomic_write_file(const std::string& path, const std::string& content) {
    std::filesystem::path target(path);
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out.flush()) throw Error("short write to '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, target);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path + "'");
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    return content;
}

}  // namespace delvepo
