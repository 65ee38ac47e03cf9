#pragma once

// Run bookkeeping: one record per evolution step, one population snapshot per
// epoch, plus the usage totals needed for cost reporting. Everything here is
// plain data with JSON round-trips and a plot-ready CSV emitter.

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "delvepo/checkpoint.hpp"
#include "delvepo/gateway.hpp"
#include "delvepo/memory.hpp"

namespace delvepo {

struct IterationRecord {
    int epoch = 0;
    int step = 0;
    std::vector<int> parent_ids;
    std::string kind;  // "mutation" or "crossover"
    std::vector<std::string> mutated_types;
    int child_id = -1;
    double child_score = 0.0;
    long optimizer_tokens = 0;  // tokens spent by this step, per role
    long target_tokens = 0;
};

struct PopulationEntry {
    int id = -1;
    double score = 0.0;
};

struct EpochRecord {
    int epoch = 0;  // 0 = initial population, then 1..m after each update
    double best_score = 0.0;
    double mean_score = 0.0;
    std::vector<PopulationEntry> population;
};

struct RunReport {
    std::uint64_t seed = 0;
    std::vector<IterationRecord> iterations;
    std::vector<EpochRecord> epochs;
    std::vector<std::string> events;  // fallback notes from evolution ops
    int best_id = -1;
    double best_score = 0.0;
    std::string best_prompt;

    double final_best() const {
        return epochs.empty() ? 0.0 : epochs.back().best_score;
    }
};

inline EpochRecord snapshot_epoch(int epoch, const std::vector<ScoredPrompt>& population) {
    EpochRecord rec;
    rec.epoch = epoch;
    double sum = 0.0, best = 0.0;
    for (const auto& sp : population) {
        rec.population.push_back({sp.id, sp.score});
        sum += sp.score;
        best = rec.population.size() == 1 ? sp.score : std::max(best, sp.score);
    }
    rec.best_score = best;
    rec.mean_score = population.empty() ? 0.0 : sum / double(population.size());
    return rec;
}

inline nlohmann::json report_to_json(const RunReport& r) {
    nlohmann::json iters = nlohmann::json::array();
    for (const auto& it : r.iterations)
        iters.push_back({{"epoch", it.epoch},
                         {"step", it.step},
                         {"parents", it.parent_ids},
                         {"kind", it.kind},
                         {"mutated", it.mutated_types},
                         {"child_id", it.child_id},
                         {"child_score", it.child_score},
                         {"optimizer_tokens", it.optimizer_tokens},
                         {"target_tokens", it.target_tokens}});
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& ep : r.epochs) {
        nlohmann::json pop = nlohmann::json::array();
        for (const auto& e : ep.population) pop.push_back({{"id", e.id}, {"score", e.score}});
        epochs.push_back({{"epoch", ep.epoch},
                          {"best_score", ep.best_score},
                          {"mean_score", ep.mean_score},
                          {"population", pop}});
    }
    return {{"seed", r.seed},        {"iterations", iters},
            {"epochs", epochs},      {"events", r.events},
            {"best_id", r.best_id},  {"best_score", r.best_score},
            {"best_prompt", r.best_prompt}};
}

inline RunReport report_from_json(const nlohmann::json& j) {
    RunReport r;
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& ij : j.at("iterations")) {
        IterationRecord it;
        it.epoch = ij.at("epoch").get<int>();
        it.step = ij.at("step").get<int>();
        it.parent_ids = ij.at("parents").get<std::vector<int>>();
        it.kind = ij.at("kind").get<std::string>();
        it.mutated_types = ij.at("mutated").get<std::vector<std::string>>();
        it.child_id = ij.at("child_id").get<int>();
        it.child_score = ij.at("child_score").get<double>();
        it.optimizer_tokens = ij.at("optimizer_tokens").get<long>();
        it.target_tokens = ij.at("target_tokens").get<long>();
        r.iterations.push_back(std::move(it));
    }
    for (const auto& ej : j.at("epochs")) {
        EpochRecord ep;
        ep.epoch = ej.at("epoch").get<int>();
        ep.best_score = ej.at("best_score").get<double>();
        ep.mean_score = ej.at("mean_score").get<double>();
        for (const auto& pj : ej.at("population"))
            ep.population.push_back({pj.at("id").get<int>(), pj.at("score").get<double>()});
        r.epochs.push_back(std::move(ep));
    }
    r.events = j.at("events").get<std::vector<std::string>>();
    r.best_id = j.at("best_id").get<int>();
    r.best_score = j.at("best_score").get<double>();
    r.best_prompt = j.at("best_prompt").get<std::string>();
    return r;
}

// One row per epoch snapshot; feeds straight into any plotting tool.
inline std::string score_curve_csv(const RunReport& r) {
    std::ostringstream os;
    os << "epoch,best_score,mean_score\n";
    for (const auto& ep : r.epochs)
        os << ep.epoch << "," << format_score(ep.best_score) << ","
           << format_score(ep.mean_score) << "\n";
    return os.str();
}

inline std::string usage_summary(const UsageLedger& ledger, const PriceTable& prices) {
    std::ostringstream os;
    for (LlmRole role : {LlmRole::Optimizer, LlmRole::Target}) {
        const auto& u = ledger.usage(role);
        os << (role == LlmRole::Optimizer ? "optimizer" : "target") << ": calls=" << u.calls
           << " prompt_tokens=" << u.prompt_tokens
           << " completion_tokens=" << u.completion_tokens << "\n";
    }
    double cost = ledger.cost(LlmRole::Optimizer, prices) + ledger.cost(LlmRole::Target, prices);
    os << "total_calls=" << ledger.total_calls() << " total_tokens=" << ledger.total_tokens()
       << " cost=" << format_score(cost) << "\n";
    return os.str();
}

}  // namespace delvepo
