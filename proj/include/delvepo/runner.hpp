#pragma once

// The optimization loop. A run initializes a random population from the value
// pools, then alternates epochs of guided evolution steps with elitist
// population updates. Every step is checkpointed, and a checkpoint restores
// the complete state — RNG, memories, usage ledger, mock counters, report —
// so a resumed run replays exactly like an uninterrupted one.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "delvepo/checkpoint.hpp"
#include "delvepo/errors.hpp"
#include "delvepo/evolution.hpp"
#include "delvepo/gateway.hpp"
#include "delvepo/genome.hpp"
#include "delvepo/memory.hpp"
#include "delvepo/mock_backend.hpp"
#include "delvepo/prompt_template.hpp"
#include "delvepo/report.hpp"
#include "delvepo/rng.hpp"

namespace delvepo {

struct RunConfig {
    std::size_t population_size = 10;
    int epochs = 10;
    int iterations_per_epoch = 10;
    double pair_probability = 0.5;  // chance a step evolves two parents
    PromptForm memory_form = PromptForm::Discrete;
    std::size_t component_memory_capacity = 20;
    std::size_t prompt_memory_capacity = 10;
    EvoOptions evo;
    std::uint64_t seed = 0;
    std::string checkpoint_path;  // empty disables checkpoint files

    void validate() const {
        if (population_size < 2) throw ConfigError("population size must be at least 2");
        if (epochs < 0) throw ConfigError("epochs must be non-negative");
        if (iterations_per_epoch < 0) throw ConfigError("iterations per epoch must be non-negative");
        if (pair_probability < 0.0 || pair_probability > 1.0)
            throw ConfigError("pair probability must lie in [0,1]");
    }
};

struct RunResult {
    ScoredPrompt best;
    std::vector<ScoredPrompt> population;
    RunReport report;
};

// Scoring is injected so tests and the CLI can decide what "fitness" means;
// the runner only caches it by genome content.
using EvalFn = std::function<double(const ComponentGenome&, const std::string& rendered)>;

// Called with the serialized state right after each checkpoint write.
using CheckpointHook = std::function<void(const std::string& serialized)>;

class Runner {
public:
    Runner(RunConfig config, Registry registry, PromptTemplate tmpl, ValuePools pools,
           Gateway& gateway, EvalFn eval_fn, MockBackend* mock = nullptr)
        : cfg_(std::move(config)),
          registry_(std::move(registry)),
          tmpl_(std::move(tmpl)),
          pools_(std::move(pools)),
          gateway_(gateway),
          eval_fn_(std::move(eval_fn)),
          mock_(mock),
          cmem_(cfg_.component_memory_capacity),
          pmem_(cfg_.prompt_memory_capacity, cfg_.memory_form) {
        cfg_.validate();
        if (!eval_fn_) throw ConfigError("runner needs an eval function");
    }

    void set_checkpoint_hook(CheckpointHook hook) { hook_ = std::move(hook); }

    // resume=false starts fresh; resume=true loads the checkpoint file and
    // continues from the recorded position.
    RunResult run(bool resume = false) {
        if (resume) {
            if (cfg_.checkpoint_path.empty())
                throw ConfigError("resume requested but no checkpoint path configured");
            restore_state(read_file(cfg_.checkpoint_path));
        } else {
            init_population();
        }
        while (epoch_ < cfg_.epochs) {
            if (step_ < cfg_.iterations_per_epoch) {
                iterate_once();
                ++step_;
                write_checkpoint();
            } else {
                finish_epoch();
                write_checkpoint();
            }
        }
        return finalize();
    }

    // Complete run state as deterministic JSON text. Two runs that took the
    // same decisions serialize to identical bytes.
    std::string serialize_state() const {
        nlohmann::json pop = nlohmann::json::array();
        for (const auto& sp : population_) pop.push_back(scored_to_json(sp));
        nlohmann::json evo = nlohmann::json::array();
        for (const auto& sp : evolved_) evo.push_back(scored_to_json(sp));
        nlohmann::json cache = nlohmann::json::object();
        for (const auto& [hash, score] : cache_) cache[std::to_string(hash)] = score;
        nlohmann::json j{{"version", 1},
                         {"seed", cfg_.seed},
                         {"epoch", epoch_},
                         {"step", step_},
                         {"next_id", next_id_},
                         {"rng", rng_state_to_string(rng_)},
                         {"population", pop},
                         {"evolved", evo},
                         {"component_memory", component_memory_to_json(cmem_)},
                         {"prompt_memory", prompt_memory_to_json(pmem_)},
                         {"score_cache", cache},
                         {"ledger", ledger_to_json(gateway_.ledger_snapshot())},
                         {"mock", mock_ ? mock_->state_to_json() : nlohmann::json()},
                         {"report", report_to_json(report_)},
                         {"template_source", tmpl_.source()},
                         {"registry", registry_.names()},
                         {"pools", pools_}};
        return j.dump(2);
    }

    void restore_state(const std::string& serialized) {
        nlohmann::json j = nlohmann::json::parse(serialized);
        if (j.at("version").get<int>() != 1)
            throw ConfigError("unsupported checkpoint version");
        if (j.at("seed").get<std::uint64_t>() != cfg_.seed)
            throw ConfigError("checkpoint was produced with a different seed");
        if (j.at("template_source").get<std::string>() != tmpl_.source())
            throw ConfigError("checkpoint was produced with a different template");
        if (j.at("registry").get<std::vector<std::string>>() != registry_.names())
            throw ConfigError("checkpoint was produced with a different registry");
        if (j.at("pools").get<ValuePools>() != pools_)
            throw ConfigError("checkpoint was produced with different value pools");
        epoch_ = j.at("epoch").get<int>();
        step_ = j.at("step").get<int>();
        next_id_ = j.at("next_id").get<int>();
        rng_ = rng_state_from_string(j.at("rng").get<std::string>());
        population_.clear();
        for (const auto& sj : j.at("population"))
            population_.push_back(scored_from_json(sj, registry_, tmpl_));
        evolved_.clear();
        for (const auto& sj : j.at("evolved"))
            evolved_.push_back(scored_from_json(sj, registry_, tmpl_));
        cmem_ = component_memory_from_json(j.at("component_memory"));
        pmem_ = prompt_memory_from_json(j.at("prompt_memory"), registry_, tmpl_);
        cache_.clear();
        for (const auto& [key, score] : j.at("score_cache").items())
            cache_[std::stoull(key)] = score.get<double>();
        gateway_.restore_ledger(ledger_from_json(j.at("ledger")));
        if (mock_ && !j.at("mock").is_null()) mock_->state_from_json(j.at("mock"));
        report_ = report_from_json(j.at("report"));
    }

    const std::vector<ScoredPrompt>& population() const { return population_; }
    const RunReport& report() const { return report_; }
    const ComponentMemory& component_memory() const { return cmem_; }
    const PromptMemory& prompt_memory() const { return pmem_; }

private:
    ScoredPrompt make_scored(ComponentGenome genome, Lineage lineage) {
        ScoredPrompt sp;
        sp.id = next_id_++;
        sp.rendered = render(genome, tmpl_);
        std::uint64_t hash = genome.content_hash(registry_);
        auto it = cache_.find(hash);
        if (it != cache_.end()) {
            sp.score = it->second;
        } else {
            sp.score = eval_fn_(genome, sp.rendered);
            cache_.emplace(hash, sp.score);
        }
        sp.genome = std::move(genome);
        sp.lineage = std::move(lineage);
        return sp;
    }

    void init_population() {
        rng_ = Rng(derive_seed(cfg_.seed, "run"));
        epoch_ = 0;
        step_ = 0;
        next_id_ = 0;
        population_.clear();
        evolved_.clear();
        cmem_ = ComponentMemory(cfg_.component_memory_capacity);
        pmem_ = PromptMemory(cfg_.prompt_memory_capacity, cfg_.memory_form);
        cache_.clear();
        report_ = RunReport{};
        report_.seed = cfg_.seed;
        for (std::size_t i = 0; i < cfg_.population_size; ++i) {
            ScoredPrompt sp = make_scored(random_genome(registry_, pools_, rng_),
                                          Lineage{{}, EvolutionKind::Init});
            pmem_.insert_prompt(sp);
            population_.push_back(std::move(sp));
        }
        report_.epochs.push_back(snapshot_epoch(0, population_));
        write_checkpoint();
    }

    // Records one (better, worse) pair per mutated component, judged against
    // the parent the child inherited from (the higher-scoring one for pairs).
    void record_memory(const ScoredPrompt& primary, const ScoredPrompt& child,
                       const std::vector<std::string>& mutated) {
        for (const auto& t : mutated)
            cmem_.record_pair(t, ComponentValue{t, primary.genome.value_of(t)},
                              ComponentValue{t, child.genome.value_of(t)}, primary.score,
                              child.score);
    }

    void iterate_once() {
        UsageLedger before = gateway_.ledger_snapshot();
        EvoContext ctx{registry_, tmpl_, cmem_, pmem_, gateway_,
                       rng_,      cfg_.evo, &report_.events};
        double draw = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
        bool paired = draw < cfg_.pair_probability && population_.size() >= 2;

        IterationRecord rec;
        rec.epoch = epoch_ + 1;
        rec.step = step_;
        ScoredPrompt child;
        if (paired) {
            auto picked = roulette_select(population_, 2, rng_);
            const ScoredPrompt& p1 = population_[picked[0]];
            const ScoredPrompt& p2 = population_[picked[1]];
            Direction2 direction = subtask2(p1, p2, ctx);
            child = make_scored(subsolution2(p1, p2, direction, ctx),
                                Lineage{{p1.id, p2.id}, EvolutionKind::Crossover});
            record_memory(p1.score >= p2.score ? p1 : p2, child, direction.mutate_types);
            rec.parent_ids = {p1.id, p2.id};
            rec.kind = "crossover";
            rec.mutated_types = direction.mutate_types;
        } else {
            auto picked = roulette_select(population_, 1, rng_);
            const ScoredPrompt& parent = population_[picked[0]];
            Direction1 direction = subtask1(parent, ctx);
            child = make_scored(subsolution1(parent, direction, ctx),
                                Lineage{{parent.id}, EvolutionKind::Mutation});
            record_memory(parent, child, direction.mutate_types);
            rec.parent_ids = {parent.id};
            rec.kind = "mutation";
            rec.mutated_types = direction.mutate_types;
        }
        pmem_.insert_prompt(child);
        rec.child_id = child.id;
        rec.child_score = child.score;
        evolved_.push_back(std::move(child));

        UsageLedger after = gateway_.ledger_snapshot();
        auto spent = [&](LlmRole role) {
            return (after.usage(role).prompt_tokens + after.usage(role).completion_tokens) -
                   (before.usage(role).prompt_tokens + before.usage(role).completion_tokens);
        };
        rec.optimizer_tokens = spent(LlmRole::Optimizer);
        rec.target_tokens = spent(LlmRole::Target);
        report_.iterations.push_back(std::move(rec));
    }

    void finish_epoch() {
        population_ = update_population(population_, evolved_, cfg_.population_size);
        evolved_.clear();
        report_.epochs.push_back(snapshot_epoch(epoch_ + 1, population_));
        ++epoch_;
        step_ = 0;
    }

    RunResult finalize() {
        auto best_it = std::max_element(population_.begin(), population_.end(),
                                        [](const ScoredPrompt& a, const ScoredPrompt& b) {
                                            return a.score < b.score;
                                        });
        RunResult result;
        result.best = *best_it;
        result.population = population_;
        report_.best_id = result.best.id;
        report_.best_score = result.best.score;
        report_.best_prompt = result.best.rendered;
        result.report = report_;
        return result;
    }

    void write_checkpoint() {
        if (cfg_.checkpoint_path.empty() && !hook_) return;
        std::string serialized = serialize_state();
        if (!cfg_.checkpoint_path.empty()) atomic_write_file(cfg_.checkpoint_path, serialized);
        if (hook_) hook_(serialized);
    }

    RunConfig cfg_;
    Registry registry_;
    PromptTemplate tmpl_;
    ValuePools pools_;
    Gateway& gateway_;
    EvalFn eval_fn_;
    MockBackend* mock_;
    CheckpointHook hook_;

    int epoch_ = 0;
    int step_ = 0;
    int next_id_ = 0;
    std::vector<ScoredPrompt> population_;
    std::vector<ScoredPrompt> evolved_;
    ComponentMemory cmem_;
    PromptMemory pmem_;
    Rng rng_;
    std::map<std::uint64_t, double> cache_;
    RunReport report_;
};

}  // namespace delvepo
