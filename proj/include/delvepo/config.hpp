#pragma once

// One JSON document drives a whole run: task, registry, template, llm wiring,
// evolution knobs, eval protocol, data paths, output locations. Users supply a
// partial file that merges over the defaults; `--set dot.path=value` overrides
// come last and must name keys that already exist, so typos fail loudly.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "delvepo/checkpoint.hpp"
#include "delvepo/component.hpp"
#include "delvepo/errors.hpp"
#include "delvepo/eval.hpp"
#include "delvepo/evolution.hpp"
#include "delvepo/gateway.hpp"
#include "delvepo/http_backend.hpp"
#include "delvepo/prompt_template.hpp"
#include "delvepo/runner.hpp"

namespace delvepo {

inline nlohmann::json default_config() {
    nlohmann::json registry = nlohmann::json::array();
    Registry defaults = Registry::default_registry();
    for (const auto& t : defaults.types())
        registry.push_back({{"name", t.name},
                            {"category", category_name(t.category)},
                            {"description", t.description}});
    nlohmann::json cfg = nlohmann::json::object();
    cfg["task"] = {{"description", "Classify the sentence."},
                   {"kind", "classification"},
                   {"labels", {"positive", "negative"}},
                   {"metric", "accuracy"},
                   {"answer_tag", "ans"}};
    cfg["registry"] = registry;
    cfg["template"] = {{"source", ""}};  // empty = built-in template
    cfg["llm"] = {
        {"base_url", "http://127.0.0.1:8080/v1"},
        {"model", "local-model"},
        {"api_key_env", "DELVEPO_API_KEY"},
        {"timeout_s", 120},
        {"optimizer", {{"base_url", ""}, {"model", ""}}},  // empty = inherit shared
        {"target", {{"base_url", ""}, {"model", ""}}},
        {"temperature", 0.5},
        {"meta_max_tokens", 1024},
        {"task_max_tokens", 512},
        {"retry", {{"max_attempts", 3}, {"initial_backoff_ms", 1000}, {"backoff_multiplier", 2.0}}},
        {"max_in_flight", 4},
        {"strip_reasoning", true},
        {"prices", {{"prompt_per_million", 0.0}, {"completion_per_million", 0.0}}},
        {"mock", {{"fixture", ""}}}};
    cfg["evolution"] = {{"population_size", 10},
                        {"epochs", 10},
                        {"iterations_per_epoch", 10},
                        {"pair_probability", 0.5},
                        {"max_mutations", 2},
                        {"memory_form", "discrete"},
                        {"component_memory_capacity", 20},
                        {"prompt_memory_capacity", 10},
                        {"component_context_pairs", 5},
                        {"prompt_context_entries", 3},
                        {"use_memory", true},
                        {"batched_choice", true}};
    cfg["eval"] = {{"dev_subsample", 50}, {"test_size", 100}};
    cfg["data"] = {{"path", ""}, {"dev_path", ""}, {"test_path", ""}, {"split_seed", 17}};
    cfg["init"] = {{"values_per_type", 10}};
    cfg["output"] = {{"dir", "runs"}};
    cfg["seeds"] = {5, 10, 15};
    return cfg;
}

namespace detail {

// Object keys recurse and must already exist; arrays and scalars replace
// wholesale. Unknown keys are the classic silent-typo failure, so they throw.
inline void merge_config(nlohmann::json& base, const nlohmann::json& overlay,
                         const std::string& where) {
    if (!overlay.is_object()) throw ConfigError("config section '" + where + "' must be an object");
    for (const auto& [key, value] : overlay.items()) {
        std::string path = where.empty() ? key : where + "." + key;
        if (!base.contains(key)) throw ConfigError("unknown config key '" + path + "'");
        if (base[key].is_object() && value.is_object())
            merge_config(base[key], value, path);
        else if (base[key].is_object() != value.is_object())
            throw ConfigError("config key '" + path + "' has the wrong shape");
        else
            base[key] = value;
    }
}

}  // namespace detail

// "evolution.epochs=3" — dot path into the tree, value parsed as JSON when it
// parses, kept as a plain string otherwise. Array elements address by index.
inline void apply_override(nlohmann::json& config, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like key.path=value, got '" + assignment + "'");
    std::string path = assignment.substr(0, eq);
    std::string raw = assignment.substr(eq + 1);

    nlohmann::json* node = &config;
    std::size_t start = 0;
    while (start <= path.size()) {
        auto dot = path.find('.', start);
        std::string part = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (part.empty()) throw ConfigError("override path '" + path + "' has an empty segment");
        if (node->is_array()) {
            std::size_t index = 0;
            try {
                index = std::stoul(part);
            } catch (const std::exception&) {
                throw ConfigError("override path '" + path + "': '" + part +
                                  "' is not an array index");
            }
            if (index >= node->size())
                throw ConfigError("override path '" + path + "': index " + part +
                                  " is out of range");
            node = &(*node)[index];
        } else if (node->is_object()) {
            if (!node->contains(part))
                throw ConfigError("override path '" + path + "': no such key '" + part + "'");
            node = &(*node)[part];
        } else {
            throw ConfigError("override path '" + path + "' descends into a scalar");
        }
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (node->is_object())
        throw ConfigError("override '" + path + "' targets a section, not a value");
    nlohmann::json parsed = nlohmann::json::parse(raw, nullptr, /*allow_exceptions=*/false);
    *node = parsed.is_discarded() ? nlohmann::json(raw) : parsed;
}

// Defaults <- optional file <- overrides, in that order.
inline nlohmann::json effective_config(const std::string& config_path,
                                       const std::vector<std::string>& overrides) {
    nlohmann::json config = default_config();
    if (!config_path.empty()) {
        nlohmann::json from_file;
        try {
            from_file = nlohmann::json::parse(read_file(config_path));
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("config file '" + config_path + "': " + e.what());
        }
        detail::merge_config(config, from_file, "");
    }
    for (const auto& assignment : overrides) apply_override(config, assignment);
    return config;
}

// --- typed views over the effective config ---------------------------------

inline Registry registry_from_config(const nlohmann::json& config) {
    std::vector<ComponentType> types;
    for (const auto& tj : config.at("registry")) {
        ComponentType t;
        t.name = tj.at("name").get<std::string>();
        t.category = category_from_name(tj.at("category").get<std::string>());
        t.description = tj.at("description").get<std::string>();
        types.push_back(std::move(t));
    }
    return Registry(std::move(types));
}

inline PromptTemplate template_from_config(const nlohmann::json& config,
                                           const Registry& registry) {
    std::string source = config.at("template").at("source").get<std::string>();
    if (source.empty()) return PromptTemplate::builtin_default(registry);
    return PromptTemplate::parse(source, registry);
}

inline TaskAdapter adapter_from_config(const nlohmann::json& config) {
    const auto& task = config.at("task");
    TaskAdapter adapter;
    adapter.kind = task_kind_from_name(task.at("kind").get<std::string>());
    adapter.labels = task.at("labels").get<std::vector<std::string>>();
    adapter.metric = metric_from_name(task.at("metric").get<std::string>());
    adapter.answer_tag = task.at("answer_tag").get<std::string>();
    adapter.validate();
    return adapter;
}

inline RetryPolicy retry_from_config(const nlohmann::json& config) {
    const auto& retry = config.at("llm").at("retry");
    RetryPolicy policy;
    policy.max_attempts = retry.at("max_attempts").get<int>();
    policy.initial_backoff_ms = retry.at("initial_backoff_ms").get<int>();
    policy.backoff_multiplier = retry.at("backoff_multiplier").get<double>();
    return policy;
}

inline PriceTable prices_from_config(const nlohmann::json& config) {
    const auto& prices = config.at("llm").at("prices");
    return {prices.at("prompt_per_million").get<double>(),
            prices.at("completion_per_million").get<double>()};
}

// Role endpoint: role-specific fields win, empty fields inherit the shared ones.
inline HttpEndpoint endpoint_from_config(const nlohmann::json& config, LlmRole role) {
    const auto& llm = config.at("llm");
    const auto& specific = llm.at(role == LlmRole::Optimizer ? "optimizer" : "target");
    HttpEndpoint ep;
    ep.base_url = specific.at("base_url").get<std::string>();
    if (ep.base_url.empty()) ep.base_url = llm.at("base_url").get<std::string>();
    ep.model_id = specific.at("model").get<std::string>();
    if (ep.model_id.empty()) ep.model_id = llm.at("model").get<std::string>();
    ep.api_key_env = llm.at("api_key_env").get<std::string>();
    ep.timeout_s = llm.at("timeout_s").get<int>();
    return ep;
}

inline EvoOptions evo_options_from_config(const nlohmann::json& config) {
    const auto& evolution = config.at("evolution");
    const auto& llm = config.at("llm");
    EvoOptions opt;
    opt.max_mutations = evolution.at("max_mutations").get<int>();
    opt.component_context_pairs = evolution.at("component_context_pairs").get<std::size_t>();
    opt.prompt_context_entries = evolution.at("prompt_context_entries").get<std::size_t>();
    opt.use_memory = evolution.at("use_memory").get<bool>();
    opt.batched_choice = evolution.at("batched_choice").get<bool>();
    opt.temperature = llm.at("temperature").get<double>();
    opt.max_output_tokens = llm.at("meta_max_tokens").get<int>();
    return opt;
}

inline EvalOptions eval_options_from_config(const nlohmann::json& config) {
    const auto& llm = config.at("llm");
    EvalOptions opt;
    opt.temperature = llm.at("temperature").get<double>();
    opt.max_output_tokens = llm.at("task_max_tokens").get<int>();
    return opt;
}

inline RunConfig run_config_from_config(const nlohmann::json& config, std::uint64_t seed,
                                        const std::string& checkpoint_path) {
    const auto& evolution = config.at("evolution");
    RunConfig rc;
    rc.population_size = evolution.at("population_size").get<std::size_t>();
    rc.epochs = evolution.at("epochs").get<int>();
    rc.iterations_per_epoch = evolution.at("iterations_per_epoch").get<int>();
    rc.pair_probability = evolution.at("pair_probability").get<double>();
    rc.memory_form = prompt_form_from_name(evolution.at("memory_form").get<std::string>());
    rc.component_memory_capacity = evolution.at("component_memory_capacity").get<std::size_t>();
    rc.prompt_memory_capacity = evolution.at("prompt_memory_capacity").get<std::size_t>();
    rc.evo = evo_options_from_config(config);
    rc.seed = seed;
    rc.checkpoint_path = checkpoint_path;
    rc.validate();
    return rc;
}

}  // namespace delvepo
