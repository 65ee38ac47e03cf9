#pragma once

// Task adapters and the scoring loop: wrap a rendered prompt around an
// example, run it through the task model, pull an answer out of the reply,
// and aggregate with the adapter's metric.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "delvepo/dataset.hpp"
#include "delvepo/errors.hpp"
#include "delvepo/gateway.hpp"
#include "delvepo/genome.hpp"
#include "delvepo/markup.hpp"
#include "delvepo/metrics.hpp"
#include "delvepo/rng.hpp"

namespace delvepo {

enum class TaskKind { Classification, ExtractionQA, Summarization };
enum class MetricId { Accuracy, Mcc, TokenF1, RougeAvg };

inline std::string task_kind_name(TaskKind k) {
    switch (k) {
        case TaskKind::Classification: return "classification";
        case TaskKind::ExtractionQA: return "extraction_qa";
        case TaskKind::Summarization: return "summarization";
    }
    return "classification";
}

inline TaskKind task_kind_from_name(const std::string& s) {
    if (s == "classification") return TaskKind::Classification;
    if (s == "extraction_qa") return TaskKind::ExtractionQA;
    if (s == "summarization") return TaskKind::Summarization;
    throw ConfigError("unknown task kind '" + s + "'");
}

inline std::string metric_name(MetricId m) {
    switch (m) {
        case MetricId::Accuracy: return "accuracy";
        case MetricId::Mcc: return "mcc";
        case MetricId::TokenF1: return "token_f1";
        case MetricId::RougeAvg: return "rouge_avg";
    }
    return "accuracy";
}

inline MetricId metric_from_name(const std::string& s) {
    if (s == "accuracy") return MetricId::Accuracy;
    if (s == "mcc") return MetricId::Mcc;
    if (s == "token_f1") return MetricId::TokenF1;
    if (s == "rouge_avg") return MetricId::RougeAvg;
    throw ConfigError("unknown metric '" + s + "'");
}

struct TaskAdapter {
    TaskKind kind = TaskKind::Classification;
    std::vector<std::string> labels;  // classification; labels[0] is MCC's positive class
    std::string answer_tag = "ans";
    MetricId metric = MetricId::Accuracy;

    void validate() const {
        switch (kind) {
            case TaskKind::Classification:
                if (labels.size() < 2)
                    throw ConfigError("classification needs at least two labels");
                if (metric != MetricId::Accuracy && metric != MetricId::Mcc)
                    throw ConfigError("classification pairs with accuracy or mcc");
                break;
            case TaskKind::ExtractionQA:
                if (metric != MetricId::TokenF1 && metric != MetricId::Accuracy)
                    throw ConfigError("extraction pairs with token_f1 or accuracy");
                break;
            case TaskKind::Summarization:
                if (metric != MetricId::RougeAvg)
                    throw ConfigError("summarization pairs with rouge_avg");
                break;
        }
        if (answer_tag.empty()) throw ConfigError("answer tag must be non-empty");
    }

    std::string default_cue() const {
        switch (kind) {
            case TaskKind::Classification: {
                std::string joined;
                for (const auto& l : labels) {
                    if (!joined.empty()) joined += ", ";
                    joined += l;
                }
                return "Respond with exactly one of: " + joined + ". Wrap it in <" +
                       answer_tag + "></" + answer_tag + "> tags.";
            }
            case TaskKind::ExtractionQA:
                return "Wrap the answer span in <" + answer_tag + "></" + answer_tag +
                       "> tags.";
            case TaskKind::Summarization:
                return "Write a concise summary of the input.";
        }
        return "";
    }

    double apply_metric(const std::vector<std::string>& preds,
                        const std::vector<std::string>& golds) const {
        switch (metric) {
            case MetricId::Accuracy: return metric_accuracy(preds, golds);
            case MetricId::Mcc: return metric_mcc(preds, golds, labels.at(0));
            case MetricId::TokenF1: return metric_token_f1(preds, golds);
            case MetricId::RougeAvg: return metric_rouge_avg(preds, golds);
        }
        return 0.0;
    }
};

// instruction + input + output cue. The cue defers to the prompt's own
// output_format component whenever that slot carries text.
inline std::string build_task_prompt(const std::string& rendered_prompt, const Example& ex,
                                     const TaskAdapter& adapter,
                                     bool has_output_format = false) {
    std::string out = rendered_prompt;
    out += "\n\n### Input\n";
    out += ex.input;
    out += "\n\n### Output\n";
    if (!has_output_format) {
        std::string cue = adapter.default_cue();
        if (!cue.empty()) out += cue + "\n";
    }
    return out;
}

inline bool genome_has_output_format(const ComponentGenome& genome) {
    auto it = genome.slots().find("output_format");
    return it != genome.slots().end() && !it->second.empty();
}

namespace detail {

// Rightmost label occurrence wins; overlapping matches with the same end
// prefer the longer label so "unacceptable" never reads as "acceptable".
inline std::optional<std::string> find_label(const std::string& text,
                                             const std::vector<std::string>& labels) {
    std::string haystack;
    haystack.reserve(text.size());
    for (unsigned char c : text) haystack += static_cast<char>(std::tolower(c));
    std::optional<std::string> best;
    std::size_t best_end = 0, best_len = 0;
    for (const auto& label : labels) {
        std::string needle;
        for (unsigned char c : label) needle += static_cast<char>(std::tolower(c));
        if (needle.empty()) continue;
        std::size_t pos = haystack.rfind(needle);
        if (pos == std::string::npos) continue;
        std::size_t end = pos + needle.size();
        if (end > best_end || (end == best_end && needle.size() > best_len)) {
            best = label;
            best_end = end;
            best_len = needle.size();
        }
    }
    return best;
}

}  // namespace detail

// Pulls a canonical answer out of raw model text. Empty optional means "no
// usable answer": the caller scores it as wrong, never aborts.
inline std::optional<std::string> extract_answer(const std::string& raw,
                                                 const TaskAdapter& adapter) {
    std::optional<std::string> tagged;
    try {
        if (auto block = find_tag_block(raw, adapter.answer_tag)) tagged = *block;
    } catch (const MalformedMarkup&) {
        // unclosed answer tag: fall through to the tag-free rules
    }
    switch (adapter.kind) {
        case TaskKind::Classification: {
            if (tagged)
                if (auto hit = detail::find_label(*tagged, adapter.labels)) return hit;
            return detail::find_label(raw, adapter.labels);
        }
        case TaskKind::ExtractionQA: {
            if (tagged) return *tagged;
            std::string t = trim(raw);
            if (t.empty()) return std::nullopt;
            return t;
        }
        case TaskKind::Summarization: {
            std::string t = trim(tagged ? *tagged : raw);
            if (t.empty()) return std::nullopt;
            return t;
        }
    }
    return std::nullopt;
}

// A stand-in prediction guaranteed to score as incorrect for this example.
inline std::string wrong_answer_for(const Example& ex, const TaskAdapter& adapter) {
    if (adapter.kind == TaskKind::Classification) {
        std::string gold = normalize_answer(ex.answer);
        for (const auto& label : adapter.labels)
            if (normalize_answer(label) != gold) return label;
    }
    return "";
}

// k distinct indices into [0, n), ascending so evaluation walks examples in
// dataset order no matter how they were drawn.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
    if (k > n) k = n;
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < k; ++i)
        std::swap(pool[i], pool[i + uniform_index(rng, n - i)]);
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

struct EvalOptions {
    double temperature = 0.5;
    int max_output_tokens = 512;
    std::string model_id;
};

// Scores one rendered prompt over the chosen examples. The prompt renders
// once; each example becomes a task call through the gateway.
inline double evaluate(const ComponentGenome& genome, const std::string& rendered,
                       const std::vector<Example>& examples,
                       const std::vector<std::size_t>& indices, const TaskAdapter& adapter,
                       Gateway& gateway, const EvalOptions& options = {}) {
    if (indices.empty()) throw ConfigError("evaluate: no examples selected");
    bool has_format = genome_has_output_format(genome);
    std::vector<std::string> preds, golds;
    preds.reserve(indices.size());
    golds.reserve(indices.size());
    for (std::size_t idx : indices) {
        const Example& ex = examples.at(idx);
        ChatRequest req;
        req.user = build_task_prompt(rendered, ex, adapter, has_format);
        req.temperature = options.temperature;
        req.max_output_tokens = options.max_output_tokens;
        req.model_id = options.model_id;
        std::optional<std::string> answer;
        try {
            answer = extract_answer(gateway.generate(req, LlmRole::Target).text, adapter);
        } catch (const ContentEmpty&) {
            answer = std::nullopt;  // an empty reply scores as a miss
        }
        preds.push_back(answer ? *answer : wrong_answer_for(ex, adapter));
        golds.push_back(ex.answer);
    }
    return adapter.apply_metric(preds, golds);
}

inline double evaluate(const ComponentGenome& genome, const std::string& rendered,
                       const std::vector<Example>& examples, const TaskAdapter& adapter,
                       Gateway& gateway, std::size_t subsample_size, Rng& rng,
                       const EvalOptions& options = {}) {
    if (examples.empty()) throw ConfigError("evaluate: empty example set");
    std::size_t k = subsample_size == 0 ? examples.size()
                                        : std::min(subsample_size, examples.size());
    auto indices = sample_indices(examples.size(), k, rng);
    return evaluate(genome, rendered, examples, indices, adapter, gateway, options);
}

}  // namespace delvepo
