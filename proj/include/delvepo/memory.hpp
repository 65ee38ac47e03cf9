#pragma once

// Working memories that steer evolution: ComponentMemory keeps (better, worse)
// value pairs observed per component type, PromptMemory keeps a score-sorted
// ledger of whole prompts. Both serialize to deterministic text blocks that get
// spliced into meta-prompts.

#include <cmath>
#include <deque>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "delvepo/component.hpp"
#include "delvepo/errors.hpp"
#include "delvepo/genome.hpp"

namespace delvepo {

struct ValuePair {
    ComponentValue better;
    ComponentValue worse;
    double margin = 0.0;  // score gap, always >= 0
};

inline std::string format_score(double s) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(6) << s;
    return os.str();
}

class ComponentMemory {
public:
    explicit ComponentMemory(std::size_t capacity_per_type = 20)
        : capacity_(capacity_per_type) {
        if (capacity_ == 0) throw ConfigError("component memory capacity must be positive");
    }

    // Stores the higher-scoring value as "better" at the head of the type's
    // list. Equal scores count the post-evolution value as the better one.
    void record_pair(const std::string& ctype, const ComponentValue& before,
                     const ComponentValue& after, double score_before, double score_after) {
        if (before.type_name != ctype || after.type_name != ctype)
            throw TypeMismatch("record_pair: value type does not match '" + ctype + "'");
        if (!std::isfinite(score_before) || !std::isfinite(score_after))
            throw Error("record_pair: non-finite score");
        ValuePair pair;
        if (score_after >= score_before) {
            pair = {after, before, score_after - score_before};
        } else {
            pair = {before, after, score_before - score_after};
        }
        auto& list = entries_[ctype];
        list.push_front(pair);
        while (list.size() > capacity_) list.pop_back();
    }

    const std::deque<ValuePair>& pairs_for(const std::string& ctype) const {
        static const std::deque<ValuePair> none;
        auto it = entries_.find(ctype);
        return it == entries_.end() ? none : it->second;
    }

    bool empty_for(const std::vector<std::string>& types) const {
        for (const auto& t : types)
            if (!pairs_for(t).empty()) return false;
        return true;
    }

    std::size_t capacity_per_type() const { return capacity_; }
    const std::map<std::string, std::deque<ValuePair>>& entries() const { return entries_; }
    std::map<std::string, std::deque<ValuePair>>& entries() { return entries_; }

    // Text block fed to meta-prompts. Pure function of state: same memory,
    // same bytes. Types appear in the order given by the caller.
    std::string context_block(const std::vector<std::string>& types, std::size_t k) const {
        std::ostringstream os;
        os << "### Component evolution records (most recent first)\n";
        if (empty_for(types)) {
            os << "No component evolution has been recorded yet.\n";
            return os.str();
        }
        for (const auto& t : types) {
            os << "[" << t << "]\n";
            const auto& list = pairs_for(t);
            if (list.empty()) {
                os << "  (no recorded pairs)\n";
                continue;
            }
            std::size_t shown = 0;
            for (const auto& p : list) {
                if (shown++ >= k) break;
                os << "  better: " << p.better.text << " | worse: " << p.worse.text
                   << " | delta=" << format_score(p.margin) << "\n";
            }
        }
        return os.str();
    }

private:
    std::map<std::string, std::deque<ValuePair>> entries_;
    std::size_t capacity_;
};

enum class PromptForm { Discrete, Continuous };

inline std::string prompt_form_name(PromptForm f) {
    return f == PromptForm::Discrete ? "discrete" : "continuous";
}

inline PromptForm prompt_form_from_name(const std::string& s) {
    if (s == "discrete") return PromptForm::Discrete;
    if (s == "continuous") return PromptForm::Continuous;
    throw ConfigError("unknown prompt memory form '" + s + "'");
}

class PromptMemory {
public:
    explicit PromptMemory(std::size_t capacity = 10, PromptForm form = PromptForm::Discrete)
        : capacity_(capacity), form_(form) {
        if (capacity_ == 0) throw ConfigError("prompt memory capacity must be positive");
    }

    // Keeps the ledger sorted by score descending; an equal score lands in
    // front of older entries with the same score. Overflow drops the tail.
    void insert_prompt(const ScoredPrompt& sp) {
        if (!std::isfinite(sp.score)) throw Error("insert_prompt: non-finite score");
        auto it = ledger_.begin();
        while (it != ledger_.end() && it->score > sp.score) ++it;
        ledger_.insert(it, sp);
        while (ledger_.size() > capacity_) ledger_.pop_back();
    }

    const std::vector<ScoredPrompt>& ledger() const { return ledger_; }
    std::vector<ScoredPrompt>& ledger() { return ledger_; }
    std::size_t capacity() const { return capacity_; }
    PromptForm form() const { return form_; }
    void set_form(PromptForm f) { form_ = f; }

    const ScoredPrompt& best() const {
        if (ledger_.empty()) throw Error("prompt memory is empty");
        return ledger_.front();
    }

    std::string context_block(const Registry& registry, PromptForm form, std::size_t k) const {
        std::ostringstream os;
        os << "### Top prompts (score descending)\n";
        if (ledger_.empty()) {
            os << "No prompts have been recorded yet.\n";
            return os.str();
        }
        std::size_t n = std::min(k, ledger_.size());
        for (std::size_t i = 0; i < n; ++i) {
            const auto& sp = ledger_[i];
            os << (i + 1) << ". score=" << format_score(sp.score) << "\n";
            if (form == PromptForm::Discrete) {
                for (const auto& t : registry.types())
                    os << "   " << open_tag(t.name) << sp.genome.value_of(t.name)
                       << close_tag(t.name) << "\n";
            } else {
                os << "--- prompt start ---\n" << sp.rendered << "\n--- prompt end ---\n";
            }
        }
        return os.str();
    }

    std::string context_block(const Registry& registry, std::size_t k) const {
        return context_block(registry, form_, k);
    }

private:
    std::vector<ScoredPrompt> ledger_;
    std::size_t capacity_;
    PromptForm form_;
};

}  // namespace delvepo
