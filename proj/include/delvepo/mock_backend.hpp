#pragma once

// Scripted stand-in for a chat model. Rules pair a regex with a response
// policy; the first match wins. Every response is a pure function of
// (request text, seed, per-rule call index), so runs replay bit-identically
// and per-rule counters can be checkpointed and restored mid-run.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "delvepo/errors.hpp"
#include "delvepo/gateway.hpp"
#include "delvepo/rng.hpp"

namespace delvepo {

struct MockRule {
    enum class Kind { Fixed, Echo, Cycle, Distribution, FailThen };

    std::string pattern;                 // regex searched over "system\nuser"
    Kind kind = Kind::Fixed;
    std::vector<std::string> responses;  // Fixed: 1, Cycle/Distribution: >= 1
    std::vector<double> weights;         // Distribution only, same length as responses
    int fail_count = 0;                  // FailThen: throw this many times, then respond

    static std::string kind_name(Kind k) {
        switch (k) {
            case Kind::Fixed: return "fixed";
            case Kind::Echo: return "echo";
            case Kind::Cycle: return "cycle";
            case Kind::Distribution: return "distribution";
            case Kind::FailThen: return "fail_then";
        }
        return "fixed";
    }

    static Kind kind_from_name(const std::string& s) {
        if (s == "fixed") return Kind::Fixed;
        if (s == "echo") return Kind::Echo;
        if (s == "cycle") return Kind::Cycle;
        if (s == "distribution") return Kind::Distribution;
        if (s == "fail_then") return Kind::FailThen;
        throw ConfigError("unknown mock rule kind '" + s + "'");
    }
};

inline long estimate_tokens(const std::string& text) {
    return static_cast<long>((text.size() + 3) / 4);  // ~4 chars per token
}

class MockBackend : public Backend {
public:
    enum class Fallback { Echo, Error };

    MockBackend(std::uint64_t seed, std::vector<MockRule> rules,
                Fallback fallback = Fallback::Echo)
        : seed_(seed), rules_(std::move(rules)), fallback_(fallback) {
        for (const auto& r : rules_) {
            validate_rule(r);
            compiled_.emplace_back(r.pattern, std::regex::ECMAScript);
        }
        counters_.assign(rules_.size(), 0);
    }

    ChatResponse complete(const ChatRequest& req) override {
        std::string haystack = req.system + "\n" + req.user;
        for (std::size_t i = 0; i < rules_.size(); ++i) {
            if (!std::regex_search(haystack, compiled_[i])) continue;
            long call_index = counters_[i]++;
            return respond(rules_[i], i, call_index, req);
        }
        if (fallback_ == Fallback::Echo) return make_response(req, req.user);
        throw UnmatchedPattern("no mock rule matches request: " +
                               haystack.substr(0, std::min<std::size_t>(haystack.size(), 120)));
    }

    // Per-rule call counters are the only mutable state; persisting them is
    // enough to resume a checkpointed run with identical behavior.
    nlohmann::json state_to_json() const { return nlohmann::json{{"counters", counters_}}; }

    void state_from_json(const nlohmann::json& j) {
        auto counters = j.at("counters").get<std::vector<long>>();
        if (counters.size() != rules_.size())
            throw ConfigError("mock state has " + std::to_string(counters.size()) +
                              " counters for " + std::to_string(rules_.size()) + " rules");
        counters_ = std::move(counters);
    }

    const std::vector<long>& counters() const { return counters_; }
    std::uint64_t seed() const { return seed_; }

    // Fixture file: {"fallback": "echo"|"error", "rules": [{"pattern": ...,
    // "kind": ..., "responses": [...], "weights": [...], "fail_count": n}]}
    static std::shared_ptr<MockBackend> from_fixture_json(const nlohmann::json& j,
                                                          std::uint64_t seed) {
        Fallback fb = Fallback::Echo;
        if (j.contains("fallback")) {
            std::string f = j.at("fallback").get<std::string>();
            if (f == "echo") fb = Fallback::Echo;
            else if (f == "error") fb = Fallback::Error;
            else throw ConfigError("unknown mock fallback '" + f + "'");
        }
        std::vector<MockRule> rules;
        for (const auto& rj : j.value("rules", nlohmann::json::array())) {
            MockRule r;
            r.pattern = rj.at("pattern").get<std::string>();
            r.kind = MockRule::kind_from_name(rj.value("kind", "fixed"));
            if (rj.contains("responses"))
                r.responses = rj.at("responses").get<std::vector<std::string>>();
            if (rj.contains("weights")) r.weights = rj.at("weights").get<std::vector<double>>();
            r.fail_count = rj.value("fail_count", 0);
            rules.push_back(std::move(r));
        }
        return std::make_shared<MockBackend>(seed, std::move(rules), fb);
    }

    static std::shared_ptr<MockBackend> from_fixture_file(const std::string& path,
                                                          std::uint64_t seed) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open mock fixture '" + path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("bad mock fixture '" + path + "': " + e.what());
        }
        return from_fixture_json(j, seed);
    }

private:
    static void validate_rule(const MockRule& r) {
        using Kind = MockRule::Kind;
        switch (r.kind) {
            case Kind::Echo:
                break;
            case Kind::Fixed:
            case Kind::Cycle:
            case Kind::FailThen:
                if (r.responses.empty())
                    throw ConfigError("mock rule '" + r.pattern + "' needs responses");
                break;
            case Kind::Distribution:
                if (r.responses.empty() || r.responses.size() != r.weights.size())
                    throw ConfigError("mock rule '" + r.pattern +
                                      "' needs matching responses and weights");
                for (double w : r.weights)
                    if (!(w >= 0.0) || !std::isfinite(w))
                        throw ConfigError("mock rule '" + r.pattern + "' has a bad weight");
                break;
        }
        if (r.kind == Kind::FailThen && r.fail_count < 0)
            throw ConfigError("mock rule '" + r.pattern + "' has negative fail_count");
    }

    ChatResponse respond(const MockRule& rule, std::size_t rule_index, long call_index,
                         const ChatRequest& req) const {
        using Kind = MockRule::Kind;
        switch (rule.kind) {
            case Kind::Fixed:
                return make_response(req, rule.responses.front());
            case Kind::Echo:
                return make_response(req, req.user);
            case Kind::Cycle:
                return make_response(
                    req, rule.responses[static_cast<std::size_t>(call_index) %
                                        rule.responses.size()]);
            case Kind::Distribution: {
                // Draw seeded by (seed, rule, call index): replays exactly,
                // independent of any other rule's call history.
                std::uint64_t h = fnv1a64_mix(seed_, 0x9e3779b97f4a7c15ull);
                h = fnv1a64_mix(h, static_cast<std::uint64_t>(rule_index));
                h = fnv1a64_mix(h, static_cast<std::uint64_t>(call_index));
                Rng rng(h);
                double total = 0.0;
                for (double w : rule.weights) total += w;
                std::uniform_real_distribution<double> dist(0.0, total);
                double x = dist(rng);
                double acc = 0.0;
                for (std::size_t i = 0; i < rule.weights.size(); ++i) {
                    acc += rule.weights[i];
                    if (x < acc) return make_response(req, rule.responses[i]);
                }
                return make_response(req, rule.responses.back());
            }
            case Kind::FailThen:
                if (call_index < rule.fail_count)
                    throw TransportError("scripted failure " + std::to_string(call_index + 1) +
                                         "/" + std::to_string(rule.fail_count));
                return make_response(req, rule.responses.front());
        }
        throw Error("unreachable mock rule kind");
    }

    static ChatResponse make_response(const ChatRequest& req, const std::string& text) {
        ChatResponse res;
        res.text = text;
        res.prompt_tokens = estimate_tokens(req.system) + estimate_tokens(req.user);
        res.completion_tokens = estimate_tokens(text);
        res.latency_ms = 0;
        return res;
    }

    std::uint64_t seed_;
    std::vector<MockRule> rules_;
    Fallback fallback_;
    std::vector<std::regex> compiled_;
    std::vector<long> counters_;
};

}  // namespace delvepo
