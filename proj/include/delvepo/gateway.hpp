#pragma once

// Uniform front door to the optimizer LLM and the task LLM. A Gateway owns one
// backend per role, retries transient failures with exponential backoff,
// strips reasoning-tag blocks from responses, caps in-flight requests, and
// keeps per-role usage totals for cost accounting.

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <thread>

#include "delvepo/errors.hpp"

namespace delvepo {

struct ChatRequest {
    std::string system;
    std::string user;
    double temperature = 0.5;
    int max_output_tokens = 1024;
    std::string model_id;
};

struct ChatResponse {
    std::string text;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    long latency_ms = 0;
};

enum class LlmRole { Optimizer, Target };

inline std::string llm_role_name(LlmRole r) {
    return r == LlmRole::Optimizer ? "optimizer" : "target";
}

// Transient transport problem (connect failure, garbled body): always worth a retry.
struct TransportError : Error {
    using Error::Error;
};

// Non-200 answer. Retryable only for rate limiting and server-side errors.
struct HttpStatusError : Error {
    int status;
    HttpStatusError(int status_, const std::string& what_)
        : Error("HTTP " + std::to_string(status_) + ": " + what_), status(status_) {}
    bool retryable() const { return status == 429 || status >= 500; }
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse complete(const ChatRequest& req) = 0;
};

struct PriceTable {
    double prompt_per_million = 0.0;      // currency units per 1M prompt tokens
    double completion_per_million = 0.0;  // currency units per 1M completion tokens
};

struct RoleUsage {
    long calls = 0;
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

class UsageLedger {
public:
    void add(LlmRole role, long prompt_tokens, long completion_tokens) {
        auto& u = usage(role);
        u.calls += 1;
        u.prompt_tokens += prompt_tokens;
        u.completion_tokens += completion_tokens;
    }

    RoleUsage& usage(LlmRole role) {
        return role == LlmRole::Optimizer ? optimizer_ : target_;
    }
    const RoleUsage& usage(LlmRole role) const {
        return role == LlmRole::Optimizer ? optimizer_ : target_;
    }

    double cost(LlmRole role, const PriceTable& prices) const {
        const auto& u = usage(role);
        return u.prompt_tokens * prices.prompt_per_million / 1e6 +
               u.completion_tokens * prices.completion_per_million / 1e6;
    }

    long total_calls() const { return optimizer_.calls + target_.calls; }
    long total_tokens() const {
        return optimizer_.prompt_tokens + optimizer_.completion_tokens + target_.prompt_tokens +
               target_.completion_tokens;
    }

private:
    RoleUsage optimizer_;
    RoleUsage target_;
};

struct RetryPolicy {
    int max_attempts = 3;
    int initial_backoff_ms = 1000;
    double backoff_multiplier = 2.0;
};

// Removes every complete {open}...{close} block, then trims. An unbalanced
// open tag is left alone rather than guessing where the block was meant to end.
inline std::string strip_reasoning_blocks(std::string text, const std::string& open,
                                          const std::string& close) {
    if (open.empty() || close.empty()) return text;
    for (;;) {
        auto a = text.find(open);
        if (a == std::string::npos) break;
        auto b = text.find(close, a + open.size());
        if (b == std::string::npos) break;
        text.erase(a, b + close.size() - a);
    }
    auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

class Gateway {
public:
    using SleepFn = std::function<void(int /*ms*/)>;

    Gateway(std::shared_ptr<Backend> optimizer, std::shared_ptr<Backend> target,
            RetryPolicy retry = {}, int max_in_flight = 4, SleepFn sleep = nullptr)
        : optimizer_(std::move(optimizer)),
          target_(std::move(target)),
          retry_(retry),
          in_flight_(max_in_flight > 0 ? max_in_flight : 1),
          sleep_(sleep ? std::move(sleep) : [](int ms) {
              std::this_thread::sleep_for(std::chrono::milliseconds(ms));
          }) {
        if (!optimizer_ || !target_) throw ConfigError("gateway needs a backend per role");
    }

    // Shared backend for both roles (the default setup: one model plays both).
    Gateway(std::shared_ptr<Backend> shared, RetryPolicy retry = {}, int max_in_flight = 4,
            SleepFn sleep = nullptr)
        : Gateway(shared, shared, retry, max_in_flight, std::move(sleep)) {}

    ChatResponse generate(const ChatRequest& req, LlmRole role) {
        if (req.user.empty()) throw Error("generate: empty user message");
        Backend& backend = role == LlmRole::Optimizer ? *optimizer_ : *target_;

        in_flight_.acquire();
        struct Release {
            std::counting_semaphore<>& sem;
            ~Release() { sem.release(); }
        } release{in_flight_};

        std::string last_error;
        int backoff = retry_.initial_backoff_ms;
        for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
            try {
                ChatResponse res = backend.complete(req);
                {
                    std::lock_guard<std::mutex> lock(ledger_mutex_);
                    ledger_.add(role, res.prompt_tokens, res.completion_tokens);
                }
                if (strip_reasoning_)
                    res.text = strip_reasoning_blocks(res.text, reasoning_open_, reasoning_close_);
                if (res.text.empty()) throw ContentEmpty("backend returned empty text");
                return res;
            } catch (const HttpStatusError& e) {
                if (!e.retryable()) throw BackendUnavailable(e.what());
                last_error = e.what();
            } catch (const TransportError& e) {
                last_error = e.what();
            }
            if (attempt < retry_.max_attempts) {
                sleep_(backoff);
                backoff = static_cast<int>(std::lround(backoff * retry_.backoff_multiplier));
            }
        }
        throw BackendUnavailable("gave up after " + std::to_string(retry_.max_attempts) +
                                 " attempts; last error: " + last_error);
    }

    UsageLedger ledger_snapshot() const {
        std::lock_guard<std::mutex> lock(ledger_mutex_);
        return ledger_;
    }

    void restore_ledger(const UsageLedger& ledger) {
        std::lock_guard<std::mutex> lock(ledger_mutex_);
        ledger_ = ledger;
    }

    void set_reasoning_tags(std::string open, std::string close, bool enabled = true) {
        reasoning_open_ = std::move(open);
        reasoning_close_ = std::move(close);
        strip_reasoning_ = enabled;
    }

    const RetryPolicy& retry_policy() const { return retry_; }

private:
    std::shared_ptr<Backend> optimizer_;
    std::shared_ptr<Backend> target_;
    RetryPolicy retry_;
    std::counting_semaphore<> in_flight_;
    SleepFn sleep_;
    mutable std::mutex ledger_mutex_;
    UsageLedger ledger_;
    std::string reasoning_open_ = "<think>";
    std::string reasoning_close_ = "</think>";
    bool strip_reasoning_ = true;
};

}  // namespace delvepo
