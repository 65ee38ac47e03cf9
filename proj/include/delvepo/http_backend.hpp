#pragma once

// Chat-completions HTTP backend. Speaks the common wire shape: POST
// {base_url}/chat/completions with {model, messages, temperature, max_tokens},
// bearer token from an environment variable.

#include <chrono>
#include <cstdlib>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "delvepo/errors.hpp"
#include "delvepo/gateway.hpp"

namespace delvepo {

struct HttpEndpoint {
    std::string base_url;  // e.g. "https://api.example.com/v1" or "http://localhost:8080"
    std::string model_id;
    std::string api_key_env = "DELVEPO_API_KEY";
    int timeout_s = 120;
};

class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
        if (endpoint_.base_url.empty()) throw ConfigError("http backend needs a base_url");
        split_url(endpoint_.base_url, host_, path_prefix_);
    }

    ChatResponse complete(const ChatRequest& req) override {
        nlohmann::json messages = nlohmann::json::array();
        if (!req.system.empty())
            messages.push_back({{"role", "system"}, {"content", req.system}});
        messages.push_back({{"role", "user"}, {"content", req.user}});
        nlohmann::json body{
            {"model", req.model_id.empty() ? endpoint_.model_id : req.model_id},
            {"messages", messages},
            {"temperature", req.temperature},
            {"max_tokens", req.max_output_tokens},
        };

        httplib::Client client(host_);
        client.set_connection_timeout(endpoint_.timeout_s, 0);
        client.set_read_timeout(endpoint_.timeout_s, 0);
        httplib::Headers headers;
        if (const char* key = std::getenv(endpoint_.api_key_env.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);

        auto start = std::chrono::steady_clock::now();
        auto result = client.Post(path_prefix_ + "/chat/completions", headers, body.dump(),
                                  "application/json");
        auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();

        if (!result)
            throw TransportError("request to " + host_ + " failed: " +
                                 httplib::to_string(result.error()));
        if (result->status != 200) throw HttpStatusError(result->status, result->body);

        try {
            auto j = nlohmann::json::parse(result->body);
            ChatResponse res;
            res.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
            if (j.contains("usage")) {
                res.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
                res.completion_tokens = j["usage"].value("completion_tokens", 0L);
            }
            res.latency_ms = static_cast<long>(elapsed);
            return res;
        } catch (const nlohmann::json::exception& e) {
            throw TransportError(std::string("unparseable response body: ") + e.what());
        }
    }

    const HttpEndpoint& endpoint() const { return endpoint_; }

private:
    // "https://host:port/some/prefix" -> ("https://host:port", "/some/prefix")
    static void split_url(const std::string& url, std::string& host, std::string& prefix) {
        auto scheme_end = url.find("://");
        auto path_start =
            url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
        if (path_start == std::string::npos) {
            host = url;
            prefix.clear();
        } else {
            host = url.substr(0, path_start);
            prefix = url.substr(path_start);
            while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
        }
    }

    HttpEndpoint endpoint_;
    std::string host_;
    std::string path_prefix_;
};

}  // namespace delvepo
