#pragma once

#include <chrono>
#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "llmad/error.hpp"
#include "llmad/llm_client.hpp"

namespace llmad {

inline constexpr const char* kEndpointEnv = "LLMAD_ENDPOINT";
inline constexpr const char* kApiKeyEnv = "LLMAD_API_KEY";
inline constexpr const char* kDefaultEndpoint = "https://api.openai.com/v1/chat/completions";

struct HttpBackendConfig {
    /// Full URL of the chat-completions route, e.g. https://host/v1/chat/completions.
    std::string endpoint = kDefaultEndpoint;
    std::string api_key;
    std::size_t max_in_flight = 4;
    /// Minimum spacing between request starts; zero disables rate limiting.
    std::chrono::milliseconds min_request_spacing{0};
    std::chrono::seconds connect_timeout{10};
    std::chrono::seconds read_timeout{120};
};

/// Endpoint and key from LLMAD_ENDPOINT / LLMAD_API_KEY. The key is required.
inline HttpBackendConfig http_config_from_env(HttpBackendConfig base = {}) {
    if (const char* e = std::getenv(kEndpointEnv); e && *e) base.endpoint = e;
    const char* k = std::getenv(kApiKeyEnv);
    if (!k || !*k) throw InvalidArgument(std::string(kApiKeyEnv) + " is not set");
    base.api_key = k;
    return base;
}

namespace detail {

struct ParsedUrl {
    std::string origin; // scheme://host[:port]
    std::string path;
};

inline ParsedUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw InvalidArgument("endpoint '" + url + "' has no scheme");
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https")
        throw InvalidArgument("endpoint '" + url + "' must use http or https");
    const auto path_start = url.find('/', scheme_end + 3);
    ParsedUrl p;
    p.origin = url.substr(0, path_start);
    p.path = path_start == std::string::npos ? "/" : url.substr(path_start);
    return p;
}

/// Bounds concurrent requests and spaces their start times.
class Throttle {
public:
    Throttle(std::size_t slots, std::chrono::milliseconds spacing) : free_(std::max<std::size_t>(1, slots)), spacing_(spacing) {}

    void acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return free_ > 0; });
        --free_;
        if (spacing_.count() > 0) {
            const auto now = std::chrono::steady_clock::now();
            const auto at = std::max(now, next_start_);
            next_start_ = at + spacing_;
            lock.unlock();
            std::this_thread::sleep_until(at);
        }
    }

    void release() {
        {
            std::lock_guard lock(mu_);
            ++free_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::size_t free_;
    std::chrono::milliseconds spacing_;
    std::chrono::steady_clock::time_point next_start_{};
};

} // namespace detail

/// Chat-completions client over HTTP(S). One user message per request.
class HttpBackend final : public ChatBackend {
public:
    explicit HttpBackend(HttpBackendConfig cfg)
        : cfg_(std::move(cfg)), url_(detail::split_url(cfg_.endpoint)),
          throttle_(cfg_.max_in_flight, cfg_.min_request_spacing) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
        if (cfg_.endpoint.rfind("https://", 0) == 0)
            throw InvalidArgument("this build has no TLS support; cannot reach " + cfg_.endpoint);
#endif
    }

    ChatResponse complete(const ChatRequest& req) override {
        nlohmann::json body = {
            {"model", req.model},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", req.prompt}}})},
            {"temperature", req.temperature},
            {"max_tokens", req.max_output_tokens},
        };

        throttle_.acquire();
        struct Release {
            detail::Throttle& t;
            ~Release() { t.release(); }
        } release{throttle_};

        httplib::Client cli(url_.origin);
        cli.set_connection_timeout(cfg_.connect_timeout);
        cli.set_read_timeout(cfg_.read_timeout);
        cli.set_bearer_token_auth(cfg_.api_key);

        const auto t0 = std::chrono::steady_clock::now();
        auto res = cli.Post(url_.path, body.dump(), "application/json");
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        if (!res) throw BackendError("transport failure: " + httplib::to_string(res.error()), true);
        const int status = res->status;
        if (status == 401 || status == 403) throw AuthError(res->body, status);
        if (status == 429 || status >= 500)
            throw BackendError("HTTP " + std::to_string(status) + ": " + res->body, true, 1, status);
        if (status < 200 || status >= 300)
            throw BackendError("HTTP " + std::to_string(status) + ": " + res->body, false, 1, status);

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error&) {
            throw BackendError("response body is not JSON: " + res->body.substr(0, 200), true, 1, status);
        }
        ChatResponse out;
        try {
            out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw BackendError("response lacks choices[0].message.content: " + res->body.substr(0, 200), true, 1,
                               status);
        }
        out.wall_time_seconds = elapsed;
        const auto usage = j.find("usage");
        if (usage != j.end() && usage->is_object() && usage->contains("prompt_tokens") &&
            usage->contains("completion_tokens")) {
            out.input_tokens = usage->at("prompt_tokens").get<std::int64_t>();
            out.output_tokens = usage->at("completion_tokens").get<std::int64_t>();
        } else {
            out.input_tokens = estimate_tokens(req.prompt);
            out.output_tokens = estimate_tokens(out.text);
            out.tokens_estimated = true;
        }
        return out;
    }

    std::string identity() const override { return "http(" + cfg_.endpoint + ")"; }
    std::size_t max_in_flight() const override { return std::max<std::size_t>(1, cfg_.max_in_flight); }

private:
    HttpBackendConfig cfg_;
    detail::ParsedUrl url_;
    detail::Throttle throttle_;
};

} // namespace llmad
