#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmad/error.hpp"
#include "llmad/stub_detector.hpp"

namespace llmad {

struct ChatRequest {
    std::string model = "gpt-4-1106-preview";
    std::string prompt;
    double temperature = 0.7;
    int max_output_tokens = 2048;
};

struct ChatResponse {
    std::string text;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    double wall_time_seconds = 0.0;
    /// True when the provider did not report usage and counts were estimated.
    bool tokens_estimated = false;
    /// Transport attempts spent on this response, including the successful one.
    int attempts = 1;
};

/// One chat-completion provider. Implementations must be safe to call from
/// several threads at once, up to max_in_flight().
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse complete(const ChatRequest& req) = 0;
    virtual std::string identity() const = 0;
    virtual std::size_t max_in_flight() const { return 1; }
};

/// Roughly four characters per token.
inline std::int64_t estimate_tokens(std::string_view text) {
    return static_cast<std::int64_t>((text.size() + 3) / 4);
}

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
    /// Give up once this much time has been spent, even with attempts left.
    std::optional<std::chrono::milliseconds> budget;
    /// Injected so tests can observe backoff without sleeping.
    std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
    };
};

/// Calls the backend with exponential backoff on retriable failures.
inline ChatResponse complete(ChatBackend& backend, const ChatRequest& req, const RetryPolicy& policy = {}) {
    if (req.prompt.empty()) throw InvalidArgument("chat request has an empty prompt");
    const auto started = std::chrono::steady_clock::now();
    auto backoff = policy.initial_backoff;
    const int max_attempts = std::max(1, policy.max_attempts);
    for (int attempt = 1;; ++attempt) {
        try {
            ChatResponse r = backend.complete(req);
            r.attempts = attempt;
            return r;
        } catch (const BackendError& e) {
            if (!e.retriable()) throw;
            const auto spent = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - started);
            const bool out_of_time = policy.budget && spent + backoff > *policy.budget;
            if (attempt >= max_attempts || out_of_time)
                throw BackendError(std::string(e.what()) + " (gave up after " + std::to_string(attempt) +
                                       (attempt == 1 ? " attempt)" : " attempts)"),
                                   true, attempt, e.status());
            if (policy.sleep) policy.sleep(backoff);
            backoff = std::chrono::milliseconds(
                static_cast<std::int64_t>(std::llround(static_cast<double>(backoff.count()) * policy.multiplier)));
        }
    }
}

/// Offline backend: answers with stub_detect. Token counts are estimates.
class StubBackend final : public ChatBackend {
public:
    explicit StubBackend(std::uint64_t seed = 0) : seed_(seed) {}

    ChatResponse complete(const ChatRequest& req) override {
        const auto t0 = std::chrono::steady_clock::now();
        ChatResponse r;
        r.text = stub_detect(req.prompt, seed_);
        r.input_tokens = estimate_tokens(req.prompt);
        r.output_tokens = estimate_tokens(r.text);
        r.tokens_estimated = true;
        r.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }

    std::string identity() const override { return "stub(seed=" + std::to_string(seed_) + ")"; }
    std::size_t max_in_flight() const override {
        return std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }

private:
    std::uint64_t seed_;
};

// -----------------------------------------------------------------------------
// Cost accounting

struct CostModel {
    double price_per_1k_input = 0.01;
    double price_per_1k_output = 0.03;
};

struct SampleStats {
    double mean = 0.0;
    double std = 0.0; // sample standard deviation (n-1), 0 for fewer than two samples
};

inline SampleStats sample_stats(std::span<const double> xs) {
    SampleStats s;
    if (xs.empty()) return s;
    double sum = 0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

struct CostReport {
    std::size_t calls = 0;
    bool empty = true;
    bool tokens_estimated = false;
    SampleStats input_tokens;
    SampleStats output_tokens;
    SampleStats api_seconds;
    std::optional<SampleStats> total_seconds;
    double requests_per_day = 0.0;
    double cost_per_request = 0.0;
    double daily_cost = 0.0;
    /// Daily cost rounded to whole cents; the annual figure extrapolates from it.
    double daily_cost_billed = 0.0;
    double annual_cost = 0.0;
    double annual_cost_unrounded = 0.0;
};

/// Requests per day for non-overlapping windows over a series sampled every
/// `interval_seconds`.
inline double requests_per_day(double interval_seconds, std::size_t window_len) {
    if (interval_seconds <= 0 || window_len == 0) throw InvalidArgument("interval and window length must be positive");
    return 86400.0 / (interval_seconds * static_cast<double>(window_len));
}

inline double round_cents(double usd) { return std::round(usd * 100.0) / 100.0; }

inline CostReport cost_report(const SampleStats& input_tokens, const SampleStats& output_tokens, const CostModel& model,
                              double per_day) {
    if (model.price_per_1k_input < 0 || model.price_per_1k_output < 0) throw InvalidArgument("prices must be >= 0");
    if (per_day < 0) throw InvalidArgument("requests_per_day must be >= 0");
    CostReport r;
    r.input_tokens = input_tokens;
    r.output_tokens = output_tokens;
    r.requests_per_day = per_day;
    r.cost_per_request = input_tokens.mean / 1000.0 * model.price_per_1k_input +
                         output_tokens.mean / 1000.0 * model.price_per_1k_output;
    r.daily_cost = per_day * r.cost_per_request;
    r.daily_cost_billed = round_cents(r.daily_cost);
    r.annual_cost = 365.0 * r.daily_cost_billed;
    r.annual_cost_unrounded = 365.0 * r.daily_cost;
    return r;
}

/// Token, latency and cost summary over a set of calls. `total_seconds`, when
/// given, holds end-to-end pipeline time per call alongside the API time.
inline CostReport cost_report(std::span<const ChatResponse> responses, const CostModel& model, double per_day,
                              std::span<const double> total_seconds = {}) {
    std::vector<double> in, out, api;
    bool estimated = false;
    for (const auto& r : responses) {
        in.push_back(static_cast<double>(r.input_tokens));
        out.push_back(static_cast<double>(r.output_tokens));
        api.push_back(r.wall_time_seconds);
        estimated = estimated || r.tokens_estimated;
    }
    CostReport rep = cost_report(sample_stats(in), sample_stats(out), model, per_day);
    rep.calls = responses.size();
    rep.empty = responses.empty();
    rep.tokens_estimated = estimated;
    rep.api_seconds = sample_stats(api);
    if (!total_seconds.empty()) rep.total_seconds = sample_stats(total_seconds);
    return rep;
}

inline nlohmann::ordered_json to_json(const CostReport& r) {
    auto stat = [](const SampleStats& s) { return nlohmann::ordered_json{{"mean", s.mean}, {"std", s.std}}; };
    nlohmann::ordered_json j;
    j["calls"] = r.calls;
    j["empty"] = r.empty;
    j["tokens_estimated"] = r.tokens_estimated;
    j["input_tokens"] = stat(r.input_tokens);
    j["output_tokens"] = stat(r.output_tokens);
    j["api_calling_time_s"] = stat(r.api_seconds);
    if (r.total_seconds) j["total_time_s"] = stat(*r.total_seconds);
    j["requests_per_day"] = r.requests_per_day;
    j["cost_per_request_usd"] = r.cost_per_request;
    j["daily_cost_usd"] = r.daily_cost_billed;
    j["daily_cost_unrounded_usd"] = r.daily_cost;
    j["annual_cost_usd"] = r.annual_cost;
    j["annual_cost_unrounded_usd"] = r.annual_cost_unrounded;
    return j;
}

/// Plain-text table: cost item, mean, std.
inline std::string to_text(const CostReport& r) {
    char buf[160];
    std::string out;
    auto row = [&](const char* name, double mean, double sd, const char* fmt) {
        std::snprintf(buf, sizeof buf, fmt, name, mean, sd);
        out += buf;
    };
    std::snprintf(buf, sizeof buf, "%-22s %12s %12s\n", "Cost Items", "Mean", "Std");
    out += buf;
    row("Input Tokens", r.input_tokens.mean, r.input_tokens.std, "%-22s %12.0f %12.0f\n");
    row("Output Tokens", r.output_tokens.mean, r.output_tokens.std, "%-22s %12.0f %12.0f\n");
    row("API Calling Time (s)", r.api_seconds.mean, r.api_seconds.std, "%-22s %12.2f %12.2f\n");
    if (r.total_seconds) row("Total Time (s)", r.total_seconds->mean, r.total_seconds->std, "%-22s %12.2f %12.2f\n");
    std::snprintf(buf, sizeof buf, "%-22s %12.2f\n", "Daily Cost (USD)", r.daily_cost_billed);
    out += buf;
    std::snprintf(buf, sizeof buf, "%-22s %12.2f\n", "Annual Cost (USD)", r.annual_cost);
    out += buf;
    if (r.empty) out += "(no calls recorded)\n";
    if (r.tokens_estimated) out += "(token counts estimated from character length)\n";
    return out;
}

} // namespace llmad
