#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmad/dataset.hpp"
#include "llmad/error.hpp"
#include "llmad/llm_client.hpp"
#include "llmad/prompt.hpp"
#include "llmad/report.hpp"
#include "llmad/retrieval.hpp"
#include "llmad/timeseries.hpp"

namespace llmad {

struct PipelineConfig {
    std::size_t window_len = 400;
    /// 0 means stride == window_len (non-overlapping windows).
    std::size_t stride = 0;
    std::size_t k_normal = 2;
    std::size_t k_anomalous = 1;
    std::size_t radius = 1;
    std::size_t base_size = 32;
    double alpha = 0.95;
    double beta = 0.05;
    std::int64_t scale_constant = 1000;
    std::string model = "gpt-4-1106-preview";
    double temperature = 0.7;
    int max_output_tokens = 2048;
    /// Extra completions requested when a reply fails to parse.
    int reask = 2;
    /// wsd, kpi or yahoo; empty derives it from the dataset format.
    std::string dataset;
    /// Yahoo subset tag; empty uses each series id.
    std::string subset;
    std::uint64_t seed = 0;
    /// 0 uses the backend's own limit.
    std::size_t max_in_flight = 0;
    int retry_max_attempts = 3;
    std::int64_t retry_initial_backoff_ms = 500;
    std::optional<std::int64_t> retry_budget_ms;
    std::int64_t timeout_seconds = 120;
    std::optional<std::string> template_dir;
    std::optional<std::string> knowledge_file;
    /// Overrides the per-format test fraction when set.
    std::optional<double> test_fraction;
    /// Candidate values for hyperparameter sweeps; detection itself uses alpha and beta.
    std::vector<double> alpha_grid{0.8, 0.95, 0.99};
    std::vector<double> beta_grid{0.0, 0.05, 0.15};

    std::size_t effective_stride() const { return stride ? stride : window_len; }
    ScalingOptions scaling() const { return {alpha, beta, scale_constant}; }
    FastDtwOptions dtw() const { return {radius, base_size}; }
};

inline void validate(const PipelineConfig& c) {
    if (c.window_len == 0) throw InvalidArgument("window_len must be positive");
    if (!(c.alpha > 0 && c.alpha <= 1)) throw InvalidArgument("alpha must lie in (0,1]");
    if (!(c.beta >= 0)) throw InvalidArgument("beta must be >= 0");
    if (c.scale_constant <= 0) throw InvalidArgument("scale_constant must be positive");
    if (c.base_size < 2) throw InvalidArgument("base_size must be at least 2");
    if (!(c.temperature >= 0)) throw InvalidArgument("temperature must be >= 0");
    if (c.max_output_tokens <= 0) throw InvalidArgument("max_output_tokens must be positive");
    if (c.reask < 0) throw InvalidArgument("reask must be >= 0");
    if (c.retry_max_attempts < 1) throw InvalidArgument("retry.max_attempts must be >= 1");
    if (c.timeout_seconds <= 0) throw InvalidArgument("timeout_seconds must be positive");
    if (c.test_fraction && !(*c.test_fraction > 0 && *c.test_fraction < 1))
        throw InvalidArgument("test_fraction must lie in (0,1)");
}

inline nlohmann::ordered_json to_json(const PipelineConfig& c) {
    nlohmann::ordered_json j;
    j["window_len"] = c.window_len;
    j["stride"] = c.effective_stride();
    j["k_normal"] = c.k_normal;
    j["k_anomalous"] = c.k_anomalous;
    j["radius"] = c.radius;
    j["base_size"] = c.base_size;
    j["alpha"] = c.alpha;
    j["beta"] = c.beta;
    j["scale_constant"] = c.scale_constant;
    j["model"] = c.model;
    j["temperature"] = c.temperature;
    j["max_output_tokens"] = c.max_output_tokens;
    j["reask"] = c.reask;
    j["dataset"] = c.dataset;
    j["subset"] = c.subset;
    j["seed"] = c.seed;
    j["max_in_flight"] = c.max_in_flight;
    j["retry"] = {{"max_attempts", c.retry_max_attempts},
                  {"initial_backoff_ms", c.retry_initial_backoff_ms},
                  {"budget_ms", c.retry_budget_ms ? nlohmann::ordered_json(*c.retry_budget_ms) : nlohmann::ordered_json(nullptr)}};
    j["timeout_seconds"] = c.timeout_seconds;
    j["template_dir"] = c.template_dir ? nlohmann::ordered_json(*c.template_dir) : nlohmann::ordered_json(nullptr);
    j["knowledge_file"] = c.knowledge_file ? nlohmann::ordered_json(*c.knowledge_file) : nlohmann::ordered_json(nullptr);
    j["test_fraction"] = c.test_fraction ? nlohmann::ordered_json(*c.test_fraction) : nlohmann::ordered_json(nullptr);
    j["alpha_grid"] = c.alpha_grid;
    j["beta_grid"] = c.beta_grid;
    return j;
}

/// Reads a config object. Keys are optional; unknown keys are rejected so that
/// typos do not silently fall back to defaults.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw DataError("config must be a JSON object");
    static const std::set<std::string> known = {
        "window_len", "stride", "k_normal", "k_anomalous", "radius", "base_size", "alpha", "beta",
        "scale_constant", "model", "temperature", "max_output_tokens", "reask", "dataset", "subset",
        "seed", "max_in_flight", "retry", "timeout_seconds", "template_dir", "knowledge_file",
        "test_fraction", "alpha_grid", "beta_grid"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw DataError("config: unknown key '" + k + "'");

    PipelineConfig c;
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        auto get_opt = [&](const char* key, auto& field) {
            if (j.contains(key) && !j.at(key).is_null())
                field = j.at(key).get<typename std::decay_t<decltype(field)>::value_type>();
        };
        get("window_len", c.window_len);
        get("stride", c.stride);
        get("k_normal", c.k_normal);
        get("k_anomalous", c.k_anomalous);
        get("radius", c.radius);
        get("base_size", c.base_size);
        get("alpha", c.alpha);
        get("beta", c.beta);
        get("scale_constant", c.scale_constant);
        get("model", c.model);
        get("temperature", c.temperature);
        get("max_output_tokens", c.max_output_tokens);
        get("reask", c.reask);
        get("dataset", c.dataset);
        get("subset", c.subset);
        get("seed", c.seed);
        get("max_in_flight", c.max_in_flight);
        get("timeout_seconds", c.timeout_seconds);
        get_opt("template_dir", c.template_dir);
        get_opt("knowledge_file", c.knowledge_file);
        get_opt("test_fraction", c.test_fraction);
        get("alpha_grid", c.alpha_grid);
        get("beta_grid", c.beta_grid);
        if (j.contains("retry")) {
            const auto& r = j.at("retry");
            if (!r.is_object()) throw DataError("config: retry must be an object");
            for (const auto& [k, v] : r.items())
                if (k != "max_attempts" && k != "initial_backoff_ms" && k != "budget_ms")
                    throw DataError("config: unknown key 'retry." + k + "'");
            if (r.contains("max_attempts")) c.retry_max_attempts = r.at("max_attempts").get<int>();
            if (r.contains("initial_backoff_ms")) c.retry_initial_backoff_ms = r.at("initial_backoff_ms").get<std::int64_t>();
            if (r.contains("budget_ms") && !r.at("budget_ms").is_null())
                c.retry_budget_ms = r.at("budget_ms").get<std::int64_t>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("config: ") + e.what());
    }
    try {
        validate(c);
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("config: ") + e.what());
    }
    return c;
}

/// Relative template_dir / knowledge_file paths are taken from the config
/// file's directory.
inline PipelineConfig load_pipeline_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot read config '" + file.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError("config '" + file.string() + "' is not valid JSON: " + e.what());
    }
    PipelineConfig c = pipeline_config_from_json(j);
    auto anchor = [&](std::optional<std::string>& p) {
        if (p && std::filesystem::path(*p).is_relative())
            p = (std::filesystem::absolute(file).parent_path() / *p).lexically_normal().string();
    };
    anchor(c.template_dir);
    anchor(c.knowledge_file);
    return c;
}

/// Dataset tag used for template selection.
inline std::string dataset_tag(const PipelineConfig& c, DatasetFormat f) {
    if (!c.dataset.empty()) return c.dataset;
    switch (f) {
    case DatasetFormat::Wsd: return "wsd";
    case DatasetFormat::Yahoo: return "yahoo";
    case DatasetFormat::Kpi:
    case DatasetFormat::Generic: return "kpi";
    }
    return "kpi";
}

/// Template for one series: shipped or from template_dir, with any knowledge override applied.
inline PromptTemplate resolve_template(const PipelineConfig& c, const std::string& dataset,
                                       const std::string& series_id) {
    const TemplateVariant v = select_variant(dataset, c.subset.empty() ? series_id : c.subset);
    PromptTemplate t = c.template_dir ? load_template(*c.template_dir, v) : builtin_template(v);
    if (c.knowledge_file) t = apply_knowledge(t, load_knowledge_override(*c.knowledge_file, t));
    return t;
}

// -----------------------------------------------------------------------------
// Per-window processing

struct RetrievedRef {
    std::string key;
    double distance = 0;
};

struct PreparedWindow {
    PromptBundle bundle;
    std::vector<RetrievedRef> normals;
    std::vector<RetrievedRef> anomalies;
};

namespace detail {

inline std::vector<std::int64_t> entry_ints(const ReferenceEntry& e, const DatabaseOptions& db,
                                            const PipelineConfig& c) {
    if (db.scaling) {
        std::vector<std::int64_t> out;
        out.reserve(e.values.size());
        for (double v : e.values) out.push_back(round_to_int(v));
        return out;
    }
    return rescale(e.values, c.alpha, c.beta, c.scale_constant).ints;
}

inline void check_compatible(const PipelineConfig& c, const DatabasePair& dbs) {
    if (dbs.options.scaling && !(*dbs.options.scaling == c.scaling())) {
        const auto& s = *dbs.options.scaling;
        throw InvalidArgument("databases were built with alpha=" + std::to_string(s.alpha) +
                              " beta=" + std::to_string(s.beta) + " scale=" + std::to_string(s.scale_constant) +
                              " but the config uses alpha=" + std::to_string(c.alpha) +
                              " beta=" + std::to_string(c.beta) + " scale=" + std::to_string(c.scale_constant));
    }
}

} // namespace detail

/// Rescales the window, retrieves its ICL examples and renders the prompt.
inline PreparedWindow prepare_window(const PipelineConfig& c, const PromptTemplate& t, const DatabasePair& dbs,
                                     const Window& w) {
    PreparedWindow out;
    const ScaledWindow sw = rescale(w, c.alpha, c.beta, c.scale_constant);
    const std::vector<double> query = dbs.options.scaling ? to_doubles(sw.ints) : w.values;
    auto examples = [&](const RetrievalDatabase& db, std::size_t k, std::vector<RetrievedRef>& refs) {
        std::vector<IclExample> xs;
        for (const auto& hit : retrieve(db, query, k, c.dtw())) {
            refs.push_back({hit.entry->key, hit.distance.distance});
            xs.push_back(mark_anomalies(detail::entry_ints(*hit.entry, dbs.options, c), hit.entry->labels));
        }
        return xs;
    };
    auto normals = examples(dbs.normal, c.k_normal, out.normals);
    auto anomalies = examples(dbs.anomalous, c.k_anomalous, out.anomalies);
    out.bundle = render_prompt(t, std::move(normals), std::move(anomalies), sw);
    return out;
}

enum class WindowStatus { Ok, Rejected, Aborted, Skipped };

inline std::string to_string(WindowStatus s) {
    switch (s) {
    case WindowStatus::Ok: return "ok";
    case WindowStatus::Rejected: return "rejected";
    case WindowStatus::Aborted: return "aborted";
    case WindowStatus::Skipped: return "skipped";
    }
    return "";
}

inline WindowStatus parse_window_status(std::string_view s) {
    if (s == "ok") return WindowStatus::Ok;
    if (s == "rejected") return WindowStatus::Rejected;
    if (s == "aborted") return WindowStatus::Aborted;
    if (s == "skipped") return WindowStatus::Skipped;
    throw DataError("unknown window status '" + std::string(s) + "'");
}

struct WindowOutcome {
    std::size_t start = 0; // global offset
    std::size_t length = 0;
    WindowStatus status = WindowStatus::Skipped;
    /// Raw completion of every parse attempt, in order.
    std::vector<std::string> completions;
    /// Why each failed attempt was rejected (or why the backend aborted).
    std::vector<std::string> failures;
    std::optional<AnomalyReport> report;
    std::vector<std::size_t> global_indices;
    std::vector<RetrievedRef> normals;
    std::vector<RetrievedRef> anomalies;
    /// Usage of every backend response; not serialized with results.
    std::vector<ChatResponse> responses;
    double total_seconds = 0;
};

struct DetectionResult {
    std::string source_id;
    TemplateVariant variant = TemplateVariant::Kpi;
    /// Global index of global_flags[0].
    std::size_t offset = 0;
    std::vector<Label> global_flags;
    std::vector<WindowOutcome> windows;
    bool incomplete = false;
    std::string abort_reason;

    std::vector<const WindowOutcome*> rejected_windows() const {
        std::vector<const WindowOutcome*> out;
        for (const auto& w : windows)
            if (w.status == WindowStatus::Rejected) out.push_back(&w);
        return out;
    }
};

/// Flagged positions (relative to offset) in output order: window order, then
/// the order of each report's anomalies array. First occurrence wins.
inline std::vector<std::size_t> ranked_indices(const DetectionResult& r) {
    std::vector<std::size_t> out;
    std::vector<bool> seen(r.global_flags.size(), false);
    for (const auto& w : r.windows) {
        if (!w.report) continue;
        for (auto i : w.report->anomalies) {
            const std::size_t g = w.start + static_cast<std::size_t>(i) - 1 - r.offset;
            if (g < seen.size() && !seen[g]) {
                seen[g] = true;
                out.push_back(g);
            }
        }
    }
    return out;
}

/// Runs the full pipeline over `values`, whose first point sits at global
/// index `offset`. Windows run concurrently up to the backend's in-flight
/// limit. A non-retriable backend failure (or one that exhausts the retry
/// policy) stops scheduling new windows and marks the result incomplete.
inline DetectionResult detect_series(const PipelineConfig& c, ChatBackend& backend, const DatabasePair& dbs,
                                     const PromptTemplate& t, const std::string& source_id,
                                     std::span<const double> values, std::size_t offset = 0) {
    validate(c);
    detail::check_compatible(c, dbs);
    if (values.empty()) throw InvalidArgument("series '" + source_id + "' is empty");

    DetectionResult res;
    res.source_id = source_id;
    res.variant = t.variant();
    res.offset = offset;
    res.global_flags.assign(values.size(), 0);

    const auto windows = windowize(source_id, values, {}, c.window_len, c.effective_stride(), offset);
    res.windows.resize(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
        res.windows[i].start = windows[i].start;
        res.windows[i].length = windows[i].size();
    }

    RetryPolicy policy;
    policy.max_attempts = c.retry_max_attempts;
    policy.initial_backoff = std::chrono::milliseconds(c.retry_initial_backoff_ms);
    if (c.retry_budget_ms) policy.budget = std::chrono::milliseconds(*c.retry_budget_ms);

    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::mutex abort_mu;

    auto run_one = [&](std::size_t wi) {
        const Window& w = windows[wi];
        WindowOutcome& out = res.windows[wi];
        const auto t0 = std::chrono::steady_clock::now();
        PreparedWindow prep = prepare_window(c, t, dbs, w);
        out.normals = std::move(prep.normals);
        out.anomalies = std::move(prep.anomalies);
        ChatRequest req{c.model, prep.bundle.rendered, c.temperature, c.max_output_tokens};
        out.status = WindowStatus::Rejected;
        for (int attempt = 0; attempt <= c.reask; ++attempt) {
            ChatResponse resp;
            try {
                resp = complete(backend, req, policy);
            } catch (const BackendError& e) {
                out.status = WindowStatus::Aborted;
                out.failures.push_back(std::string("backend: ") + e.what());
                std::lock_guard lock(abort_mu);
                if (!abort.exchange(true)) res.abort_reason = e.what();
                break;
            }
            out.completions.push_back(resp.text);
            out.responses.push_back(resp);
            try {
                AnomalyReport rep = enforce_constraints(parse_report(resp.text, w.size(), t.variant()), t.variant());
                out.global_indices = map_indices(rep, w.start);
                out.report = std::move(rep);
                out.status = WindowStatus::Ok;
                break;
            } catch (const ParseError& e) {
                out.failures.push_back(std::string("parse: ") + e.what());
            } catch (const ValidationError& e) {
                out.failures.push_back(std::string("validation: ") + e.what() + " [" + e.subject() + "]");
            }
        }
        out.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    std::exception_ptr worker_error;
    std::mutex err_mu;
    auto worker = [&] {
        for (;;) {
            if (abort.load()) return;
            const std::size_t wi = next.fetch_add(1);
            if (wi >= windows.size()) return;
            try {
                run_one(wi);
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!worker_error) worker_error = std::current_exception();
                abort.store(true);
                return;
            }
        }
    };

    std::size_t threads = c.max_in_flight ? c.max_in_flight : backend.max_in_flight();
    threads = std::clamp<std::size_t>(threads, 1, windows.size());
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (worker_error) std::rethrow_exception(worker_error);

    res.incomplete = abort.load();
    for (const auto& w : res.windows)
        for (auto g : w.global_indices) res.global_flags[g - offset] = 1;
    return res;
}

inline DetectionResult detect_series(const PipelineConfig& c, ChatBackend& backend, const DatabasePair& dbs,
                                     const PromptTemplate& t, const TimeSeries& s, std::size_t offset = 0) {
    return detect_series(c, backend, dbs, t, s.id, s.values, offset);
}

// -----------------------------------------------------------------------------
// Results file: JSON lines. Per series, one record per window followed by a
// summary record. Nothing time-dependent is written, so stub runs are
// byte-reproducible.

inline nlohmann::ordered_json run_length_encode(std::span<const Label> flags) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < flags.size();) {
        std::size_t j = i;
        while (j < flags.size() && flags[j] == flags[i]) ++j;
        out.push_back({static_cast<int>(flags[i]), j - i});
        i = j;
    }
    return out;
}

inline std::vector<Label> run_length_decode(const nlohmann::json& rle) {
    std::vector<Label> out;
    for (const auto& run : rle) {
        const int v = run.at(0).get<int>();
        if (v != 0 && v != 1) throw DataError("flag runs must hold 0 or 1");
        out.insert(out.end(), run.at(1).get<std::size_t>(), static_cast<Label>(v));
    }
    return out;
}

inline nlohmann::ordered_json window_record(const DetectionResult& r, const WindowOutcome& w) {
    auto refs = [](const std::vector<RetrievedRef>& xs) {
        nlohmann::ordered_json a = nlohmann::ordered_json::array();
        for (const auto& x : xs) a.push_back({{"key", x.key}, {"distance", x.distance}});
        return a;
    };
    nlohmann::ordered_json j;
    j["record"] = "window";
    j["source_id"] = r.source_id;
    j["variant"] = to_string(r.variant);
    j["start"] = w.start;
    j["length"] = w.length;
    j["status"] = to_string(w.status);
    j["retrieved"] = {{"normal", refs(w.normals)}, {"anomalous", refs(w.anomalies)}};
    j["completions"] = w.completions;
    j["failures"] = w.failures;
    j["report"] = w.report ? to_json(*w.report) : nlohmann::ordered_json(nullptr);
    j["repairs"] = w.report ? w.report->repairs : std::vector<std::string>{};
    j["global_indices"] = w.global_indices;
    return j;
}

inline nlohmann::ordered_json summary_record(const DetectionResult& r) {
    nlohmann::ordered_json j;
    j["record"] = "summary";
    j["source_id"] = r.source_id;
    j["variant"] = to_string(r.variant);
    j["offset"] = r.offset;
    j["length"] = r.global_flags.size();
    j["windows"] = r.windows.size();
    j["rejected"] = r.rejected_windows().size();
    j["incomplete"] = r.incomplete;
    j["abort_reason"] = r.abort_reason;
    j["flagged"] = std::count(r.global_flags.begin(), r.global_flags.end(), Label{1});
    j["ranked"] = ranked_indices(r);
    j["flags_rle"] = run_length_encode(r.global_flags);
    return j;
}

inline void write_results(std::ostream& out, const DetectionResult& r) {
    for (const auto& w : r.windows) out << window_record(r, w).dump() << '\n';
    out << summary_record(r).dump() << '\n';
}

inline std::vector<DetectionResult> read_results(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot read results '" + file.string() + "'");
    std::vector<DetectionResult> out;
    DetectionResult cur;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = file.string() + ":" + std::to_string(lineno);
        try {
            const auto j = nlohmann::json::parse(line);
            const std::string kind = j.at("record").get<std::string>();
            const std::string id = j.at("source_id").get<std::string>();
            if (!cur.windows.empty() && cur.source_id != id)
                throw DataError("window records of '" + cur.source_id + "' lack a summary");
            cur.source_id = id;
            cur.variant = parse_template_variant(j.at("variant").get<std::string>());
            if (kind == "window") {
                WindowOutcome w;
                w.start = j.at("start").get<std::size_t>();
                w.length = j.at("length").get<std::size_t>();
                w.status = parse_window_status(j.at("status").get<std::string>());
                for (const auto& x : j.at("retrieved").at("normal"))
                    w.normals.push_back({x.at("key").get<std::string>(), x.at("distance").get<double>()});
                for (const auto& x : j.at("retrieved").at("anomalous"))
                    w.anomalies.push_back({x.at("key").get<std::string>(), x.at("distance").get<double>()});
                w.completions = j.at("completions").get<std::vector<std::string>>();
                w.failures = j.at("failures").get<std::vector<std::string>>();
                if (!j.at("report").is_null()) {
                    w.report = parse_report(j.at("report").dump(), w.length, cur.variant);
                    w.report->repairs = j.at("repairs").get<std::vector<std::string>>();
                }
                w.global_indices = j.at("global_indices").get<std::vector<std::size_t>>();
                cur.windows.push_back(std::move(w));
            } else if (kind == "summary") {
                cur.offset = j.at("offset").get<std::size_t>();
                cur.global_flags = run_length_decode(j.at("flags_rle"));
                if (cur.global_flags.size() != j.at("length").get<std::size_t>())
                    throw DataError("flag runs do not add up to the stated length");
                cur.incomplete = j.at("incomplete").get<bool>();
                cur.abort_reason = j.at("abort_reason").get<std::string>();
                out.push_back(std::move(cur));
                cur = DetectionResult{};
            } else {
                throw DataError("unknown record kind '" + kind + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + ": " + e.what());
        } catch (const Error& e) {
            throw DataError(where + ": " + e.what());
        }
    }
    if (!cur.windows.empty()) throw DataError(file.string() + ": trailing window records without a summary");
    return out;
}

/// Usage log: one line per backend response plus per-window wall time. Kept
/// apart from results because timings differ between runs.
inline void write_usage(std::ostream& out, const DetectionResult& r) {
    for (const auto& w : r.windows) {
        for (std::size_t i = 0; i < w.responses.size(); ++i) {
            const auto& resp = w.responses[i];
            nlohmann::ordered_json j;
            j["source_id"] = r.source_id;
            j["start"] = w.start;
            j["attempt"] = i + 1;
            j["input_tokens"] = resp.input_tokens;
            j["output_tokens"] = resp.output_tokens;
            j["api_seconds"] = resp.wall_time_seconds;
            j["tokens_estimated"] = resp.tokens_estimated;
            j["transport_attempts"] = resp.attempts;
            // pipeline time is attributed to the window's last response
            if (i + 1 == w.responses.size()) j["window_total_seconds"] = w.total_seconds;
            out << j.dump() << '\n';
        }
    }
}

struct UsageLog {
    std::vector<ChatResponse> responses;
    std::vector<double> window_total_seconds;
};

inline UsageLog read_usage(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot read usage log '" + file.string() + "'");
    UsageLog log;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ChatResponse r;
            r.input_tokens = j.at("input_tokens").get<std::int64_t>();
            r.output_tokens = j.at("output_tokens").get<std::int64_t>();
            r.wall_time_seconds = j.at("api_seconds").get<double>();
            r.tokens_estimated = j.at("tokens_estimated").get<bool>();
            r.attempts = j.at("transport_attempts").get<int>();
            log.responses.push_back(r);
            if (j.contains("window_total_seconds"))
                log.window_total_seconds.push_back(j.at("window_total_seconds").get<double>());
        } catch (const nlohmann::json::exception& e) {
            throw DataError(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return log;
}

} // namespace llmad
