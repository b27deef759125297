#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "llmad/http_backend.hpp"
#include "llmad/llmad.hpp"
#include "llmad/run_manifest.hpp"

namespace llmad::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kBackend = 3 };

/// Bad flags or refused operation.
class UsageError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

namespace fs = std::filesystem;

inline std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

/// Creates `dir` for a new run. An existing non-empty directory is only
/// replaced with --force, and only when it holds a previous run's manifest.
inline void prepare_out_dir(const fs::path& dir, bool force) {
    std::error_code ec;
    if (fs::exists(dir, ec)) {
        if (!fs::is_directory(dir)) throw UsageError("'" + dir.string() + "' exists and is not a directory");
        if (!fs::is_empty(dir)) {
            if (!force) throw UsageError("'" + dir.string() + "' already exists; pass --force to overwrite it");
            if (!fs::exists(dir / kRunManifestName))
                throw UsageError("refusing to overwrite '" + dir.string() + "': it holds no " + kRunManifestName);
            fs::remove_all(dir, ec);
            if (ec) throw DataError("cannot clear '" + dir.string() + "': " + ec.message());
        }
    }
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory '" + dir.string() + "'");
    const auto probe = dir / ".write_probe";
    {
        std::ofstream p(probe);
        if (!p) throw DataError("output directory '" + dir.string() + "' is not writable");
    }
    fs::remove(probe, ec);
}

inline std::string absolute_str(const fs::path& p) {
    std::error_code ec;
    auto a = fs::absolute(p, ec);
    return (ec ? p : a.lexically_normal()).generic_string();
}

inline PipelineConfig load_config_or_default(const std::string& file) {
    return file.empty() ? PipelineConfig{} : load_pipeline_config(file);
}

// -----------------------------------------------------------------------------
// ingest

struct IngestArgs {
    std::string dataset;
    std::string format;
    std::string db;
    std::string config;
    std::optional<std::size_t> window;
    std::optional<std::size_t> stride;
    bool force = false;
};

inline int run_ingest(const IngestArgs& a, PipelineConfig cfg, std::ostream& out) {
    if (a.window) cfg.window_len = *a.window;
    if (a.stride) cfg.stride = *a.stride;
    validate(cfg);
    const DatasetFormat fmt = parse_dataset_format(a.format);
    const auto started = utc_timestamp();
    const auto ds = load_dataset(a.dataset, fmt);
    const double fraction = cfg.test_fraction.value_or(default_test_fraction(fmt));
    const auto split = split_train_test(ds, fraction);
    const auto dbs = build_databases(split.train, DatabaseOptions{cfg.window_len, cfg.effective_stride(), cfg.scaling()});

    prepare_out_dir(a.db, a.force);
    save_databases(dbs, a.db);

    const auto stats = summarize(split.train);
    RunManifest m;
    m.command = "ingest";
    m.config = to_json(cfg);
    m.dataset = absolute_str(a.dataset);
    m.format = to_string(fmt);
    m.split = "train";
    m.db = absolute_str(a.db);
    m.out_dir = m.db;
    m.started_at = started;
    m.finished_at = utc_timestamp();
    m.outputs = {"index.tsv", "preprocessing.json", "normal/", "anomalous/"};
    m.extra = {{"test_fraction", fraction},
               {"series", stats.series},
               {"train_points", stats.points},
               {"train_anomalies", stats.anomalies},
               {"normal_entries", dbs.normal.size()},
               {"anomalous_entries", dbs.anomalous.size()}};
    write_run_manifest(a.db, m);

    out << "series: " << stats.series << "\n"
        << "train points: " << stats.points << " (anomaly ratio " << fmt4(stats.anomaly_ratio()) << ")\n"
        << "normal entries: " << dbs.normal.size() << "\n"
        << "anomalous entries: " << dbs.anomalous.size() << "\n";
    return kOk;
}

// -----------------------------------------------------------------------------
// detect

struct DetectArgs {
    std::string dataset;
    std::string format;
    std::string db;
    std::string config;
    std::string backend = "stub";
    std::string split = "test";
    std::string out;
    std::optional<std::uint64_t> seed;
    bool dry_run = false;
    bool force = false;
};

struct SeriesJob {
    std::string id;
    std::vector<double> values;
    std::size_t offset = 0;
};

inline std::vector<SeriesJob> detection_jobs(const std::vector<LabeledSeries>& ds, const std::string& split,
                                             double fraction) {
    std::vector<SeriesJob> jobs;
    if (split == "all") {
        for (const auto& s : ds) jobs.push_back({s.id(), s.series.values, 0});
    } else if (split == "test") {
        const auto sp = split_train_test(ds, fraction);
        for (std::size_t i = 0; i < sp.test.size(); ++i)
            jobs.push_back({sp.test[i].id(), sp.test[i].series.values, sp.test_offsets[i]});
    } else {
        throw UsageError("--split must be 'test' or 'all'");
    }
    return jobs;
}

inline std::unique_ptr<ChatBackend> make_backend(const std::string& name, const PipelineConfig& cfg) {
    if (name == "stub") return std::make_unique<StubBackend>(cfg.seed);
    if (name == "http") {
        HttpBackendConfig hc;
        hc.max_in_flight = cfg.max_in_flight ? cfg.max_in_flight : 4;
        hc.read_timeout = std::chrono::seconds(cfg.timeout_seconds);
        return std::make_unique<HttpBackend>(http_config_from_env(hc));
    }
    throw UsageError("--backend must be 'stub' or 'http'");
}

inline int run_detect(const DetectArgs& a, PipelineConfig cfg, std::ostream& out) {
    if (a.seed) cfg.seed = *a.seed;
    validate(cfg);
    const DatasetFormat fmt = parse_dataset_format(a.format);
    if (!fs::is_directory(a.db)) throw DataError("database directory '" + a.db + "' does not exist");
    const auto dbs = load_databases(a.db);
    detail::check_compatible(cfg, dbs);
    const auto ds = load_dataset(a.dataset, fmt);
    const double fraction = cfg.test_fraction.value_or(default_test_fraction(fmt));
    const auto jobs = detection_jobs(ds, a.split, fraction);
    const std::string tag = dataset_tag(cfg, fmt);

    if (a.dry_run) {
        const auto& job = jobs.front();
        const auto t = resolve_template(cfg, tag, job.id);
        const auto ws = windowize(job.id, job.values, {}, cfg.window_len, cfg.effective_stride(), job.offset);
        const auto prep = prepare_window(cfg, t, dbs, ws.front());
        out << prep.bundle.rendered << "\n";
        return kOk;
    }

    auto backend = make_backend(a.backend, cfg);
    const auto started = utc_timestamp();
    prepare_out_dir(a.out, a.force);
    std::ofstream results(fs::path(a.out) / "results.jsonl");
    std::ofstream usage(fs::path(a.out) / "usage.jsonl");
    if (!results || !usage) throw DataError("cannot write results in '" + a.out + "'");

    RunManifest m;
    m.command = "detect";
    m.config = to_json(cfg);
    m.dataset = absolute_str(a.dataset);
    m.format = to_string(fmt);
    m.split = a.split;
    m.db = absolute_str(a.db);
    m.backend = backend->identity();
    m.out_dir = absolute_str(a.out);
    m.started_at = started;
    m.outputs = {"results.jsonl", "usage.jsonl"};

    int code = kOk;
    std::size_t total_flagged = 0, total_rejected = 0, total_windows = 0;
    for (const auto& job : jobs) {
        const auto t = resolve_template(cfg, tag, job.id);
        const auto r = detect_series(cfg, *backend, dbs, t, job.id, job.values, job.offset);
        write_results(results, r);
        write_usage(usage, r);
        const auto flagged = static_cast<std::size_t>(std::count(r.global_flags.begin(), r.global_flags.end(), 1));
        total_flagged += flagged;
        total_rejected += r.rejected_windows().size();
        total_windows += r.windows.size();
        out << job.id << ": " << r.windows.size() << " windows, " << flagged << " flagged, "
            << r.rejected_windows().size() << " rejected\n";
        if (r.incomplete) {
            m.status = "incomplete";
            m.extra["abort_reason"] = r.abort_reason;
            out << "backend aborted: " << r.abort_reason << "\n";
            code = kBackend;
            break;
        }
    }
    results.flush();
    usage.flush();
    if (!results || !usage) throw DataError("failed writing results in '" + a.out + "'");
    m.finished_at = utc_timestamp();
    m.extra["windows"] = total_windows;
    m.extra["flagged"] = total_flagged;
    m.extra["rejected"] = total_rejected;
    write_run_manifest(a.out, m);
    out << "results: " << (fs::path(a.out) / "results.jsonl").string() << "\n";
    return code;
}

// -----------------------------------------------------------------------------
// eval

struct EvalArgs {
    std::string results;
    std::string dataset;
    std::string format;
    std::optional<std::size_t> delay;
    std::string adjust = "both";
    std::string type_labels;
    std::string out;
};

inline nlohmann::ordered_json metric_json(const BestF1& b) {
    return {{"f1", b.metric.f1},
            {"precision", b.metric.precision},
            {"recall", b.metric.recall},
            {"cap", b.cap},
            {"tp", b.metric.true_positives},
            {"fp", b.metric.false_positives},
            {"fn", b.metric.false_negatives}};
}

inline nlohmann::ordered_json metric_json(const MetricResult& m) {
    return {{"f1", m.f1},
            {"precision", m.precision},
            {"recall", m.recall},
            {"tp", m.true_positives},
            {"fp", m.false_positives},
            {"fn", m.false_negatives}};
}

/// {"<source_id>": {"<window start>": ["SingleSpike", ...]}}
inline std::map<std::pair<std::string, std::size_t>, std::set<AnomalyType>> load_type_labels(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot read type labels '" + file + "'");
    std::map<std::pair<std::string, std::size_t>, std::set<AnomalyType>> out;
    try {
        const auto j = nlohmann::json::parse(in);
        for (const auto& [id, windows] : j.items()) {
            for (const auto& [start, types] : windows.items()) {
                std::set<AnomalyType> set;
                for (const auto& t : types) {
                    auto parsed = anomaly_type_from_string(t.get<std::string>());
                    if (!parsed) throw DataError("type labels: unknown anomaly type '" + t.get<std::string>() + "'");
                    set.insert(*parsed);
                }
                out[{id, static_cast<std::size_t>(std::stoull(start))}] = std::move(set);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("type labels '" + file + "': " + e.what());
    } catch (const std::invalid_argument&) {
        throw DataError("type labels '" + file + "': window keys must be integer offsets");
    }
    return out;
}

inline int run_eval(const EvalArgs& a, std::ostream& out) {
    const DatasetFormat fmt = parse_dataset_format(a.format);
    if (a.adjust != "point" && a.adjust != "delayed" && a.adjust != "both")
        throw UsageError("--adjust must be 'point', 'delayed' or 'both'");
    const std::size_t k = a.delay.value_or(default_delay(fmt).k);
    const bool show_point = a.adjust != "delayed";
    const bool show_delayed = a.adjust != "point";

    const auto results = read_results(a.results);
    const auto ds = load_dataset(a.dataset, fmt);
    std::map<std::string, const LabeledSeries*> truth;
    for (const auto& s : ds) truth[s.id()] = &s;

    std::vector<std::string> orphans, missing;
    std::set<std::string> seen;
    for (const auto& r : results) {
        seen.insert(r.source_id);
        if (!truth.count(r.source_id)) orphans.push_back(r.source_id);
    }
    for (const auto& [id, s] : truth)
        if (!seen.count(id)) missing.push_back(id);
    if (!orphans.empty() || !missing.empty()) {
        std::string msg = "results and truth do not align;";
        auto list = [](const std::vector<std::string>& xs) {
            std::string s;
            for (const auto& x : xs) s += (s.empty() ? "" : ", ") + x;
            return s;
        };
        if (!orphans.empty()) msg += " results without truth: " + list(orphans) + ";";
        if (!missing.empty()) msg += " truth series without results: " + list(missing) + ";";
        msg.pop_back();
        throw DataError(msg);
    }

    nlohmann::ordered_json report;
    report["delay_k"] = k;
    report["adjust"] = a.adjust;
    report["series"] = nlohmann::ordered_json::array();
    std::vector<MetricResult> point_parts, delayed_parts;
    std::vector<std::optional<AnomalyType>> type_pred;
    std::vector<std::set<AnomalyType>> type_truth;
    const auto type_labels = a.type_labels.empty() ? decltype(load_type_labels("")){} : load_type_labels(a.type_labels);

    char line[256];
    std::snprintf(line, sizeof line, "%-32s %8s %8s %8s", "series", "points", "truth", "flagged");
    std::string header = line;
    const std::string delayed_title = "Delayed F1 (K=" + std::to_string(k) + ")";
    auto cell = [&](const std::string& text) {
        std::snprintf(line, sizeof line, "  %18s", text.c_str());
        return std::string(line);
    };
    if (show_point) header += cell("Best F1 (point)");
    if (show_delayed) header += cell(delayed_title);
    out << header << "\n";

    for (const auto& r : results) {
        const auto& s = *truth.at(r.source_id);
        if (r.offset + r.global_flags.size() > s.size())
            throw DataError("results for '" + r.source_id + "' cover [" + std::to_string(r.offset) + ", " +
                            std::to_string(r.offset + r.global_flags.size()) + ") but the series has " +
                            std::to_string(s.size()) + " points");
        const std::span<const Label> slice(s.labels.data() + r.offset, r.global_flags.size());
        const auto ranked = ranked_indices(r);
        const auto bp = best_f1_ranked(ranked, slice, Adjustment::point());
        const auto bd = best_f1_ranked(ranked, slice, Adjustment::delayed(k));
        point_parts.push_back(bp.metric);
        delayed_parts.push_back(bd.metric);
        const auto truth_count = std::count(slice.begin(), slice.end(), Label{1});
        const auto flagged = std::count(r.global_flags.begin(), r.global_flags.end(), Label{1});

        nlohmann::ordered_json js;
        js["source_id"] = r.source_id;
        js["offset"] = r.offset;
        js["points"] = slice.size();
        js["truth_anomalies"] = truth_count;
        js["flagged"] = flagged;
        js["incomplete"] = r.incomplete;
        js["raw"] = metric_json(f1_from_vectors(r.global_flags, slice));
        if (show_point) js["best_f1"] = metric_json(bp);
        if (show_delayed) js["delayed_f1"] = metric_json(bd);
        report["series"].push_back(js);

        std::snprintf(line, sizeof line, "%-32s %8zu %8ld %8ld", r.source_id.c_str(), slice.size(),
                      static_cast<long>(truth_count), static_cast<long>(flagged));
        std::string row = line;
        if (show_point) row += cell(fmt4(bp.metric.f1));
        if (show_delayed) row += cell(fmt4(bd.metric.f1));
        out << row << "\n";

        for (const auto& w : r.windows) {
            auto it = type_labels.find({r.source_id, w.start});
            if (it == type_labels.end()) continue;
            type_pred.push_back(w.report ? w.report->anomaly_type : std::nullopt);
            type_truth.push_back(it->second);
        }
    }

    const auto agg_p = aggregate(point_parts);
    const auto agg_d = aggregate(delayed_parts);
    report["aggregate"] = nlohmann::ordered_json::object();
    std::snprintf(line, sizeof line, "%-32s %8s %8s %8s", "aggregate (micro)", "", "", "");
    std::string agg = line;
    if (show_point) {
        report["aggregate"]["best_f1"] = metric_json(agg_p);
        agg += cell(fmt4(agg_p.f1));
    }
    if (show_delayed) {
        report["aggregate"]["delayed_f1"] = metric_json(agg_d);
        agg += cell(fmt4(agg_d.f1));
    }
    out << agg << "\n";

    if (!a.type_labels.empty()) {
        const auto tm = type_metrics(type_pred, type_truth);
        report["types"] = {{"samples", tm.samples}, {"accuracy", tm.any_hit_accuracy}, {"micro", metric_json(tm.micro)}};
        out << "type classification: " << tm.samples << " samples, Acc " << fmt4(tm.any_hit_accuracy)
            << ", Micro F1 " << fmt4(tm.micro.f1) << "\n";
    }

    const fs::path dest = a.out.empty() ? fs::path(a.results).parent_path() / "metrics.json" : fs::path(a.out);
    std::ofstream f(dest);
    if (!f) throw DataError("cannot write '" + dest.string() + "'");
    f << report.dump(2) << "\n";
    out << "metrics: " << dest.string() << "\n";
    return kOk;
}

// -----------------------------------------------------------------------------
// plot

struct PlotArgs {
    std::string results;
    std::string dataset;
    std::string format;
    std::string series;
    std::string out;
};

inline int run_plot(const PlotArgs& a, std::ostream& out) {
    const auto results = read_results(a.results);
    const auto ds = load_dataset(a.dataset, parse_dataset_format(a.format));
    const DetectionResult* r = nullptr;
    if (a.series.empty()) {
        if (results.size() != 1) throw UsageError("results hold " + std::to_string(results.size()) + " series; pass --series");
        r = &results.front();
    } else {
        for (const auto& x : results)
            if (x.source_id == a.series) r = &x;
        if (!r) throw DataError("no results for series '" + a.series + "'");
    }
    const LabeledSeries* s = nullptr;
    for (const auto& x : ds)
        if (x.id() == r->source_id) s = &x;
    if (!s) throw DataError("series '" + r->source_id + "' is not in the dataset");
    if (r->offset + r->global_flags.size() > s->size())
        throw DataError("results for '" + r->source_id + "' extend past the series end");

    const std::span<const double> values(s->series.values.data() + r->offset, r->global_flags.size());
    const std::span<const Label> labels(s->labels.data() + r->offset, r->global_flags.size());
    std::vector<std::size_t> pred;
    for (std::size_t i = 0; i < r->global_flags.size(); ++i)
        if (r->global_flags[i]) pred.push_back(i);
    PlotOptions opt;
    opt.title = r->source_id + " [" + std::to_string(r->offset) + ", " +
                std::to_string(r->offset + r->global_flags.size()) + ")";
    const std::string svg = render_svg(values, labels, pred, opt);
    std::ofstream f(a.out);
    if (!f) throw DataError("cannot write '" + a.out + "'");
    f << svg;
    out << "plot: " << a.out << " (" << segments(labels).size() << " truth segments, " << pred.size()
        << " predicted points)\n";
    return kOk;
}

// -----------------------------------------------------------------------------
// cost

struct CostArgs {
    std::string usage;
    std::optional<double> input_tokens;
    std::optional<double> output_tokens;
    double interval = 60;
    std::size_t window_len = 400;
    std::optional<double> requests_per_day;
    double price_in = 0.01;
    double price_out = 0.03;
    std::string out;
};

inline int run_cost(const CostArgs& a, std::ostream& out) {
    const CostModel model{a.price_in, a.price_out};
    const double per_day = a.requests_per_day.value_or(requests_per_day(a.interval, a.window_len));
    CostReport rep;
    if (!a.usage.empty()) {
        if (a.input_tokens || a.output_tokens) throw UsageError("pass either --usage or token means, not both");
        const auto log = read_usage(a.usage);
        rep = cost_report(log.responses, model, per_day, log.window_total_seconds);
    } else {
        if (!a.input_tokens || !a.output_tokens)
            throw UsageError("pass --usage, or both --input-tokens and --output-tokens");
        rep = cost_report(SampleStats{*a.input_tokens, 0}, SampleStats{*a.output_tokens, 0}, model, per_day);
        rep.empty = false;
    }
    out << to_text(rep);
    if (!a.out.empty()) {
        std::ofstream f(a.out);
        if (!f) throw DataError("cannot write '" + a.out + "'");
        f << to_json(rep).dump(2) << "\n";
    }
    return kOk;
}

// -----------------------------------------------------------------------------
// replay

inline int run_replay(const std::string& run_dir, const std::string& out_dir, bool force, std::ostream& out) {
    const RunManifest m = read_run_manifest(run_dir);
    PipelineConfig cfg;
    try {
        cfg = pipeline_config_from_json(m.config);
    } catch (const DataError& e) {
        throw DataError("run manifest in '" + run_dir + "': " + e.what());
    }
    if (m.command == "ingest") {
        IngestArgs a;
        a.dataset = m.dataset;
        a.format = m.format;
        a.db = out_dir;
        a.force = force;
        return run_ingest(a, cfg, out);
    }
    if (m.command == "detect") {
        DetectArgs a;
        a.dataset = m.dataset;
        a.format = m.format;
        a.db = m.db;
        a.split = m.split;
        a.out = out_dir;
        a.force = force;
        a.backend = "stub";
        return run_detect(a, cfg, out);
    }
    throw DataError("cannot replay a '" + m.command + "' run");
}

// -----------------------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"LLM-based time-series anomaly detection"};
    app.name("llmad");
    app.require_subcommand(1);

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Build normal/anomalous retrieval databases from the train split");
    c_ingest->add_option("--dataset", ingest.dataset, "Dataset file or directory")->required();
    c_ingest->add_option("--format", ingest.format, "kpi-csv | yahoo-csv | wsd-csv | generic-csv")->required();
    c_ingest->add_option("--db", ingest.db, "Output database directory")->required();
    c_ingest->add_option("--config", ingest.config, "Pipeline config (JSON)");
    c_ingest->add_option("--window", ingest.window, "Window length");
    c_ingest->add_option("--stride", ingest.stride, "Window stride");
    c_ingest->add_flag("--force", ingest.force, "Replace an existing database directory");

    DetectArgs detect;
    auto* c_detect = app.add_subcommand("detect", "Run detection over the test split and write results");
    c_detect->add_option("--dataset", detect.dataset, "Dataset file or directory")->required();
    c_detect->add_option("--format", detect.format, "kpi-csv | yahoo-csv | wsd-csv | generic-csv")->required();
    c_detect->add_option("--db", detect.db, "Database directory from ingest")->required();
    c_detect->add_option("--config", detect.config, "Pipeline config (JSON)");
    c_detect->add_option("--backend", detect.backend, "stub | http")->capture_default_str();
    c_detect->add_option("--split", detect.split, "test | all")->capture_default_str();
    c_detect->add_option("--seed", detect.seed, "Stub seed (overrides config)");
    c_detect->add_option("--out", detect.out, "Output run directory");
    c_detect->add_flag("--dry-run", detect.dry_run, "Print the first rendered prompt and stop");
    c_detect->add_flag("--force", detect.force, "Replace an existing run directory");

    EvalArgs eval;
    auto* c_eval = app.add_subcommand("eval", "Score results against ground truth");
    c_eval->add_option("--results", eval.results, "results.jsonl from detect")->required();
    c_eval->add_option("--dataset", eval.dataset, "Truth dataset")->required();
    c_eval->add_option("--format", eval.format, "Dataset format")->required();
    c_eval->add_option("--delay", eval.delay, "Delay threshold K (default per format)");
    c_eval->add_option("--adjust", eval.adjust, "point | delayed | both")->capture_default_str();
    c_eval->add_option("--type-labels", eval.type_labels, "Per-window anomaly-type labels (JSON)");
    c_eval->add_option("--out", eval.out, "Metrics JSON path (default: next to results)");

    PlotArgs plot;
    auto* c_plot = app.add_subcommand("plot", "Write an SVG of a series with truth and detections");
    c_plot->add_option("--results", plot.results, "results.jsonl from detect")->required();
    c_plot->add_option("--dataset", plot.dataset, "Dataset file or directory")->required();
    c_plot->add_option("--format", plot.format, "Dataset format")->required();
    c_plot->add_option("--series", plot.series, "Series id (required when results hold several)");
    c_plot->add_option("--out", plot.out, "Output .svg path")->required();

    CostArgs cost;
    auto* c_cost = app.add_subcommand("cost", "Token, latency and cost summary");
    c_cost->add_option("--usage", cost.usage, "usage.jsonl from detect");
    c_cost->add_option("--input-tokens", cost.input_tokens, "Mean input tokens per request");
    c_cost->add_option("--output-tokens", cost.output_tokens, "Mean output tokens per request");
    c_cost->add_option("--interval", cost.interval, "Sampling interval in seconds")->capture_default_str();
    c_cost->add_option("--window-len", cost.window_len, "Points per request")->capture_default_str();
    c_cost->add_option("--requests-per-day", cost.requests_per_day, "Override the derived request rate");
    c_cost->add_option("--price-in", cost.price_in, "USD per 1000 input tokens")->capture_default_str();
    c_cost->add_option("--price-out", cost.price_out, "USD per 1000 output tokens")->capture_default_str();
    c_cost->add_option("--out", cost.out, "Write the report as JSON");

    std::string replay_run, replay_out;
    bool replay_force = false;
    auto* c_replay = app.add_subcommand("replay", "Re-run an ingest or detect run from its manifest (stub backend)");
    c_replay->add_option("--run", replay_run, "Run directory holding run_manifest.json")->required();
    c_replay->add_option("--out", replay_out, "New output directory")->required();
    c_replay->add_flag("--force", replay_force, "Replace an existing output directory");

    std::vector<const char*> argv{"llmad"};
    for (const auto& s : args) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (c_ingest->parsed()) return run_ingest(ingest, load_config_or_default(ingest.config), out);
        if (c_detect->parsed()) {
            if (!detect.dry_run && detect.out.empty()) throw UsageError("detect needs --out (or --dry-run)");
            return run_detect(detect, load_config_or_default(detect.config), out);
        }
        if (c_eval->parsed()) return run_eval(eval, out);
        if (c_plot->parsed()) return run_plot(plot, out);
        if (c_cost->parsed()) return run_cost(cost, out);
        if (c_replay->parsed()) return run_replay(replay_run, replay_out, replay_force, out);
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const BackendError& e) {
        err << "backend error: " << e.what() << "\n";
        return kBackend;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kData;
    }
    return kUsage;
}

} // namespace llmad::cli
