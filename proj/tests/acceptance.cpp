// Acceptance run: one PASS/FAIL/SKIP line per criterion, non-zero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cases.hpp"
#include "fixtures.hpp"
#include "llmad/http_backend.hpp"
#include "llmad/llmad.hpp"
#include "oracles.hpp"

using namespace llmad;
using Bits = std::vector<std::uint8_t>;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    enum Kind { Pass, Fail, Skip } kind = Pass;
    std::string detail;
};

Verdict fail(std::string why) { return {Verdict::Fail, std::move(why)}; }
Verdict pass(std::string what) { return {Verdict::Pass, std::move(what)}; }

std::vector<double> random_seq(std::mt19937_64& rng, std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len(1, max_len);
    std::uniform_real_distribution<double> v(-10, 10);
    std::vector<double> s(len(rng));
    for (auto& x : s) x = v(rng);
    return s;
}

Bits from_mask(unsigned mask, std::size_t n) {
    Bits v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = (mask >> i) & 1u;
    return v;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

Verdict dtw_oracle() {
    std::mt19937_64 rng(1001);
    for (int t = 0; t < 500; ++t) {
        const auto a = random_seq(rng, 6), b = random_seq(rng, 6);
        const double got = dtw_exact(a, b).distance, want = oracle::dtw_by_enumeration(a, b);
        if (!close(got, want, 1e-12))
            return fail("pair " + std::to_string(t) + ": " + std::to_string(got) + " != " + std::to_string(want));
    }
    return pass("500 pairs match path enumeration");
}

Verdict fastdtw_bounds() {
    std::mt19937_64 rng(1002);
    for (int t = 0; t < 200; ++t) {
        const auto a = random_seq(rng, 64), b = random_seq(rng, 64);
        const double exact = dtw_exact(a, b).distance;
        const double tol = 1e-9 * std::max(1.0, exact);
        for (std::size_t r : {0u, 1u, 2u}) {
            const double f = fastdtw(a, b, r).distance;
            if (f < exact - tol)
                return fail("pair " + std::to_string(t) + " r=" + std::to_string(r) + " below exact");
        }
        const std::size_t big = std::max(a.size(), b.size());
        for (std::size_t r : {big, big + 5}) {
            if (!close(fastdtw(a, b, r).distance, exact, tol))
                return fail("pair " + std::to_string(t) + " r=" + std::to_string(r) + " differs from exact");
        }
    }
    return pass("200 pairs, r in {0,1,2} bounded below by exact, r >= max length exact");
}

Verdict metric_oracles() {
    std::vector<Bits> truths{Bits(12, 0), Bits(12, 1), from_mask(0b000000111000, 12), from_mask(0b100000000001, 12),
                             from_mask(0b010101010101, 12), from_mask(0b111100001111, 12)};
    std::mt19937_64 rng(1003);
    while (truths.size() < 20) truths.push_back(oracle::random_bits(rng, 12, 0.35));
    for (const auto& truth : truths)
        for (unsigned m = 0; m < (1u << 12); ++m) {
            const Bits pred = from_mask(m, 12);
            if (point_adjust(pred, truth) != oracle::point_adjust(pred, truth)) return fail("point_adjust mismatch");
            for (std::size_t k : {0u, 1u, 3u, 7u})
                if (delayed_adjust(pred, truth, k) != oracle::delayed_adjust(pred, truth, k))
                    return fail("delayed_adjust mismatch at k=" + std::to_string(k));
        }

    std::size_t sweeps = 0;
    for (int t = 0; t < 2000; ++t) {
        const std::size_t n = 1 + rng() % 10;
        const Bits truth = oracle::random_bits(rng, n, 0.4);
        std::vector<double> scores(n);
        // small integer scores force ties
        for (auto& s : scores) s = static_cast<double>(rng() % 5);
        const std::size_t k = rng() % 4;
        auto none = [](const Bits& p) { return p; };
        auto pa = [&](const Bits& p) { return oracle::point_adjust(p, truth); };
        auto da = [&](const Bits& p) { return oracle::delayed_adjust(p, truth, k); };
        if (!close(best_f1_scores(scores, truth, Adjustment::none()).metric.f1,
                   oracle::best_f1_scores(scores, truth, none), 1e-12) ||
            !close(best_f1_scores(scores, truth, Adjustment::point()).metric.f1,
                   oracle::best_f1_scores(scores, truth, pa), 1e-12) ||
            !close(best_f1_scores(scores, truth, Adjustment::delayed(k)).metric.f1,
                   oracle::best_f1_scores(scores, truth, da), 1e-12))
            return fail("best_f1_scores differs from the threshold sweep (case " + std::to_string(t) + ")");

        // ranked form: every prefix of a random ranking
        std::vector<std::size_t> ranked(n);
        for (std::size_t i = 0; i < n; ++i) ranked[i] = i;
        std::shuffle(ranked.begin(), ranked.end(), rng);
        ranked.resize(rng() % (n + 1));
        double want = 0;
        for (std::size_t cap = 0; cap <= ranked.size(); ++cap) {
            Bits p(n, 0);
            for (std::size_t i = 0; i < cap; ++i) p[ranked[i]] = 1;
            want = std::max(want, oracle::f1(oracle::point_adjust(p, truth), truth));
        }
        if (!close(best_f1_ranked(ranked, truth, Adjustment::point()).metric.f1, want, 1e-12))
            return fail("best_f1_ranked differs from the prefix sweep (case " + std::to_string(t) + ")");
        ++sweeps;
    }
    return pass("2^12 x 20 adjustment vectors, " + std::to_string(sweeps) + " best-F1 sweeps on n <= 10");
}

Verdict delay_fixture() {
    // three segments, first detected at offsets 0, 1 and 2
    const Bits truth{0, 1, 1, 0, 0, 1, 1, 1, 0, 0, 1, 1, 1, 0};
    const Bits pred{0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0};
    const Bits want{0, 1, 1, 0, 0, 1, 1, 1, 0, 0, 0, 0, 0, 0};
    if (delayed_adjust(pred, truth, 1) != want) return fail("K=1 adjustment differs from the fixture");
    const auto m = f1_from_vectors(delayed_adjust(pred, truth, 1), truth);
    if (m.true_positives != 5 || m.false_negatives != 3) return fail("unexpected TP/FN counts");
    return pass("offset-1 segment credited, offset-2 segment zeroed");
}

Verdict prompt_fidelity() {
    for (auto v : kAllVariants) {
        const auto golden = cases::read_file(cases::golden_path(v));
        if (golden.empty()) return fail("missing golden " + cases::golden_path(v).string());
        const auto got = cases::render_fixture(builtin_template(v)).rendered;
        if (got != golden) return fail(to_string(v) + " differs from its golden file");
        for (const char* s : {"Determine if there are any anomalies in the provided AIOPS flow data sequence.",
                              "Provide responses in a strict JSON format"})
            if (got.find(s) == std::string::npos) return fail(to_string(v) + " lacks \"" + s + "\"");
    }
    return pass("4 variants byte-identical to golden files");
}

Verdict parser() {
    for (auto v : kAllVariants) {
        try {
            const auto r = parse_report(cases::instantiate(cases::skeleton_line(v)), 400, v);
            if (r.is_anomaly || !r.repairs.empty()) return fail(to_string(v) + " skeleton parsed unexpectedly");
        } catch (const std::exception& e) {
            return fail(to_string(v) + " skeleton: " + e.what());
        }
    }
    const auto ms = cases::mutations();
    if (ms.size() < 20) return fail("fewer than 20 mutation cases");
    for (const auto& c : ms)
        if (auto why = cases::run_mutation(c); !why.empty()) return fail(c.name + ": " + why);
    std::mt19937_64 rng(1006);
    for (int t = 0; t < 100; ++t) {
        const auto v = kAllVariants[rng() % kAllVariants.size()];
        const std::size_t len = 1 + rng() % 400;
        const auto r = cases::random_report(rng, v, len);
        const auto s = serialize_report(r);
        if (!(parse_report(s, len, v) == r) || serialize_report(parse_report(s, len, v)) != s)
            return fail("serialize/parse identity broken on report " + std::to_string(t));
    }
    return pass("4 skeletons, " + std::to_string(ms.size()) + " mutations, 100 round trips");
}

Verdict end_to_end() {
    PipelineConfig cfg;
    const std::vector<std::size_t> spikes{137, 511, 902, 1333, 1780};
    const auto test = fixture::spike_series("synthetic", 2000, spikes, 1007, 40.0);
    const auto train = fixture::spike_series("train", 2000, {250, 1200}, 2007, 40.0);
    const auto dbs = build_databases({train}, DatabaseOptions{cfg.window_len, cfg.effective_stride(), cfg.scaling()});
    StubBackend backend(cfg.seed);
    const auto r = detect_series(cfg, backend, dbs, builtin_template(TemplateVariant::Kpi), test.series);
    if (r.incomplete || !r.rejected_windows().empty()) return fail("windows were rejected or aborted");
    const auto ranked = ranked_indices(r);
    const auto bp = best_f1_ranked(ranked, test.labels, Adjustment::point());
    const auto bd = best_f1_ranked(ranked, test.labels, Adjustment::delayed(7));
    char buf[128];
    std::snprintf(buf, sizeof buf, "Best F1 %.4f, Delayed F1 (K=7) %.4f", bp.metric.f1, bd.metric.f1);
    if (bp.metric.f1 < 0.9 || bd.metric.f1 < 0.9) return fail(buf);
    return pass(std::string(buf) + ", stub backend");
}

Verdict cost_model() {
    const auto rep = cost_report(SampleStats{4208, 0}, SampleStats{281, 0}, CostModel{0.01, 0.03}, 3.6);
    char buf[128];
    std::snprintf(buf, sizeof buf, "daily $%.2f (exact %.6f), annual $%.2f", rep.daily_cost_billed, rep.daily_cost,
                  rep.annual_cost);
    if (!close(rep.daily_cost, 0.18, 0.01) || !close(rep.daily_cost_billed, 0.18, 0.01) ||
        !close(rep.annual_cost, 65.70, 0.50))
        return fail(buf);
    return pass(buf);
}

Verdict dataset_plumbing() {
    const auto dir = fixture::temp_dir("acceptance_kpi");
    fs::create_directories(dir);
    const auto file = dir / "kpi.csv";
    std::size_t total = 0, anomalies = 0;
    {
        std::ofstream out(file);
        out << "timestamp,value,label,KPI ID\n";
        std::mt19937_64 rng(1009);
        std::normal_distribution<double> noise(0, 1);
        for (const auto& [id, n] : std::vector<std::pair<std::string, std::size_t>>{{"kpi-a", 3000}, {"kpi-b", 2500}})
            for (std::size_t i = 0; i < n; ++i) {
                const int label = (i % 211) < 3 ? 1 : 0;
                out << 1500000000 + 60 * i << ',' << 50 + noise(rng) + 30 * label << ',' << label << ',' << id << '\n';
                ++total;
                anomalies += label;
            }
    }
    auto done = [&](Verdict v) {
        fs::remove_all(dir);
        return v;
    };
    const auto ds = load_dataset(file, DatasetFormat::Kpi);
    if (ds.size() != 2) return done(fail("expected 2 KPI series, got " + std::to_string(ds.size())));
    const auto st = summarize(ds);
    const double ratio = static_cast<double>(anomalies) / static_cast<double>(total);
    if (st.points != total || st.anomalies != anomalies || !close(st.anomaly_ratio(), ratio, 1e-15))
        return done(fail("summary disagrees with the generated fixture"));

    const auto split = split_train_test(ds, 0.05);
    std::size_t covered = 0, labelled = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (split.train[i].size() + split.test[i].size() != ds[i].size())
            return done(fail(ds[i].id() + ": split lost points"));
        if (split.test[i].size() != static_cast<std::size_t>(std::ceil(0.05 * ds[i].size())) &&
            split.test[i].size() != static_cast<std::size_t>(0.05 * ds[i].size()))
            return done(fail(ds[i].id() + ": test part is not 5%"));
        for (const auto* part : {&split.train[i], &split.test[i]}) {
            std::vector<double> rebuilt;
            for (const auto& w : windowize(*part, 400)) {
                if (w.values.size() > 400) return done(fail("window longer than 400"));
                covered += w.values.size();
                if (!w.labels) return done(fail("window lost its labels"));
                for (auto l : *w.labels) labelled += l;
                rebuilt.insert(rebuilt.end(), w.values.begin(), w.values.end());
            }
            if (rebuilt != part->series.values) return done(fail(ds[i].id() + ": windows do not tile the series"));
        }
    }
    if (covered != total || labelled != anomalies) return done(fail("windowing did not conserve points"));
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu points conserved, anomaly ratio %.4f", total, st.anomaly_ratio());
    return done(pass(buf));
}

Verdict live_smoke() {
    const char* key = std::getenv(kApiKeyEnv);
    if (!key || !*key) return {Verdict::Skip, std::string(kApiKeyEnv) + " not set"};
    PipelineConfig cfg;
    cfg.reask = 2;
    HttpBackendConfig hc;
    hc.max_in_flight = 1;
    HttpBackend backend(http_config_from_env(hc));
    const auto train = fixture::spike_series("train", 800, {300}, 2010, 40.0);
    const auto dbs = build_databases({train}, DatabaseOptions{cfg.window_len, cfg.effective_stride(), cfg.scaling()});
    const auto s = fixture::spike_series("live", 400, {210}, 1010, 40.0);
    try {
        const auto r = detect_series(cfg, backend, dbs, builtin_template(TemplateVariant::Kpi), s.series);
        const auto& w = r.windows.front();
        if (w.status != WindowStatus::Ok)
            return fail("window not parsed after " + std::to_string(w.completions.size()) + " completions" +
                        (r.abort_reason.empty() ? "" : ": " + r.abort_reason));
        return pass("parsed with " + std::to_string(w.failures.size()) + " re-asks via " + backend.identity());
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"DTW oracle equivalence", dtw_oracle},
        {"FastDTW bounds", fastdtw_bounds},
        {"metric oracles", metric_oracles},
        {"delay fixture", delay_fixture},
        {"prompt fidelity", prompt_fidelity},
        {"parser", parser},
        {"end-to-end offline", end_to_end},
        {"cost model", cost_model},
        {"dataset plumbing", dataset_plumbing},
        {"live smoke test", live_smoke},
    };
    const std::vector<double> budget_s{10, 30, 0, 0, 0, 0, 20, 0, 0, 0};

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = fail(std::string("threw: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (v.kind == Verdict::Pass && budget_s[i] > 0 && secs >= budget_s[i])
            v = fail(v.detail + "; over the " + std::to_string(static_cast<int>(budget_s[i])) + " s budget");
        const char* tag = v.kind == Verdict::Pass ? "PASS" : v.kind == Verdict::Fail ? "FAIL" : "SKIP";
        std::printf("%s #%zu %s: %s (%.2f s)\n", tag, i + 1, criteria[i].first.c_str(), v.detail.c_str(), secs);
        std::fflush(stdout);
        failures += v.kind == Verdict::Fail;
    }
    return failures == 0 ? 0 : 1;
}
