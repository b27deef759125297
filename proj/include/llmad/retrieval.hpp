#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmad/dataset.hpp"
#include "llmad/dtw.hpp"
#include "llmad/error.hpp"
#include "llmad/timeseries.hpp"

namespace llmad {

enum class EntryKind { Normal, Anomalous };

inline std::string to_string(EntryKind k) { return k == EntryKind::Normal ? "normal" : "anomalous"; }

inline EntryKind parse_entry_kind(std::string_view s) {
    if (s == "normal") return EntryKind::Normal;
    if (s == "anomalous") return EntryKind::Anomalous;
    throw DataError("unknown entry kind '" + std::string(s) + "'");
}

struct ReferenceEntry {
    std::string key;
    std::vector<double> values;
    std::vector<Label> labels;
    EntryKind kind = EntryKind::Normal;

    ReferenceEntry() = default;
    ReferenceEntry(std::string k, std::vector<double> v, std::vector<Label> l)
        : key(std::move(k)), values(std::move(v)), labels(std::move(l)) {
        if (values.size() != labels.size())
            throw InvalidArgument("entry '" + key + "': values and labels differ in length");
        kind = std::find(labels.begin(), labels.end(), Label{1}) != labels.end() ? EntryKind::Anomalous
                                                                                  : EntryKind::Normal;
    }
};

/// Scaling applied to every stored window (and, by the pipeline, to queries).
struct ScalingOptions {
    double alpha = 0.95;
    double beta = 0.05;
    std::int64_t scale_constant = 1000;

    bool operator==(const ScalingOptions&) const = default;
};

struct DatabaseOptions {
    std::size_t window_len = 400;
    std::size_t stride = 400;
    /// nullopt stores raw values.
    std::optional<ScalingOptions> scaling = ScalingOptions{};
};

class RetrievalDatabase {
public:
    explicit RetrievalDatabase(EntryKind kind = EntryKind::Normal) : kind_(kind) {}

    EntryKind kind() const noexcept { return kind_; }
    const std::vector<ReferenceEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    void add(ReferenceEntry e) {
        if (e.kind != kind_)
            throw InvalidArgument("entry '" + e.key + "' is " + to_string(e.kind) + " but the database holds " +
                                  to_string(kind_) + " entries");
        if (!keys_.insert(e.key).second) throw InvalidArgument("duplicate entry key '" + e.key + "'");
        entries_.push_back(std::move(e));
    }

private:
    EntryKind kind_;
    std::vector<ReferenceEntry> entries_;
    std::unordered_set<std::string> keys_;
};

struct DatabasePair {
    RetrievalDatabase normal{EntryKind::Normal};
    RetrievalDatabase anomalous{EntryKind::Anomalous};
    DatabaseOptions options;
};

inline std::vector<double> to_doubles(std::span<const std::int64_t> ints) {
    return {ints.begin(), ints.end()};
}

/// Windows every training series and routes each window by its labels: any
/// positive label sends it to the anomalous store, otherwise to the normal
/// store. Callers pass one source dataset; the anomalous side pools every
/// subset contained in it.
inline DatabasePair build_databases(const std::vector<LabeledSeries>& train, const DatabaseOptions& opt = {}) {
    if (train.empty()) throw InvalidArgument("cannot build databases from an empty training set");
    DatabasePair dbs;
    dbs.options = opt;
    for (const auto& s : train) {
        for (auto& w : windowize(s, opt.window_len, opt.stride)) {
            std::vector<double> values =
                opt.scaling ? to_doubles(rescale(w, opt.scaling->alpha, opt.scaling->beta,
                                                 opt.scaling->scale_constant)
                                             .ints)
                            : w.values;
            ReferenceEntry e(w.source_id + "@" + std::to_string(w.start), std::move(values),
                             std::move(*w.labels));
            if (e.kind == EntryKind::Anomalous)
                dbs.anomalous.add(std::move(e));
            else
                dbs.normal.add(std::move(e));
        }
    }
    return dbs;
}

inline DatabasePair build_databases(const std::vector<LabeledSeries>& train, std::size_t window_len,
                                    std::size_t stride) {
    return build_databases(train, DatabaseOptions{window_len, stride, ScalingOptions{}});
}

struct RetrievalHit {
    const ReferenceEntry* entry;
    DistanceResult distance;
};

/// The k entries closest to `query` under FastDTW, ascending by distance, ties
/// in insertion order.
inline std::vector<RetrievalHit> retrieve(const RetrievalDatabase& db, std::span<const double> query,
                                          std::size_t k, const FastDtwOptions& opt) {
    if (k == 0 || db.empty()) return {};
    std::vector<RetrievalHit> hits;
    hits.reserve(db.size());
    for (const auto& e : db.entries()) hits.push_back({&e, fastdtw(query, e.values, opt)});
    std::stable_sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
        return a.distance.distance < b.distance.distance;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

inline std::vector<RetrievalHit> retrieve(const RetrievalDatabase& db, std::span<const double> query,
                                          std::size_t k, std::size_t radius = 1) {
    return retrieve(db, query, k, FastDtwOptions{radius, 32});
}

// -----------------------------------------------------------------------------
// Persistence: <dir>/index.tsv (key, kind, relative path per line),
// <dir>/preprocessing.json, and one text file per entry holding one value per
// line with anomalous values wrapped as *v*.

namespace detail {

inline std::string format_value(double v) {
    if (std::abs(v) < 9e15 && v == std::floor(v)) return std::to_string(static_cast<long long>(v));
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline void write_entry_file(const std::filesystem::path& file, const ReferenceEntry& e) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write '" + file.string() + "'");
    for (std::size_t i = 0; i < e.values.size(); ++i) {
        const std::string v = detail::format_value(e.values[i]);
        out << (e.labels[i] ? "*" + v + "*" : v) << '\n';
    }
    if (!out) throw DataError("failed writing '" + file.string() + "'");
}

inline ReferenceEntry read_entry_file(const std::filesystem::path& file, const std::string& key) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot read entry file '" + file.string() + "'");
    std::vector<double> values;
    std::vector<Label> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        Label y = 0;
        if (line.size() >= 2 && line.front() == '*' && line.back() == '*') {
            line = line.substr(1, line.size() - 2);
            y = 1;
        }
        double v = 0;
        if (!detail::parse_double(line, v))
            throw DataError("'" + file.string() + "' line " + std::to_string(lineno) + ": bad value");
        values.push_back(v);
        labels.push_back(y);
    }
    if (values.empty()) throw DataError("entry file '" + file.string() + "' is empty");
    return ReferenceEntry(key, std::move(values), std::move(labels));
}

inline nlohmann::json to_json(const DatabaseOptions& o) {
    nlohmann::json j{{"window_len", o.window_len}, {"stride", o.stride}, {"rescaled", o.scaling.has_value()}};
    if (o.scaling) {
        j["alpha"] = o.scaling->alpha;
        j["beta"] = o.scaling->beta;
        j["scale_constant"] = o.scaling->scale_constant;
    }
    return j;
}

inline DatabaseOptions database_options_from_json(const nlohmann::json& j) {
    DatabaseOptions o;
    o.window_len = j.at("window_len").get<std::size_t>();
    o.stride = j.at("stride").get<std::size_t>();
    if (j.at("rescaled").get<bool>())
        o.scaling = ScalingOptions{j.at("alpha").get<double>(), j.at("beta").get<double>(),
                                   j.at("scale_constant").get<std::int64_t>()};
    else
        o.scaling.reset();
    return o;
}

inline void save_databases(const DatabasePair& dbs, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir / "normal", ec);
    fs::create_directories(dir / "anomalous", ec);
    if (ec) throw DataError("cannot create database directory '" + dir.string() + "': " + ec.message());

    std::ofstream index(dir / "index.tsv");
    if (!index) throw DataError("cannot write index in '" + dir.string() + "'");
    auto dump = [&](const RetrievalDatabase& db) {
        std::size_t i = 0;
        for (const auto& e : db.entries()) {
            if (e.key.find_first_of("\t\n") != std::string::npos)
                throw InvalidArgument("entry key '" + e.key + "' contains a tab or newline");
            char name[32];
            std::snprintf(name, sizeof name, "%06zu.txt", i++);
            const std::string rel = to_string(db.kind()) + "/" + name;
            write_entry_file(dir / rel, e);
            index << e.key << '\t' << to_string(e.kind) << '\t' << rel << '\n';
        }
    };
    dump(dbs.normal);
    dump(dbs.anomalous);

    std::ofstream pre(dir / "preprocessing.json");
    pre << to_json(dbs.options).dump(2) << '\n';
    if (!index || !pre) throw DataError("failed writing database files in '" + dir.string() + "'");
}

inline DatabasePair load_databases(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw DataError("database directory '" + dir.string() + "' does not exist");
    std::ifstream index(dir / "index.tsv");
    if (!index) throw DataError("missing index.tsv in '" + dir.string() + "'");

    DatabasePair dbs;
    std::ifstream pre(dir / "preprocessing.json");
    if (pre) {
        try {
            dbs.options = database_options_from_json(nlohmann::json::parse(pre));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("bad preprocessing.json in '" + dir.string() + "': " + e.what());
        }
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(index, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key, kind, rel;
        if (!std::getline(ls, key, '\t') || !std::getline(ls, kind, '\t') || !std::getline(ls, rel))
            throw DataError("index.tsv line " + std::to_string(lineno) + " is malformed");
        auto e = read_entry_file(dir / rel, key);
        if (e.kind != parse_entry_kind(kind))
            throw DataError("entry '" + key + "' is recorded as " + kind + " but its labels say otherwise");
        (e.kind == EntryKind::Normal ? dbs.normal : dbs.anomalous).add(std::move(e));
    }
    return dbs;
}

} // namespace llmad
