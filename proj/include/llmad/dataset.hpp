#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "llmad/error.hpp"
#include "llmad/timeseries.hpp"

namespace llmad {

enum class DatasetFormat { Kpi, Yahoo, Wsd, Generic };

inline DatasetFormat parse_dataset_format(std::string_view tag) {
    if (tag == "kpi-csv") return DatasetFormat::Kpi;
    if (tag == "yahoo-csv") return DatasetFormat::Yahoo;
    if (tag == "wsd-csv") return DatasetFormat::Wsd;
    if (tag == "generic-csv") return DatasetFormat::Generic;
    throw InvalidArgument("unknown dataset format '" + std::string(tag) +
                          "' (expected one of: kpi-csv, yahoo-csv, wsd-csv, generic-csv)");
}

inline std::string to_string(DatasetFormat f) {
    switch (f) {
    case DatasetFormat::Kpi: return "kpi-csv";
    case DatasetFormat::Yahoo: return "yahoo-csv";
    case DatasetFormat::Wsd: return "wsd-csv";
    case DatasetFormat::Generic: return "generic-csv";
    }
    return "generic-csv";
}

/// Fraction of each series held out for testing, per source benchmark.
inline double default_test_fraction(DatasetFormat f) {
    return f == DatasetFormat::Yahoo ? 0.5 : (f == DatasetFormat::Generic ? 0.5 : 0.05);
}

struct DatasetStats {
    std::size_t series = 0;
    std::size_t points = 0;
    std::size_t anomalies = 0;
    double anomaly_ratio() const {
        return points == 0 ? 0.0 : static_cast<double>(anomalies) / static_cast<double>(points);
    }
};

inline DatasetStats summarize(const std::vector<LabeledSeries>& ds) {
    DatasetStats st;
    st.series = ds.size();
    for (const auto& s : ds) {
        st.points += s.size();
        st.anomalies += s.anomaly_count();
    }
    return st;
}

namespace detail {

// Column-name aliases that each benchmark layout uses.
struct CsvLayout {
    std::vector<std::string> timestamp;
    std::vector<std::string> value;
    std::vector<std::string> label;
    std::vector<std::string> group; // optional series-id column (KPI ships many series per file)
};

inline CsvLayout layout_for(DatasetFormat f) {
    switch (f) {
    case DatasetFormat::Kpi:
        return {{"timestamp"}, {"value"}, {"label"}, {"KPI ID", "kpi_id", "KPI_ID"}};
    case DatasetFormat::Yahoo:
        return {{"timestamp", "timestamps"}, {"value"}, {"is_anomaly", "anomaly", "label"}, {}};
    case DatasetFormat::Wsd:
        return {{"timestamp"}, {"value"}, {"label"}, {}};
    case DatasetFormat::Generic:
        break;
    }
    return {{"timestamp"}, {"value"}, {"label"}, {}};
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (*b == '+') ++b;
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e && std::isfinite(out);
}

inline int find_column(const std::vector<std::string>& header, const std::vector<std::string>& names) {
    for (const auto& n : names)
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == n) return static_cast<int>(i);
    return -1;
}

inline std::string join_rows(const std::vector<std::size_t>& rows) {
    std::string s;
    const std::size_t shown = std::min<std::size_t>(rows.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) {
        if (i) s += ", ";
        s += std::to_string(rows[i]);
    }
    if (rows.size() > shown) s += ", ... (" + std::to_string(rows.size()) + " total)";
    return s;
}

struct Row {
    double timestamp;
    double value;
    Label label;
    std::size_t line;
};

inline std::int64_t infer_interval(const std::vector<Row>& rows) {
    std::map<std::int64_t, std::size_t> freq;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto d = static_cast<std::int64_t>(std::llround(rows[i].timestamp - rows[i - 1].timestamp));
        if (d > 0) ++freq[d];
    }
    if (freq.empty()) return 60;
    return std::max_element(freq.begin(), freq.end(),
                            [](const auto& a, const auto& b) { return a.second < b.second; })
        ->first;
}

inline std::vector<LabeledSeries> load_csv_file(const std::filesystem::path& file,
                                                const std::string& base_id, DatasetFormat fmt) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot read '" + file.string() + "'");
    const CsvLayout layout = layout_for(fmt);

    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++lineno;
        if (!trim(line).empty()) {
            header = split_csv_line(line);
            break;
        }
    }
    if (header.empty()) throw DataError("'" + file.string() + "' is empty");
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

    const int ts_col = find_column(header, layout.timestamp);
    const int val_col = find_column(header, layout.value);
    const int lab_col = find_column(header, layout.label);
    const int grp_col = layout.group.empty() ? -1 : find_column(header, layout.group);
    if (ts_col < 0 || val_col < 0 || lab_col < 0)
        throw DataError("'" + file.string() + "': header must name timestamp, value and label columns (" +
                        to_string(fmt) + ")");

    std::map<std::string, std::vector<Row>> groups;
    std::vector<std::string> group_order;
    std::vector<std::size_t> bad_ts, bad_value, bad_label;
    const auto need = static_cast<std::size_t>(std::max({ts_col, val_col, lab_col, grp_col})) + 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() < need) cells.resize(need);
        Row r{0, 0, 0, lineno};
        if (!parse_double(cells[ts_col], r.timestamp)) bad_ts.push_back(lineno);
        if (!parse_double(cells[val_col], r.value)) bad_value.push_back(lineno);
        double lab = 0;
        if (!parse_double(cells[lab_col], lab) || (lab != 0.0 && lab != 1.0))
            bad_label.push_back(lineno);
        else
            r.label = static_cast<Label>(lab);
        const std::string g = grp_col >= 0 ? cells[grp_col] : std::string();
        auto [it, inserted] = groups.try_emplace(g);
        if (inserted) group_order.push_back(g);
        it->second.push_back(r);
    }
    const std::string where = "'" + file.string() + "'";
    if (!bad_label.empty())
        throw DataError(where + ": non-binary label value at rows " + join_rows(bad_label));
    if (!bad_ts.empty())
        throw DataError(where + ": missing or unparseable timestamp at rows " + join_rows(bad_ts));
    if (!bad_value.empty())
        throw DataError(where + ": missing or non-finite value at rows " + join_rows(bad_value));
    if (groups.empty()) throw DataError(where + " has a header but no data rows");

    std::vector<LabeledSeries> out;
    for (const auto& g : group_order) {
        auto& rows = groups[g];
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.timestamp < b.timestamp; });
        std::vector<std::size_t> dup;
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (rows[i].timestamp == rows[i - 1].timestamp) dup.push_back(rows[i].line);
        if (!dup.empty())
            throw DataError(where + ": duplicate timestamp at rows " + join_rows(dup));
        std::vector<double> values;
        std::vector<Label> labels;
        values.reserve(rows.size());
        labels.reserve(rows.size());
        for (const auto& r : rows) {
            values.push_back(r.value);
            labels.push_back(r.label);
        }
        const std::string id = g.empty() ? base_id : base_id + "#" + g;
        out.emplace_back(TimeSeries(id, std::move(values), infer_interval(rows)), std::move(labels));
    }
    return out;
}

} // namespace detail

/// Loads one CSV file or every *.csv under a directory (recursively, sorted by
/// path). Each benchmark layout is normalized to (timestamp, value, label);
/// series ids are the file path relative to the dataset root, without extension.
inline std::vector<LabeledSeries> load_dataset(const std::filesystem::path& path, DatasetFormat fmt) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::exists(path, ec)) throw DataError("dataset path '" + path.string() + "' does not exist");

    std::vector<LabeledSeries> out;
    if (fs::is_regular_file(path)) {
        return detail::load_csv_file(path, path.stem().string(), fmt);
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path))
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .csv files under '" + path.string() + "'");
    for (const auto& f : files) {
        auto rel = fs::relative(f, path).replace_extension("").generic_string();
        auto part = detail::load_csv_file(f, rel, fmt);
        for (auto& s : part) out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<LabeledSeries> load_dataset(const std::filesystem::path& path, std::string_view format) {
    return load_dataset(path, parse_dataset_format(format));
}

/// Writes `timestamp,value,label` with synthetic timestamps start + i*interval.
inline void write_generic_csv(const std::filesystem::path& file, const LabeledSeries& s,
                              std::int64_t start_timestamp = 0) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write '" + file.string() + "'");
    out << "timestamp,value,label\n";
    out.precision(17);
    for (std::size_t i = 0; i < s.size(); ++i)
        out << start_timestamp + static_cast<std::int64_t>(i) * s.series.interval_seconds << ','
            << s.series.values[i] << ',' << int(s.labels[i]) << '\n';
}

} // namespace llmad
