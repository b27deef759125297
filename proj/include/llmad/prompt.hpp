#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmad/builtin_templates.hpp"
#include "llmad/error.hpp"
#include "llmad/taxonomy.hpp"
#include "llmad/timeseries.hpp"

namespace llmad {

enum class TemplateVariant { Wsd, Kpi, YahooSynthetic, YahooReal };

inline constexpr std::array<TemplateVariant, 4> kAllVariants = {TemplateVariant::Wsd, TemplateVariant::Kpi,
                                                                TemplateVariant::YahooSynthetic,
                                                                TemplateVariant::YahooReal};

inline std::string to_string(TemplateVariant v) {
    switch (v) {
    case TemplateVariant::Wsd: return "wsd";
    case TemplateVariant::Kpi: return "kpi";
    case TemplateVariant::YahooSynthetic: return "yahoo-synthetic";
    case TemplateVariant::YahooReal: return "yahoo-real";
    }
    return "";
}

inline TemplateVariant parse_template_variant(std::string_view s) {
    for (auto v : kAllVariants)
        if (to_string(v) == s) return v;
    throw InvalidArgument("unknown template variant '" + std::string(s) +
                          "' (expected wsd, kpi, yahoo-synthetic or yahoo-real)");
}

/// File name of the variant's text asset.
inline std::string asset_name(TemplateVariant v) {
    std::string s = to_string(v);
    std::replace(s.begin(), s.end(), '-', '_');
    return s + ".txt";
}

/// briefExplanation keys the variant's response format asks for.
inline std::vector<std::string> step_names(TemplateVariant v) {
    // the Yahoo synthetic response format spells the second key "step2_reasses"
    if (v == TemplateVariant::YahooSynthetic) return {"step1_local", "step2_reasses"};
    return {"step1_global", "step2_local", "step3_reassess"};
}

inline constexpr std::array<std::string_view, 4> kPlaceholders = {"{normal_data}", "{anomaly_data}",
                                                                  "{data_len}", "{data}"};

inline constexpr std::string_view kEmptyIcl = "(none)";
inline constexpr std::string_view kIclSeparator = "\n\n";

namespace detail {

inline std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string_view::npos; p = hay.find(needle, p + needle.size())) ++n;
    return n;
}

/// Length of a `{lowercase_identifier}` token at `pos`, or 0.
inline std::size_t placeholder_len(std::string_view s, std::size_t pos) {
    if (s[pos] != '{') return 0;
    std::size_t i = pos + 1;
    while (i < s.size() && (std::islower(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
    if (i == pos + 1 || i >= s.size() || s[i] != '}') return 0;
    return i - pos + 1;
}

} // namespace detail

class PromptTemplate {
public:
    PromptTemplate(TemplateVariant variant, std::string body) : variant_(variant), body_(std::move(body)) {
        for (auto ph : kPlaceholders)
            if (detail::count_occurrences(body_, ph) != 1)
                throw InvalidArgument(to_string(variant_) + " template must contain " + std::string(ph) +
                                      " exactly once");
        if (variant_ == TemplateVariant::YahooSynthetic && body_.find("two-step") == std::string::npos)
            throw InvalidArgument("yahoo-synthetic template must carry the two-step analysis instruction");
    }

    TemplateVariant variant() const noexcept { return variant_; }
    const std::string& body() const noexcept { return body_; }

private:
    TemplateVariant variant_;
    std::string body_;
};

inline std::string_view builtin_template_text(TemplateVariant v) {
    switch (v) {
    case TemplateVariant::Wsd: return assets::kTemplateWsd;
    case TemplateVariant::Kpi: return assets::kTemplateKpi;
    case TemplateVariant::YahooSynthetic: return assets::kTemplateYahooSynthetic;
    case TemplateVariant::YahooReal: return assets::kTemplateYahooReal;
    }
    return {};
}

/// Drops a single trailing newline so that assets saved by ordinary editors
/// render identically to the shipped ones.
inline std::string normalize_template_text(std::string_view text) {
    std::string s(text);
    if (!s.empty() && s.back() == '\n') s.pop_back();
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

inline PromptTemplate builtin_template(TemplateVariant v) {
    return PromptTemplate(v, normalize_template_text(builtin_template_text(v)));
}

inline PromptTemplate load_template(const std::filesystem::path& dir, TemplateVariant v) {
    const auto file = dir / asset_name(v);
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot read template '" + file.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return PromptTemplate(v, normalize_template_text(ss.str()));
}

inline TemplateVariant select_variant(std::string_view dataset, std::string_view subset = {}) {
    if (dataset == "wsd") return TemplateVariant::Wsd;
    if (dataset == "kpi") return TemplateVariant::Kpi;
    if (dataset == "yahoo") {
        // A3/A4 and the synthetic subsets carry mostly local point anomalies
        if (subset.find("A3Benchmark") != std::string_view::npos ||
            subset.find("A4Benchmark") != std::string_view::npos ||
            subset.find("synthetic") != std::string_view::npos)
            return TemplateVariant::YahooSynthetic;
        return TemplateVariant::YahooReal;
    }
    throw InvalidArgument("unknown dataset '" + std::string(dataset) + "' (valid: wsd, kpi, yahoo)");
}

inline PromptTemplate select_template(std::string_view dataset, std::string_view subset = {}) {
    return builtin_template(select_variant(dataset, subset));
}

// -----------------------------------------------------------------------------
// In-context examples

struct IclExample {
    bool anomalous = false;
    std::string rendered;
};

/// Space-separated values with label-1 positions wrapped as *v*.
inline IclExample mark_anomalies(std::span<const std::int64_t> ints, std::span<const Label> labels) {
    if (ints.size() != labels.size())
        throw InvalidArgument("mark_anomalies: " + std::to_string(ints.size()) + " values but " +
                              std::to_string(labels.size()) + " labels");
    IclExample ex;
    for (std::size_t i = 0; i < ints.size(); ++i) {
        if (i) ex.rendered += ' ';
        const std::string v = std::to_string(ints[i]);
        if (labels[i]) {
            ex.anomalous = true;
            ex.rendered += '*' + v + '*';
        } else {
            ex.rendered += v;
        }
    }
    return ex;
}

inline IclExample mark_anomalies(const ScaledWindow& sw, std::span<const Label> labels) {
    return mark_anomalies(std::span<const std::int64_t>(sw.ints), labels);
}

/// Inverse of mark_anomalies.
inline std::pair<std::vector<std::int64_t>, std::vector<Label>> unmark_anomalies(std::string_view rendered) {
    std::pair<std::vector<std::int64_t>, std::vector<Label>> out;
    std::istringstream in{std::string(rendered)};
    std::string tok;
    while (in >> tok) {
        Label y = 0;
        if (tok.size() >= 2 && tok.front() == '*' && tok.back() == '*') {
            tok = tok.substr(1, tok.size() - 2);
            y = 1;
        }
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size() || tok.empty()) throw InvalidArgument("bad ICL token '" + tok + "'");
        out.first.push_back(v);
        out.second.push_back(y);
    }
    return out;
}

// -----------------------------------------------------------------------------
// Rendering

struct PromptBundle {
    TemplateVariant variant = TemplateVariant::Wsd;
    std::string rendered;
    std::vector<IclExample> icl_normals;
    std::vector<IclExample> icl_anomalies;
    ScaledWindow query;
    std::size_t query_len = 0;
};

inline std::string join_examples(const std::vector<IclExample>& xs) {
    if (xs.empty()) return std::string(kEmptyIcl);
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += kIclSeparator;
        out += xs[i].rendered;
    }
    return out;
}

/// Single pass over the template body: substituted text is never rescanned, and
/// any other `{identifier}` left in the body marks a corrupt template.
inline PromptBundle render_prompt(const PromptTemplate& t, std::vector<IclExample> normals,
                                  std::vector<IclExample> anomalies, const ScaledWindow& query) {
    if (query.ints.empty()) throw InvalidArgument("render_prompt: query window is empty");
    const std::string normal_text = join_examples(normals);
    const std::string anomaly_text = join_examples(anomalies);
    const std::string len_text = std::to_string(query.size());
    const std::string data_text = format_indexed(query);

    const std::string_view body = t.body();
    std::string out;
    out.reserve(body.size() + normal_text.size() + anomaly_text.size() + data_text.size());
    for (std::size_t i = 0; i < body.size();) {
        const std::size_t len = detail::placeholder_len(body, i);
        if (len == 0) {
            out += body[i++];
            continue;
        }
        const std::string_view ph = body.substr(i, len);
        if (ph == "{normal_data}")
            out += normal_text;
        else if (ph == "{anomaly_data}")
            out += anomaly_text;
        else if (ph == "{data_len}")
            out += len_text;
        else if (ph == "{data}")
            out += data_text;
        else
            throw Error("template corrupt: unresolved placeholder " + std::string(ph));
        i += len;
    }

    PromptBundle b;
    b.variant = t.variant();
    b.rendered = std::move(out);
    b.icl_normals = std::move(normals);
    b.icl_anomalies = std::move(anomalies);
    b.query = query;
    b.query_len = query.size();
    return b;
}

// -----------------------------------------------------------------------------
// Domain knowledge: the rules, anomaly-type and alarm-level blocks of a template.

struct DomainKnowledge {
    std::vector<std::string> rules;
    std::vector<std::pair<AnomalyType, std::string>> type_defs;
    std::vector<std::pair<AlarmLevel, std::string>> alarm_defs;
};

namespace detail {

enum class RuleItemKind { Rule, Types, Alarms, Other };

struct RuleItem {
    RuleItemKind kind = RuleItemKind::Rule;
    std::string head;               // text after "N. "
    std::vector<std::string> lines; // continuation lines, verbatim
};

struct RuleSection {
    std::string before; // text up to and including the "##Following Rules" line
    std::vector<RuleItem> items;
    std::string after;  // from the "##Response Format" line on
};

inline bool starts_numbered(const std::string& line, std::string& rest) {
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i + 1 >= line.size() || line[i] != '.' || line[i + 1] != ' ') return false;
    rest = line.substr(i + 2);
    return true;
}

inline RuleSection split_rules(const std::string& body) {
    const auto rules_at = body.find("##Following Rules");
    const auto format_at = body.find("##Response Format");
    if (rules_at == std::string::npos || format_at == std::string::npos || format_at < rules_at)
        throw InvalidArgument("template has no Following Rules / Response Format sections");
    const auto rules_eol = body.find('\n', rules_at);
    RuleSection sec;
    sec.before = body.substr(0, rules_eol + 1);
    sec.after = body.substr(format_at);
    std::istringstream in(body.substr(rules_eol + 1, format_at - rules_eol - 1));
    std::string line;
    while (std::getline(in, line)) {
        std::string rest;
        if (starts_numbered(line, rest)) {
            RuleItem item;
            item.head = rest;
            if (rest.rfind("anomaly_type should be", 0) == 0)
                item.kind = RuleItemKind::Types;
            else if (rest.rfind("alarm_level should be", 0) == 0)
                item.kind = RuleItemKind::Alarms;
            else if (rest.rfind("The briefExplanation", 0) == 0 || rest.rfind("Provide responses", 0) == 0)
                item.kind = RuleItemKind::Other;
            sec.items.push_back(std::move(item));
        } else if (!sec.items.empty()) {
            sec.items.back().lines.push_back(line);
        }
    }
    return sec;
}

/// "  - Name: definition" or "  Name definition" (both layouts occur).
inline std::pair<std::string, std::string> split_definition(const std::string& line) {
    std::size_t i = line.find_first_not_of(' ');
    if (i == std::string::npos) return {};
    if (line.compare(i, 2, "- ") == 0) i += 2;
    std::size_t j = i;
    while (j < line.size() && line[j] != ':' && line[j] != ' ') ++j;
    std::string name = line.substr(i, j - i);
    if (j < line.size() && line[j] == ':') ++j;
    while (j < line.size() && line[j] == ' ') ++j;
    return {name, line.substr(j)};
}

} // namespace detail

inline DomainKnowledge extract_knowledge(const PromptTemplate& t) {
    DomainKnowledge k;
    for (const auto& item : detail::split_rules(t.body()).items) {
        switch (item.kind) {
        case detail::RuleItemKind::Rule:
            k.rules.push_back(item.head);
            break;
        case detail::RuleItemKind::Types:
            for (const auto& l : item.lines) {
                auto [name, def] = detail::split_definition(l);
                auto type = anomaly_type_from_string(name);
                if (!type) throw InvalidArgument("unknown anomaly type '" + name + "' in template");
                k.type_defs.emplace_back(*type, def);
            }
            break;
        case detail::RuleItemKind::Alarms:
            for (const auto& l : item.lines) {
                auto [name, def] = detail::split_definition(l);
                auto level = alarm_level_from_string(name);
                if (!level) throw InvalidArgument("unknown alarm level '" + name + "' in template");
                k.alarm_defs.emplace_back(*level, def);
            }
            break;
        case detail::RuleItemKind::Other:
            break;
        }
    }
    return k;
}

inline void validate_knowledge(const DomainKnowledge& k) {
    std::vector<AlarmLevel> seen;
    for (const auto& [level, def] : k.alarm_defs) {
        if (std::find(seen.begin(), seen.end(), level) != seen.end())
            throw InvalidArgument("alarm level '" + std::string(to_string(level)) + "' defined twice");
        seen.push_back(level);
    }
    if (seen.size() != kAllAlarmLevels.size())
        throw InvalidArgument("domain knowledge must define exactly the three alarm levels");
    std::vector<AnomalyType> types;
    for (const auto& [type, def] : k.type_defs) {
        if (std::find(types.begin(), types.end(), type) != types.end())
            throw InvalidArgument("anomaly type '" + std::string(to_string(type)) + "' defined twice");
        types.push_back(type);
    }
    if (types.empty()) throw InvalidArgument("domain knowledge must define at least one anomaly type");
}

/// Rewrites the rules section from `k`: rules first, then the type and alarm
/// lists, then the template's own explanation and output-format items, all
/// renumbered from 1. Sections equal to the template's own keep their original
/// lines, and knowledge identical to the template's returns it unchanged.
inline PromptTemplate apply_knowledge(const PromptTemplate& t, const DomainKnowledge& k) {
    validate_knowledge(k);
    const DomainKnowledge own = extract_knowledge(t);
    const bool same_rules = k.rules == own.rules;
    const bool same_types = k.type_defs == own.type_defs;
    const bool same_alarms = k.alarm_defs == own.alarm_defs;
    if (same_rules && same_types && same_alarms) return t;
    auto sec = detail::split_rules(t.body());
    std::string types_head = "anomaly_type should be one of the following:";
    std::string alarms_head = "alarm_level should be one of the following:";
    std::vector<detail::RuleItem> rules, others;
    std::vector<std::string> type_lines, alarm_lines;
    for (auto& item : sec.items) {
        switch (item.kind) {
        case detail::RuleItemKind::Rule: rules.push_back(item); break;
        case detail::RuleItemKind::Types:
            types_head = item.head;
            type_lines = item.lines;
            break;
        case detail::RuleItemKind::Alarms:
            alarms_head = item.head;
            alarm_lines = item.lines;
            break;
        case detail::RuleItemKind::Other: others.push_back(item); break;
        }
    }
    std::string out = sec.before;
    int n = 0;
    auto numbered = [&](const std::string& head) { out += std::to_string(++n) + ". " + head + '\n'; };
    auto verbatim = [&](const std::vector<std::string>& lines) {
        for (const auto& l : lines) out += l + '\n';
    };
    if (same_rules) {
        for (const auto& item : rules) {
            numbered(item.head);
            verbatim(item.lines);
        }
    } else {
        for (const auto& r : k.rules) numbered(r);
    }
    numbered(types_head);
    if (same_types)
        verbatim(type_lines);
    else
        for (const auto& [type, def] : k.type_defs) out += "  - " + std::string(to_string(type)) + ": " + def + '\n';
    numbered(alarms_head);
    if (same_alarms)
        verbatim(alarm_lines);
    else
        for (const auto& [level, def] : k.alarm_defs) out += "  - " + std::string(to_string(level)) + ": " + def + '\n';
    for (const auto& item : others) {
        numbered(item.head);
        verbatim(item.lines);
    }
    out += sec.after;
    return PromptTemplate(t.variant(), std::move(out));
}

/// Reads a knowledge override file. Either a flat object with any of "rules",
/// "anomaly_types", "alarm_levels", or an object keyed by template variant
/// ("wsd", "kpi", "yahoo-synthetic", "yahoo-real") holding such objects.
/// Sections absent from the file keep the template's own text.
inline DomainKnowledge load_knowledge_override(const std::filesystem::path& file, const PromptTemplate& t) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot read knowledge file '" + file.string() + "'");
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("knowledge file '" + file.string() + "' is not valid JSON: " + e.what());
    }
    if (j.contains(to_string(t.variant()))) j = j[to_string(t.variant())];
    DomainKnowledge k = extract_knowledge(t);
    try {
        if (j.contains("rules")) k.rules = j["rules"].get<std::vector<std::string>>();
        if (j.contains("anomaly_types")) {
            k.type_defs.clear();
            for (auto& [name, def] : j["anomaly_types"].items()) {
                auto type = anomaly_type_from_string(name);
                if (!type) throw DataError("knowledge file: unknown anomaly type '" + name + "'");
                k.type_defs.emplace_back(*type, def.get<std::string>());
            }
        }
        if (j.contains("alarm_levels")) {
            k.alarm_defs.clear();
            for (auto& [name, def] : j["alarm_levels"].items()) {
                auto level = alarm_level_from_string(name);
                if (!level) throw DataError("knowledge file: unknown alarm level '" + name + "'");
                k.alarm_defs.emplace_back(*level, def.get<std::string>());
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("knowledge file '" + file.string() + "': " + e.what());
    }
    return k;
}

} // namespace llmad
