#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmad/error.hpp"

namespace llmad {

inline constexpr const char* kRunManifestName = "run_manifest.json";

/// What a command did, with enough detail to repeat it. One per run directory.
struct RunManifest {
    std::string command; // ingest | detect
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::string dataset;
    std::string format;
    std::string split; // detect: test | all
    std::string db;
    std::string backend;
    std::string out_dir;
    std::string started_at;
    std::string finished_at;
    std::string status = "complete";
    std::vector<std::string> outputs;
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

inline std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now()) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::ordered_json to_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["command"] = m.command;
    j["config"] = m.config;
    j["dataset"] = m.dataset;
    j["format"] = m.format;
    j["split"] = m.split;
    j["db"] = m.db;
    j["backend"] = m.backend;
    j["out_dir"] = m.out_dir;
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
    j["status"] = m.status;
    j["outputs"] = m.outputs;
    j["extra"] = m.extra;
    return j;
}

inline RunManifest run_manifest_from_json(const nlohmann::ordered_json& j) {
    RunManifest m;
    try {
        m.command = j.at("command").get<std::string>();
        m.config = j.at("config");
        m.dataset = j.at("dataset").get<std::string>();
        m.format = j.at("format").get<std::string>();
        m.split = j.value("split", "");
        m.db = j.value("db", "");
        m.backend = j.value("backend", "");
        m.out_dir = j.value("out_dir", "");
        m.started_at = j.value("started_at", "");
        m.finished_at = j.value("finished_at", "");
        m.status = j.value("status", "complete");
        m.outputs = j.value("outputs", std::vector<std::string>{});
        m.extra = j.value("extra", nlohmann::ordered_json::object());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("run manifest: ") + e.what());
    }
    return m;
}

inline void write_run_manifest(const std::filesystem::path& dir, const RunManifest& m) {
    std::ofstream out(dir / kRunManifestName);
    if (!out) throw DataError("cannot write run manifest in '" + dir.string() + "'");
    out << to_json(m).dump(2) << '\n';
}

inline RunManifest read_run_manifest(const std::filesystem::path& dir) {
    const auto file = dir / kRunManifestName;
    std::ifstream in(file);
    if (!in) throw DataError("no " + std::string(kRunManifestName) + " in '" + dir.string() + "'");
    try {
        return run_manifest_from_json(nlohmann::ordered_json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError("'" + file.string() + "' is not valid JSON: " + e.what());
    }
}

} // namespace llmad
