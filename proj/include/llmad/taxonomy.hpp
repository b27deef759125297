#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace llmad {

enum class AnomalyType {
    PersistentLevelShiftUp,
    PersistentLevelShiftDown,
    TransientLevelShiftUp,
    TransientLevelShiftDown,
    SingleSpike,
    SingleDip,
    MultipleSpikes,
    MultipleDips,
};

inline constexpr std::array<AnomalyType, 8> kAllAnomalyTypes = {
    AnomalyType::PersistentLevelShiftUp, AnomalyType::PersistentLevelShiftDown,
    AnomalyType::TransientLevelShiftUp,  AnomalyType::TransientLevelShiftDown,
    AnomalyType::SingleSpike,            AnomalyType::SingleDip,
    AnomalyType::MultipleSpikes,         AnomalyType::MultipleDips,
};

inline constexpr std::string_view to_string(AnomalyType t) {
    switch (t) {
    case AnomalyType::PersistentLevelShiftUp: return "PersistentLevelShiftUp";
    case AnomalyType::PersistentLevelShiftDown: return "PersistentLevelShiftDown";
    case AnomalyType::TransientLevelShiftUp: return "TransientLevelShiftUp";
    case AnomalyType::TransientLevelShiftDown: return "TransientLevelShiftDown";
    case AnomalyType::SingleSpike: return "SingleSpike";
    case AnomalyType::SingleDip: return "SingleDip";
    case AnomalyType::MultipleSpikes: return "MultipleSpikes";
    case AnomalyType::MultipleDips: return "MultipleDips";
    }
    return "";
}

inline std::optional<AnomalyType> anomaly_type_from_string(std::string_view s) {
    for (auto t : kAllAnomalyTypes)
        if (to_string(t) == s) return t;
    return std::nullopt;
}

enum class AlarmLevel { UrgentError, Important, Warning };

inline constexpr std::array<AlarmLevel, 3> kAllAlarmLevels = {AlarmLevel::UrgentError, AlarmLevel::Important,
                                                              AlarmLevel::Warning};

inline constexpr std::string_view to_string(AlarmLevel a) {
    switch (a) {
    case AlarmLevel::UrgentError: return "Urgent/Error";
    case AlarmLevel::Important: return "Important";
    case AlarmLevel::Warning: return "Warning";
    }
    return "";
}

inline std::optional<AlarmLevel> alarm_level_from_string(std::string_view s) {
    for (auto a : kAllAlarmLevels)
        if (to_string(a) == s) return a;
    return std::nullopt;
}

/// Sentinel the report uses for "no anomaly type / no alarm".
inline constexpr std::string_view kNone = "no";

} // namespace llmad
