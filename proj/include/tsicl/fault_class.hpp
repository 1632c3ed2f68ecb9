#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace tsicl {

/// Bearing health state. Integer codes are the class labels used in every
/// file format and report (1-based).
enum class FaultClass : int {
    Normal = 1,
    OuterRing = 2,
    SandBearing = 3,
    InnerRing = 4,
};

inline constexpr std::size_t kNumClasses = 4;

/// Largest number of channels (covariates plus targets) the encoder accepts.
inline constexpr std::size_t kMaxVariates = 64;

inline constexpr std::array<FaultClass, kNumClasses> kAllClasses = {
    FaultClass::Normal, FaultClass::OuterRing, FaultClass::SandBearing, FaultClass::InnerRing};

constexpr int class_code(FaultClass c) { return static_cast<int>(c); }

/// 0-based position, e.g. for indexing target rows.
constexpr std::size_t class_index(FaultClass c) { return static_cast<std::size_t>(class_code(c) - 1); }

constexpr FaultClass class_from_index(std::size_t i) { return static_cast<FaultClass>(static_cast<int>(i) + 1); }

constexpr std::optional<FaultClass> class_from_code(int code) {
    if (code < 1 || code > static_cast<int>(kNumClasses)) return std::nullopt;
    return static_cast<FaultClass>(code);
}

constexpr std::string_view class_name(FaultClass c) {
    switch (c) {
    case FaultClass::Normal: return "1_Normal";
    case FaultClass::OuterRing: return "2_OuterRing";
    case FaultClass::SandBearing: return "3_SandBearing";
    case FaultClass::InnerRing: return "4_InnerRing";
    }
    return "?";
}

} // namespace tsicl
