#pragma once

namespace dsmp {
inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kResultsSchemaVersion = 1;
}  // namespace dsmp
