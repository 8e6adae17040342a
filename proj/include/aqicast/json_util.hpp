#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "aqicast/error.hpp"

namespace aqicast {

/// Non-negative integer from JSON. nlohmann converts -1 to a huge size_t
/// without complaint, so signed and fractional values are rejected here.
inline std::uint64_t json_count(const nlohmann::json& value, const std::string& what) {
  if (value.is_number_unsigned()) return value.get<std::uint64_t>();
  if (value.is_number_integer() && value.get<std::int64_t>() >= 0) return value.get<std::uint64_t>();
  throw ConfigError(what + " must be a non-negative integer, got " + value.dump());
}

}  // namespace aqicast
