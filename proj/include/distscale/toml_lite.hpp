#pragma once

#include <string>

#include <json.hpp>

namespace distscale {

/// Reads the TOML subset used by the config files into a JSON tree:
/// comments, bare/quoted/dotted keys, [tables], [[arrays of tables]],
/// basic and literal single-line strings, integers, floats, booleans,
/// (multi-line) arrays and inline tables. Dates and multi-line strings are
/// rejected. Throws Error(Parse) with the offending line number.
nlohmann::json parse_toml(const std::string& text);

}  // namespace distscale
