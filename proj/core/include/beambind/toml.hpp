#pragma once

#include <filesystem>
#include <string_view>

#include <nlohmann/json.hpp>

namespace bb::toml {

// Parses the TOML subset used by beambind config files into a JSON tree:
// tables and [[arrays of tables]] (nested section names with dots), basic
// strings, integers, floats, booleans, and (possibly multi-line) arrays.
// Datetimes, dotted keys, inline tables and literal strings are not
// supported. Throws bb::ConfigError with a line number on malformed input.
nlohmann::json parse(std::string_view text);

nlohmann::json parse_file(const std::filesystem::path& path);

}  // namespace bb::toml
