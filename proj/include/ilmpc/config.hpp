#pragma once

#include <map>
#include <string>
#include <vector>

#include "ilmpc/servo.hpp"

namespace ilmpc {

/// Flat key-value configuration with `[section]` headers. Values are kept as
/// raw strings keyed by "section.key"; section order is preserved so learned
/// parameters keep their declaration order.
struct ConfigFile {
    std::vector<std::string> sections;           // in file order, deduplicated
    std::map<std::string, std::string> values;   // "section.key" -> raw value

    bool has(const std::string& key) const { return values.count(key) > 0; }
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    bool get_bool(const std::string& key) const;
};

/// Parses `key = value` lines under `[section]` headers; `#` starts a
/// comment; blank lines are ignored. Throws std::invalid_argument with the
/// line number on malformed input.
ConfigFile parse_config(const std::string& text);
ConfigFile load_config(const std::string& path);

/// Serializes a scenario into the config format; parsing the result with
/// scenario_from_config reproduces the scenario exactly (full-precision
/// numbers).
std::string serialize_scenario(const servo::Scenario& sc);
servo::Scenario scenario_from_config(const ConfigFile& cfg);

}  // namespace ilmpc
