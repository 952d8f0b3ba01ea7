#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kou2d/kou_model.hpp"

namespace kou2d {

/// Flat TOML-compatible key/value file.
///
/// Accepted lines: `key = value`, `# comment`, blank lines and `[section]`
/// headers (sections only group keys visually; names are not prefixed).
/// Values are bare numbers, quoted strings, or `[a, b, c]` number lists.
class ConfigFile {
public:
    static ConfigFile parse(const std::string& text);
    static ConfigFile load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<double> number(const std::string& key) const;
    std::optional<std::string> string(const std::string& key) const;
    std::optional<std::vector<double>> list(const std::string& key) const;

    const std::map<std::string, std::string>& raw() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Reads the kou_model keys, falling back to the defaults for absent keys.
KouParams params_from_config(const ConfigFile& cfg);

}  // namespace kou2d
