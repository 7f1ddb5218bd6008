#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace bcdp {

struct ConfigEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

/// Flat key=value text. Blank lines and lines starting with '#' are ignored;
/// whitespace around keys and values is trimmed.
std::vector<ConfigEntry> parse_config_text(const std::string& text);
std::vector<ConfigEntry> load_config_file(const std::string& path);

/// Appends "--key=value" for every entry whose flag does not already appear in `args`,
/// so explicit flags take precedence over the file.
std::vector<std::string> merge_config_args(const std::vector<std::string>& args,
                                           const std::vector<ConfigEntry>& entries);

} // namespace bcdp
