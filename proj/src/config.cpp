#include "bcdp/config.hpp"

#include <fstream>
#include <sstream>

#include "bcdp/error.hpp"

namespace bcdp {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool flag_present(const std::vector<std::string>& args, const std::string& key) {
    const std::string flag = "--" + key;
    for (const auto& a : args)
        if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
}

} // namespace

std::vector<ConfigEntry> parse_config_text(const std::string& text) {
    std::vector<ConfigEntry> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected key=value");
        ConfigEntry e{trim(t.substr(0, eq)), trim(t.substr(eq + 1)), line_no};
        if (e.key.empty()) throw ParseError(line_no, "empty key");
        if (e.key.find_first_of(" \t") != std::string::npos) throw ParseError(line_no, "key contains whitespace");
        for (const auto& prev : out)
            if (prev.key == e.key) throw ParseError(line_no, "duplicate key '" + e.key + "'");
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<ConfigEntry> load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

std::vector<std::string> merge_config_args(const std::vector<std::string>& args,
                                           const std::vector<ConfigEntry>& entries) {
    std::vector<std::string> out = args;
    for (const auto& e : entries)
        if (!flag_present(args, e.key)) out.push_back("--" + e.key + "=" + e.value);
    return out;
}

} // namespace bcdp
