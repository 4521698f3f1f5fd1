#include "shmssl/config.hpp"

#include "shmssl/error.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace shmssl {

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

}  // namespace

KeyValues parse_key_values(std::string_view text, const std::string& source) {
    KeyValues out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string line = trim(text.substr(pos, end - pos));
        ++line_no;
        pos = end + 1;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key=value");
        }
        std::string key = trim(std::string_view(line).substr(0, eq));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
        out[std::move(key)] = trim(std::string_view(line).substr(eq + 1));
    }
    return out;
}

KeyValues load_key_values(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_key_values(ss.str(), path.string());
}

KeyValues env_overrides(std::string_view prefix, std::span<const std::string> keys) {
    KeyValues out;
    for (const auto& key : keys) {
        std::string name(prefix);
        for (char c : key) name += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (const char* v = std::getenv(name.c_str())) out[key] = trim(v);
    }
    return out;
}

void merge_into(KeyValues& base, const KeyValues& layer) {
    for (const auto& [k, v] : layer) base[k] = v;
}

double parse_real(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size()) {
        throw ConfigError("'" + key + "' expects a number, got '" + value + "'");
    }
    return v;
}

long long parse_integer(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const long long v = std::strtoll(value.c_str(), &end, 10);
    if (value.empty() || end != value.c_str() + value.size()) {
        throw ConfigError("'" + key + "' expects an integer, got '" + value + "'");
    }
    return v;
}

bool parse_flag(const std::string& key, const std::string& value) {
    std::string v = value;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + value + "'");
}

}  // namespace shmssl
