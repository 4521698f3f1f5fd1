#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace shmssl {

/// Flat key=value settings. Later layers override earlier ones.
using KeyValues = std::map<std::string, std::string>;

/// Parses `key = value` lines. Blank lines and lines starting with '#' are
/// skipped; anything else without '=' is a ConfigError naming the line.
KeyValues parse_key_values(std::string_view text, const std::string& source = "config");
KeyValues load_key_values(const std::filesystem::path& path);

/// Values of `<prefix><KEY>` environment variables for the given keys
/// (key upper-cased, '-' mapped to '_').
KeyValues env_overrides(std::string_view prefix, std::span<const std::string> keys);

/// Copies every entry of `layer` over `base`.
void merge_into(KeyValues& base, const KeyValues& layer);

inline constexpr std::string_view kEnvPrefix = "SHMSSL_";

// Typed accessors; malformed values raise ConfigError naming the key.
double parse_real(const std::string& key, const std::string& value);
long long parse_integer(const std::string& key, const std::string& value);
bool parse_flag(const std::string& key, const std::string& value);

}  // namespace shmssl
