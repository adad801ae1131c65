#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace chdqn {

struct ConfigValue;
using ConfigArray = std::vector<ConfigValue>;

struct ConfigValue {
  std::variant<bool, std::int64_t, double, std::string, ConfigArray> data;
};

/// Reader for the TOML subset used by experiment configs: `[table]` headers,
/// `key = value` pairs, `#` comments, basic strings, booleans, integers,
/// floats and (possibly multi-line, nested) arrays. Keys are flattened to
/// "table.key". Inline tables and dates are not supported.
class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text, const std::string& origin = "<config>");
  static ConfigFile load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return entries_.contains(key); }
  std::vector<std::string> keys() const;

  // Typed lookups; nullopt when absent, ConfigError on a type mismatch.
  // Integers are accepted where a number is expected.
  std::optional<bool> boolean(const std::string& key) const;
  std::optional<std::int64_t> integer(const std::string& key) const;
  std::optional<double> number(const std::string& key) const;
  std::optional<std::string> string(const std::string& key) const;
  std::optional<std::vector<std::int64_t>> integer_list(const std::string& key) const;
  std::optional<std::vector<std::string>> string_list(const std::string& key) const;

 private:
  const ConfigValue* find(const std::string& key) const;

  std::string origin_;
  std::map<std::string, ConfigValue> entries_;
};

}  // namespace chdqn
