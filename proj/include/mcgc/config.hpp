#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mcgc {

/// Flat key -> raw value map. Keys under a `[section]` header are stored
/// as `section.key`.
class ConfigTable
{
public:
  void set(std::string key, std::string value, int line);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  double number(const std::string& key, double fallback) const;
  double number(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  bool boolean(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

private:
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
};

/// The small TOML subset used by scene and allometry files: comments,
/// `key = value`, `[section]` and `[[array]]` tables, numbers, quoted
/// strings and booleans.
struct ConfigDocument
{
  ConfigTable root;
  std::map<std::string, std::vector<ConfigTable>> arrays;
};

ConfigDocument parse_config(std::string_view text);
ConfigDocument load_config(const std::string& path);

} // namespace mcgc
