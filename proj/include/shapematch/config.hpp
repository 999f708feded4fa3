#pragma once

#include <map>
#include <optional>
#include <string>

namespace shapematch {

/// Flat key-value configuration parsed from a minimal TOML-style file:
/// `[section]` headers, `key = value` lines, `#` comments, optional
/// double-quoted strings. Keys are stored as "section.key" ("key" outside
/// any section).
class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value);

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace shapematch
