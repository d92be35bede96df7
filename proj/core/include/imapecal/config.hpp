// Minimal sectioned key/value config format:
//   # comment
//   [section]
//   key = value
// Values keep their raw text; typed getters parse on access. Lists are
// whitespace- or comma-separated.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace imapecal {

class ConfigFile {
 public:
  ConfigFile() = default;

  static ConfigFile parse(std::string_view text);
  static ConfigFile load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  /// Raw value; returns `fallback` when the key is absent.
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback = {}) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int get_int(const std::string& section, const std::string& key,
              int fallback) const;
  std::uint64_t get_uint(const std::string& section, const std::string& key,
                         std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::vector<double> get_doubles(const std::string& section,
                                  const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& section,
                                       const std::string& key) const;

  void set(const std::string& section, const std::string& key,
           const std::string& value);

  /// Stable (sorted) round-trippable dump.
  std::string serialize() const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace imapecal
