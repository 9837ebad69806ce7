#pragma once

#include <map>
#include <string>

#include "sphg/harmonics.hpp"

namespace sphg {

/// Flat key=value settings. Keys carry section prefixes ("train.lr").
/// Blank lines and lines starting with '#' are ignored.
class Config {
 public:
  static Config parse(const std::string& text);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Overlays `other` onto this config. Unknown keys (absent here) are a
  /// ConfigError, so typos in files do not pass silently.
  void merge_known(const Config& other);

  /// Canonical text: one key=value per line, keys sorted.
  std::string to_text() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace sphg
