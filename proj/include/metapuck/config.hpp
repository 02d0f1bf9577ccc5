#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace metapuck {

// A required input file (checkpoint, dataset, CSV) is absent. The CLI maps
// this to its own exit code so scripts can tell "run the producing step
// first" apart from "fix the invocation".
class MissingArtifactError : public std::runtime_error {
 public:
  explicit MissingArtifactError(const std::string& what) : std::runtime_error(what) {}
};

// Flat text configuration: one `key = value` per line, '#' starts a comment,
// blank lines are ignored. Values keep interior whitespace (paths), keys may
// not repeat.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_string(const std::string& text);
  static KeyValueConfig parse_file(const std::string& path);

  bool has(std::string_view key) const;

  // Missing key without a fallback is a validation error.
  std::string get_string(std::string_view key) const;
  std::string get_string(std::string_view key, std::string fallback) const;
  double get_double(std::string_view key, double fallback) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
  std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  // Comma-separated, items trimmed, empties dropped.
  std::vector<std::string> get_list(std::string_view key,
                                    std::vector<std::string> fallback) const;

  // Rejects keys outside the given set (typo protection per subcommand).
  void require_known(std::initializer_list<std::string_view> known) const;

  void set(std::string key, std::string value);  // programmatic overrides

  const std::map<std::string, std::string>& entries() const { return entries_; }
  // Sorted "key = value" lines; the stable fingerprint input for artifacts.
  std::string canonical_text() const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace metapuck
