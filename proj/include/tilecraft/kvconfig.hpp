#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace tilecraft {

// Flat `key = value` text config. '#' starts a comment; blank lines are ignored.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig parse(std::string_view text);
  static KvConfig load(const std::filesystem::path& path);

  void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }
  bool contains(std::string_view key) const { return values_.find(std::string(key)) != values_.end(); }
  std::optional<std::string> get(std::string_view key) const;

  // Typed getters throw ConfigError when the value does not parse.
  std::optional<std::int64_t> get_int(std::string_view key) const;
  std::optional<std::uint64_t> get_u64(std::string_view key) const;
  std::optional<double> get_double(std::string_view key) const;

  const std::map<std::string, std::string, std::less<>>& values() const { return values_; }

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

// Accepts decimal or 0x-prefixed hex.
std::uint64_t parse_u64(std::string_view text);

}  // namespace tilecraft
