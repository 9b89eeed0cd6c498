#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sflow::cli {

/// Bad flags, bad config files, bad values: exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Typed key/value settings for one command. Defaults fix the key set and the
/// type of every key; a config file and then flags are layered on top.
class Settings {
 public:
  explicit Settings(nlohmann::json defaults);

  /// JSON object; unknown keys and type mismatches raise UsageError.
  void merge_file(const std::filesystem::path& path);
  void merge(const nlohmann::json& overrides, const std::string& origin);
  /// Flag text converted to the key's type ("on"/"off" for booleans, comma lists for arrays).
  void set_text(const std::string& key, const std::string& text);

  const nlohmann::json& resolved() const { return values_; }

  std::uint64_t u64(const std::string& key) const;
  std::size_t size(const std::string& key) const;
  double real(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::string text(const std::string& key) const;
  std::vector<std::size_t> sizes(const std::string& key) const;
  std::vector<std::string> texts(const std::string& key) const;

 private:
  nlohmann::json values_;
};

}  // namespace sflow::cli
