#pragma once

#include <filesystem>
#include <set>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace sflow::cli {

/// Output directory of one run. Tracks every file written so the manifest can
/// list them with SHA-256 hashes.
class RunDir {
 public:
  /// Creates the directory (and parents). Throws std::runtime_error when it cannot.
  explicit RunDir(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path path(const std::string& relative) const { return root_ / relative; }
  /// Like path() but creates missing parent directories first.
  std::filesystem::path prepare(const std::string& relative) const;

  void write_text(const std::string& relative, const std::string& content);
  void write_json(const std::string& relative, const nlohmann::json& value);
  /// Registers a file produced by other code (e.g. a checkpoint writer).
  void track(const std::string& relative);

  /// manifest.json: every tracked file with its byte count and SHA-256.
  void write_manifest();

 private:
  std::filesystem::path root_;
  std::set<std::string> files_;
};

}  // namespace sflow::cli
