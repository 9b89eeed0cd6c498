#include "sflow/cli/run_dir.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <system_error>

#include "sflow/numkit/hash.hpp"

namespace sflow::cli {

RunDir::RunDir(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec || !std::filesystem::is_directory(root_)) {
    throw std::runtime_error("cannot create output directory '" + root_.string() + "'" +
                             (ec ? ": " + ec.message() : ""));
  }
}

std::filesystem::path RunDir::prepare(const std::string& relative) const {
  auto p = path(relative);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  return p;
}

void RunDir::write_text(const std::string& relative, const std::string& content) {
  const auto p = prepare(relative);
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  f.close();
  if (!f) throw std::runtime_error("write failed for '" + p.string() + "'");
  files_.insert(relative);
}

void RunDir::write_json(const std::string& relative, const nlohmann::json& value) {
  write_text(relative, value.dump(2) + "\n");
}

void RunDir::track(const std::string& relative) {
  if (!std::filesystem::is_regular_file(path(relative))) {
    throw std::runtime_error("expected output file '" + path(relative).string() + "' is missing");
  }
  files_.insert(relative);
}

void RunDir::write_manifest() {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& rel : files_) {
    const auto p = path(rel);
    files.push_back({{"path", rel}, {"bytes", std::filesystem::file_size(p)}, {"sha256", numkit::sha256_file(p)}});
  }
  const std::string text = nlohmann::json{{"files", files}}.dump(2) + "\n";
  std::ofstream f(path("manifest.json"), std::ios::binary);
  if (!f) throw std::runtime_error("cannot write manifest in '" + root_.string() + "'");
  f << text;
}

}  // namespace sflow::cli
