#include "sflow/cli/settings.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace sflow::cli {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(item);
  if (!text.empty() && text.back() == ',') parts.emplace_back();
  return parts;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size()) {
    throw UsageError("'" + key + "' expects a non-negative integer, got '" + text + "'");
  }
  return v;
}

double parse_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size()) {
    throw UsageError("'" + key + "' expects a number, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "on" || text == "true") return true;
  if (text == "off" || text == "false") return false;
  throw UsageError("'" + key + "' expects on or off, got '" + text + "'");
}

// True when `v` may replace a value shaped like `like`.
bool compatible(const json& like, const json& v) {
  if (like.is_number_unsigned()) return v.is_number_unsigned();
  if (like.is_number()) return v.is_number();
  if (like.is_boolean()) return v.is_boolean();
  if (like.is_string()) return v.is_string();
  if (like.is_array()) {
    if (!v.is_array()) return false;
    if (like.empty()) return true;
    for (const auto& e : v)
      if (!compatible(like.front(), e)) return false;
    return true;
  }
  return false;
}

}  // namespace

Settings::Settings(json defaults) : values_(std::move(defaults)) {
  if (!values_.is_object()) throw std::logic_error("settings defaults must be a JSON object");
}

void Settings::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config file not found: '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  merge(j, path.string());
}

void Settings::merge(const json& overrides, const std::string& origin) {
  if (!overrides.is_object()) throw UsageError(origin + ": config must be a JSON object");
  for (const auto& [key, value] : overrides.items()) {
    if (!values_.contains(key)) throw UsageError(origin + ": unknown config key '" + key + "'");
    json v = value;
    // Integral floats such as 3.0 are fine for float keys; plain integers are fine too.
    if (values_[key].is_number_float() && v.is_number()) v = v.get<double>();
    if (!compatible(values_[key], v)) {
      throw UsageError(origin + ": config key '" + key + "' has the wrong type (expected " +
                       std::string(values_[key].type_name()) + ")");
    }
    values_[key] = v;
  }
}

void Settings::set_text(const std::string& key, const std::string& text) {
  if (!values_.contains(key)) throw UsageError("unknown config key '" + key + "'");
  const json& like = values_[key];
  json v;
  if (like.is_number_unsigned()) {
    v = parse_u64(key, text);
  } else if (like.is_number()) {
    v = parse_real(key, text);
  } else if (like.is_boolean()) {
    v = parse_bool(key, text);
  } else if (like.is_string()) {
    v = text;
  } else if (like.is_array()) {
    v = json::array();
    const bool numeric = like.empty() || like.front().is_number_unsigned();
    for (const auto& part : split(text)) {
      if (numeric) {
        v.push_back(parse_u64(key, part));
      } else {
        v.push_back(part);
      }
    }
    if (v.empty()) throw UsageError("'" + key + "' expects a non-empty comma separated list");
  }
  values_[key] = v;
}

std::uint64_t Settings::u64(const std::string& key) const { return values_.at(key).get<std::uint64_t>(); }
std::size_t Settings::size(const std::string& key) const { return values_.at(key).get<std::size_t>(); }
double Settings::real(const std::string& key) const { return values_.at(key).get<double>(); }
bool Settings::flag(const std::string& key) const { return values_.at(key).get<bool>(); }
std::string Settings::text(const std::string& key) const { return values_.at(key).get<std::string>(); }
std::vector<std::size_t> Settings::sizes(const std::string& key) const {
  return values_.at(key).get<std::vector<std::size_t>>();
}
std::vector<std::string> Settings::texts(const std::string& key) const {
  return values_.at(key).get<std::vector<std::string>>();
}

}  // namespace sflow::cli
