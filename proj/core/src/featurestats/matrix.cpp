#include "sflow/featurestats/matrix.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "sflow/numkit/text.hpp"

namespace sflow::featurestats {

namespace {

constexpr std::array<char, 8> kRawMagic = {'F', 'E', 'A', 'T', 'M', 'A', 'T', '1'};
constexpr std::size_t kRawHeader = 16;

std::uint64_t read_le(const char* p, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

void write_le(std::string& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open matrix file '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

FeatureMatrix parse_raw(const std::string& bytes, const std::string& origin) {
  if (bytes.size() < kRawHeader) throw std::runtime_error(origin + ": raw header truncated");
  if (!std::equal(kRawMagic.begin(), kRawMagic.end(), bytes.begin())) {
    throw std::runtime_error(origin + ": bad raw magic (expected FEATMAT1)");
  }
  const auto t = static_cast<std::size_t>(read_le(bytes.data() + 8, 4));
  const auto c = static_cast<std::size_t>(read_le(bytes.data() + 12, 4));
  if (t == 0 || c == 0) throw std::runtime_error(origin + ": raw header declares an empty matrix");
  const std::size_t expected = kRawHeader + t * c * 8;
  if (bytes.size() != expected) {
    throw std::runtime_error(origin + ": raw payload is " + std::to_string(bytes.size()) + " bytes, header implies " +
                             std::to_string(expected));
  }
  std::vector<double> data(t * c);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<double>(read_le(bytes.data() + kRawHeader + 8 * i, 8));
  }
  return {Array({t, c}, std::move(data)), SourceTag::kExternal};
}

}  // namespace

const char* to_string(SourceTag tag) {
  switch (tag) {
    case SourceTag::kLinear: return "linear";
    case SourceTag::kMel: return "mel";
    case SourceTag::kExternal: return "external";
  }
  return "?";
}

void validate(const FeatureMatrix& m) {
  if (m.values.rank() != 2) throw std::invalid_argument("feature matrix must be rank 2");
  if (!m.values.all_finite()) throw std::invalid_argument("feature matrix has non-finite values");
}

MatrixFormat parse_matrix_format(const std::string& text) {
  if (text == "csv") return MatrixFormat::kCsv;
  if (text == "raw") return MatrixFormat::kRaw;
  throw std::invalid_argument("unknown matrix format '" + text + "' (expected csv or raw)");
}

MatrixFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? MatrixFormat::kCsv : MatrixFormat::kRaw;
}

FeatureMatrix parse_csv_matrix(const std::string& text, const std::string& origin) {
  std::vector<double> data;
  std::size_t rows = 0, cols = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    std::size_t count = 0;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = row.find(',', pos);
      const std::string_view cell = trim(row.substr(pos, comma == std::string_view::npos ? row.npos : comma - pos));
      double v = 0.0;
      const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || end != cell.data() + cell.size() || cell.empty()) {
        throw std::runtime_error(origin + ": row " + std::to_string(rows) + ", column " + std::to_string(count) +
                                 ": not a number: '" + std::string(cell) + "'");
      }
      data.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw std::runtime_error(origin + ": ragged row " + std::to_string(rows) + " has " + std::to_string(count) +
                               " values, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw std::runtime_error(origin + ": no rows");
  FeatureMatrix m{Array({rows, cols}, std::move(data)), SourceTag::kExternal};
  validate(m);
  return m;
}

FeatureMatrix import_matrix(const std::filesystem::path& path, MatrixFormat format) {
  const std::string bytes = read_file(path);
  FeatureMatrix m = format == MatrixFormat::kCsv ? parse_csv_matrix(bytes, path.string()) : parse_raw(bytes, path.string());
  validate(m);
  return m;
}

void export_matrix(const std::filesystem::path& path, const FeatureMatrix& m, MatrixFormat format) {
  validate(m);
  const std::size_t t = m.frames(), c = m.channels();
  std::string out;
  if (format == MatrixFormat::kCsv) {
    for (std::size_t r = 0; r < t; ++r) {
      for (std::size_t k = 0; k < c; ++k) {
        if (k) out.push_back(',');
        out += numkit::format_double(m.values.at(r, k));
      }
      out.push_back('\n');
    }
  } else {
    if (t > UINT32_MAX || c > UINT32_MAX) throw std::invalid_argument("matrix too large for the raw format");
    out.assign(kRawMagic.begin(), kRawMagic.end());
    write_le(out, t, 4);
    write_le(out, c, 4);
    for (double v : m.values.data()) write_le(out, std::bit_cast<std::uint64_t>(v), 8);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write matrix file '" + path.string() + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace sflow::featurestats
