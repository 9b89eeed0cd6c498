#include "sflow/numkit/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <vector>

namespace sflow::numkit {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'F', 'C', 'K', 'P', 'T', '\0', '\1'};
constexpr int kVersion = 1;

class ByteWriter {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void raw(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  const std::vector<char>& buffer() const { return buf_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<char>& buf, std::string source) : buf_(buf), source_(std::move(source)) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string bytes() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw std::runtime_error(source_ + ": truncated checkpoint");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::vector<char>& buf_;
  std::string source_;
  std::size_t pos_ = 0;
};

void write_file(const std::filesystem::path& path, const char* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(data, static_cast<std::streamsize>(n));
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Checkpoint load_json(const std::vector<char>& buf, const std::string& source) {
  auto doc = nlohmann::json::parse(buf.begin(), buf.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || doc.value("format", "") != "sflow-checkpoint") {
    throw std::runtime_error(source + ": not a checkpoint file");
  }
  if (doc.value("version", 0) != kVersion) {
    throw std::runtime_error(source + ": unsupported checkpoint version " + doc.value("version", nlohmann::json()).dump());
  }
  Checkpoint ckpt;
  ckpt.metadata = doc.value("metadata", nlohmann::json::object()).dump();
  for (const auto& [name, entry] : doc.at("parameters").items()) {
    Shape shape = entry.at("shape").get<Shape>();
    ckpt.params.add(name, Array(std::move(shape), entry.at("values").get<std::vector<double>>()));
  }
  return ckpt;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt, CheckpointFormat format) {
  if (format == CheckpointFormat::kJson) {
    nlohmann::json doc;
    doc["format"] = "sflow-checkpoint";
    doc["version"] = kVersion;
    doc["metadata"] = nlohmann::json::parse(ckpt.metadata);
    auto& params = doc["parameters"] = nlohmann::json::object();
    for (const auto& [name, a] : ckpt.params.entries()) {
      params[name] = {{"shape", a.shape()}, {"values", a.values()}};
    }
    const std::string text = doc.dump(1);
    write_file(path, text.data(), text.size());
    return;
  }

  ByteWriter w;
  w.raw(kMagic.data(), kMagic.size());
  w.bytes(ckpt.metadata);
  w.u32(static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& [name, a] : ckpt.params.entries()) {
    w.bytes(name);
    w.u32(static_cast<std::uint32_t>(a.rank()));
    for (auto d : a.shape()) w.u64(d);
    for (double v : a.data()) w.f64(v);
  }
  write_file(path, w.buffer().data(), w.buffer().size());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint not found: '" + path.string() + "'");
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string source = path.string();

  if (!buf.empty() && buf.front() == '{') return load_json(buf, source);

  if (buf.size() < kMagic.size() || std::memcmp(buf.data(), kMagic.data(), kMagic.size() - 1) != 0) {
    throw std::runtime_error(source + ": not a checkpoint file (bad magic)");
  }
  if (buf[kMagic.size() - 1] != kMagic.back()) {
    throw std::runtime_error(source + ": unsupported checkpoint version " +
                             std::to_string(static_cast<int>(buf[kMagic.size() - 1])));
  }
  ByteReader r(buf, source);
  r.skip(kMagic.size());
  Checkpoint ckpt;
  ckpt.metadata = r.bytes();
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.bytes();
    const std::uint32_t rank = r.u32();
    Shape shape(rank);
    for (auto& d : shape) d = r.u64();
    std::vector<double> values(shape_size(shape));
    for (auto& v : values) v = r.f64();
    ckpt.params.add(name, Array(std::move(shape), std::move(values)));
  }
  if (!r.at_end()) throw std::runtime_error(source + ": trailing bytes after checkpoint payload");
  return ckpt;
}

}  // namespace sflow::numkit
