#include "sflow/featurestats/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sflow::featurestats {

namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}
std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | p[1] << 8); }

std::string format_name(std::uint16_t tag) {
  switch (tag) {
    case 1: return "PCM";
    case 2: return "MS ADPCM";
    case 3: return "IEEE float";
    case 6: return "A-law";
    case 7: return "mu-law";
    case 0xfffe: return "extensible";
    default: return "format tag " + std::to_string(tag);
  }
}

void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}
void put32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

Audio load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("WAV file not found or unreadable: '" + path.string() + "'");
  const std::string raw{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const auto* b = reinterpret_cast<const unsigned char*>(raw.data());
  const std::string where = "'" + path.string() + "'";
  if (raw.size() < 12 || std::memcmp(b, "RIFF", 4) != 0 || std::memcmp(b + 8, "WAVE", 4) != 0) {
    throw std::runtime_error(where + " is not a RIFF/WAVE file");
  }

  std::uint16_t tag = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    const unsigned char* chunk = b + pos;
    const std::size_t len = le32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min(len, raw.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw std::runtime_error(where + ": fmt chunk too short");
      tag = le16(b + body);
      channels = le16(b + body + 2);
      rate = le32(b + body + 4);
      bits = le16(b + body + 14);
      if (tag == 0xfffe && avail >= 26) tag = le16(b + body + 24);  // sub-format GUID starts with the real tag
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = b + body;
      data_len = avail;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt) throw std::runtime_error(where + ": missing fmt chunk");
  if (!data) throw std::runtime_error(where + ": missing data chunk");
  if (tag != 1 || bits != 16) {
    throw std::runtime_error(where + ": unsupported WAV encoding " + format_name(tag) + " " + std::to_string(bits) +
                             "-bit (only 16-bit PCM is supported)");
  }
  if (channels == 0 || rate == 0) throw std::runtime_error(where + ": zero channels or sample rate");

  const std::size_t frames = data_len / (2u * channels);
  Audio a;
  a.sample_rate = rate;
  a.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      acc += static_cast<std::int16_t>(le16(data + 2 * (f * channels + c))) / 32768.0;
    }
    a.samples[f] = acc / channels;
  }
  return a;
}

void write_wav(const std::filesystem::path& path, const std::vector<double>& samples, unsigned sample_rate,
               unsigned channels) {
  if (channels == 0 || samples.size() % channels != 0) {
    throw std::invalid_argument("write_wav: sample count must be a multiple of the channel count");
  }
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::string out = "RIFF";
  put32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, 1);
  put16(out, static_cast<std::uint16_t>(channels));
  put32(out, sample_rate);
  put32(out, sample_rate * channels * 2);
  put16(out, static_cast<std::uint16_t>(channels * 2));
  put16(out, 16);
  out += "data";
  put32(out, data_bytes);
  for (double s : samples) {
    const double q = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0))));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write WAV file '" + path.string() + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

std::vector<double> resample(const std::vector<double>& x, double from_rate, double to_rate) {
  if (!(from_rate > 0.0) || !(to_rate > 0.0)) throw std::invalid_argument("resample: rates must be positive");
  if (from_rate == to_rate) return x;
  const double ratio = to_rate / from_rate;
  const auto out_len = static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) * ratio));
  const double cutoff = std::min(1.0, ratio);  // fraction of the input Nyquist
  constexpr double kZeros = 32.0;
  const double half = kZeros / cutoff;
  const auto n_in = static_cast<std::ptrdiff_t>(x.size());

  std::vector<double> y(out_len, 0.0);
  for (std::size_t n = 0; n < out_len; ++n) {
    const double center = static_cast<double>(n) / ratio;
    const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(center - half)));
    const auto hi = std::min<std::ptrdiff_t>(n_in - 1, static_cast<std::ptrdiff_t>(std::floor(center + half)));
    double acc = 0.0;
    for (std::ptrdiff_t k = lo; k <= hi; ++k) {
      const double d = center - static_cast<double>(k);
      const double w = 0.5 + 0.5 * std::cos(std::numbers::pi * d / half);  // Hann taper
      acc += x[static_cast<std::size_t>(k)] * cutoff * sinc(cutoff * d) * w;
    }
    y[n] = acc;
  }
  return y;
}

std::vector<double> trim_silence(const std::vector<double>& x, double threshold_db, std::size_t frame_len) {
  if (frame_len == 0) throw std::invalid_argument("trim_silence: frame length must be positive");
  if (!(threshold_db < 0.0)) throw std::invalid_argument("trim_silence: threshold must be negative dB");
  const std::size_t n_frames = (x.size() + frame_len - 1) / frame_len;
  std::vector<double> rms(n_frames, 0.0);
  double peak = 0.0;
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t a = f * frame_len, e = std::min(x.size(), a + frame_len);
    double acc = 0.0;
    for (std::size_t i = a; i < e; ++i) acc += x[i] * x[i];
    rms[f] = std::sqrt(acc / static_cast<double>(e - a));
    peak = std::max(peak, rms[f]);
  }
  if (peak == 0.0) return {};
  const double floor = peak * std::pow(10.0, threshold_db / 20.0);
  std::size_t first = 0, last = n_frames;
  while (first < n_frames && rms[first] < floor) ++first;
  while (last > first && rms[last - 1] < floor) --last;
  const std::size_t a = first * frame_len, e = std::min(x.size(), last * frame_len);
  return {x.begin() + static_cast<std::ptrdiff_t>(a), x.begin() + static_cast<std::ptrdiff_t>(e)};
}

}  // namespace sflow::featurestats
