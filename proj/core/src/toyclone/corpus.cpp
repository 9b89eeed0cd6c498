#include "sflow/toyclone/corpus.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sflow::toyclone {

namespace {

Array scaled_normal(Rng& rng, numkit::Shape shape, double scale) {
  Array a = rng.normal_array(shape);
  a *= scale;
  return a;
}

std::string encode_f64_base64(const Array& a) {
  std::string raw;
  raw.reserve(a.size() * 8);
  for (double v : a.data()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) raw.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
  }
  std::string out(4 * ((raw.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(raw.data()), static_cast<int>(raw.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<double> decode_f64_base64(const std::string& text, std::size_t expected) {
  if (text.size() % 4 != 0) throw std::runtime_error("corpus: base64 block has invalid length");
  std::string raw(3 * text.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(raw.data()),
                                reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw std::runtime_error("corpus: malformed base64 block");
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  std::size_t len = static_cast<std::size_t>(n);
  if (!text.empty() && text.back() == '=') --len;
  if (text.size() > 1 && text[text.size() - 2] == '=') --len;
  if (len != expected * 8) {
    throw std::runtime_error("corpus: base64 block holds " + std::to_string(len) + " bytes, expected " +
                             std::to_string(expected * 8));
  }
  std::vector<double> out(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[i * 8 + b])) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

}  // namespace

CorpusMaps make_corpus_maps(const CorpusConfig& config) {
  if (config.vocab_size == 0 || config.n_speakers == 0 || config.channels == 0 || config.prosody_dim == 0 ||
      config.speaker_dim == 0) {
    throw std::invalid_argument("corpus: all sizes must be positive");
  }
  Rng rng(config.seed);
  CorpusMaps maps;
  maps.base = rng.normal_array({config.vocab_size, config.channels});
  maps.prosody = scaled_normal(rng, {config.prosody_dim, config.channels},
                               config.prosody_scale / std::sqrt(static_cast<double>(config.prosody_dim)));
  maps.speaker = scaled_normal(rng, {config.speaker_dim, config.channels},
                               config.speaker_scale / std::sqrt(static_cast<double>(config.speaker_dim)));
  for (std::size_t s = 0; s < config.n_speakers; ++s) maps.speaker_factors.push_back(rng.normal_array({config.speaker_dim}));
  return maps;
}

Array smooth_frames(const Array& frames) {
  static constexpr double kWeights[] = {1.0, 2.0, 3.0, 2.0, 1.0};
  const std::size_t steps = frames.rows(), cols = frames.cols();
  Array out({steps, cols}, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    double norm = 0.0;
    for (int k = -2; k <= 2; ++k) {
      const auto src = static_cast<std::ptrdiff_t>(t) + k;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(steps)) continue;
      const double w = kWeights[k + 2];
      norm += w;
      for (std::size_t c = 0; c < cols; ++c) out.at(t, c) += w * frames.at(static_cast<std::size_t>(src), c);
    }
    for (std::size_t c = 0; c < cols; ++c) out.at(t, c) /= norm;
  }
  return out;
}

std::vector<std::size_t> frame_to_token(const std::vector<std::size_t>& durations) {
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < durations.size(); ++i) index.insert(index.end(), durations[i], i);
  return index;
}

Array render_f3(const CorpusMaps& maps, const std::vector<std::size_t>& tokens,
                const std::vector<std::size_t>& durations, const Array& prosody, const Array& speaker,
                double observation_noise, Rng& rng) {
  if (tokens.size() != durations.size()) throw std::invalid_argument("render_f3: tokens and durations differ in length");
  const auto owner = frame_to_token(durations);
  const std::size_t steps = owner.size();
  const std::size_t channels = maps.base.cols();
  if (steps == 0) throw std::invalid_argument("render_f3: zero frames");

  Array prosody_row({channels}, 0.0), speaker_row({channels}, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < prosody.size(); ++p) prosody_row[c] += prosody[p] * maps.prosody.at(p, c);
    for (std::size_t s = 0; s < speaker.size(); ++s) speaker_row[c] += speaker[s] * maps.speaker.at(s, c);
  }

  Array raw({steps, channels});
  for (std::size_t f = 0; f < steps; ++f) {
    const std::size_t token = tokens[owner[f]];
    if (token >= maps.base.rows()) throw std::out_of_range("render_f3: token id " + std::to_string(token));
    const double contour = std::cos(std::numbers::pi * static_cast<double>(f) / static_cast<double>(steps));
    for (std::size_t c = 0; c < channels; ++c) {
      raw.at(f, c) = maps.base.at(token, c) + contour * prosody_row[c] + speaker_row[c];
    }
  }
  Array f3 = smooth_frames(raw);
  if (observation_noise > 0.0)
    for (auto& v : f3.values()) v += rng.normal(0.0, observation_noise);
  return f3;
}

std::vector<SyntheticUtterance> synth_corpus(const CorpusConfig& config) {
  if (config.n_utts == 0 || config.min_frames == 0 || config.min_frames > config.max_frames ||
      config.min_duration == 0 || config.min_duration > config.max_duration) {
    throw std::invalid_argument("synth_corpus: invalid counts or ranges");
  }
  const CorpusMaps maps = make_corpus_maps(config);
  Rng master(config.seed ^ 0x5eedc0de5eedc0deULL);
  std::vector<SyntheticUtterance> corpus;
  corpus.reserve(config.n_utts);
  for (std::size_t u = 0; u < config.n_utts; ++u) {
    Rng rng = master.fork();
    SyntheticUtterance utt;
    const auto frames = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(config.min_frames), static_cast<std::int64_t>(config.max_frames)));
    std::size_t covered = 0;
    while (covered < frames) {
      auto d = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(config.min_duration),
                                                        static_cast<std::int64_t>(config.max_duration)));
      d = std::min(d, frames - covered);
      utt.durations.push_back(d);
      utt.tokens.push_back(static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(config.vocab_size - 1))));
      covered += d;
    }
    utt.prosody = rng.normal_array({config.prosody_dim});
    utt.speaker_id = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(config.n_speakers - 1)));
    utt.speaker = maps.speaker_factors[utt.speaker_id];
    utt.f3 = render_f3(maps, utt.tokens, utt.durations, utt.prosody, utt.speaker, config.observation_noise, rng);
    corpus.push_back(std::move(utt));
  }
  return corpus;
}

SyntheticUtterance crop_utterance(const SyntheticUtterance& utt, std::size_t start, std::size_t length) {
  if (length == 0 || start + length > utt.frames()) throw std::out_of_range("crop_utterance: window outside utterance");
  SyntheticUtterance out;
  out.prosody = utt.prosody;
  out.speaker = utt.speaker;
  out.speaker_id = utt.speaker_id;
  const auto owner = frame_to_token(utt.durations);
  for (std::size_t f = start; f < start + length; ++f) {
    if (f == start || owner[f] != owner[f - 1]) {
      out.tokens.push_back(utt.tokens[owner[f]]);
      out.durations.push_back(0);
    }
    ++out.durations.back();
  }
  const std::size_t cols = utt.f3.cols();
  std::vector<double> data(utt.f3.values().begin() + static_cast<std::ptrdiff_t>(start * cols),
                           utt.f3.values().begin() + static_cast<std::ptrdiff_t>((start + length) * cols));
  out.f3 = Array({length, cols}, std::move(data));
  return out;
}

void save_corpus(const std::filesystem::path& path, const std::vector<SyntheticUtterance>& corpus) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  for (const auto& utt : corpus) {
    nlohmann::json line;
    line["tokens"] = utt.tokens;
    line["durations"] = utt.durations;
    line["prosody"] = utt.prosody.values();
    line["speaker"] = utt.speaker.values();
    line["speaker_id"] = utt.speaker_id;
    line["f3"] = {{"shape", utt.f3.shape()}, {"data", encode_f64_base64(utt.f3)}};
    out << line.dump() << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::vector<SyntheticUtterance> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("corpus not found: '" + path.string() + "'");
  std::vector<SyntheticUtterance> corpus;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    try {
      const auto line = nlohmann::json::parse(text);
      SyntheticUtterance utt;
      utt.tokens = line.at("tokens").get<std::vector<std::size_t>>();
      utt.durations = line.at("durations").get<std::vector<std::size_t>>();
      const auto prosody = line.at("prosody").get<std::vector<double>>();
      const auto speaker = line.at("speaker").get<std::vector<double>>();
      utt.prosody = Array({prosody.size()}, prosody);
      utt.speaker = Array({speaker.size()}, speaker);
      utt.speaker_id = line.at("speaker_id").get<std::size_t>();
      auto shape = line.at("f3").at("shape").get<numkit::Shape>();
      if (shape.size() != 2) throw std::runtime_error("f3 must be rank 2");
      auto values = decode_f64_base64(line.at("f3").at("data").get<std::string>(), numkit::shape_size(shape));
      utt.f3 = Array(std::move(shape), std::move(values));
      std::size_t total = 0;
      for (auto d : utt.durations) total += d;
      if (total != utt.frames() || utt.tokens.size() != utt.durations.size()) {
        throw std::runtime_error("durations do not cover the frames");
      }
      corpus.push_back(std::move(utt));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return corpus;
}

}  // namespace sflow::toyclone
