#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "sflow/numkit/array.hpp"
#include "sflow/numkit/random.hpp"

namespace sflow::toyclone {

using numkit::Array;
using numkit::Rng;

/// One synthetic utterance. Frames are rows of `f3` ([T x C]); token i covers
/// durations[i] consecutive frames.
struct SyntheticUtterance {
  std::vector<std::size_t> tokens;
  std::vector<std::size_t> durations;
  Array prosody;  // text-related prosody scheme, [prosody_dim]
  Array speaker;  // speaker information and speaker-related prosody, [speaker_dim]
  std::size_t speaker_id = 0;
  Array f3;

  std::size_t frames() const { return f3.rows(); }
};

struct CorpusConfig {
  std::uint64_t seed = 1234;
  std::size_t vocab_size = 20;
  std::size_t n_speakers = 8;
  std::size_t n_utts = 64;
  std::size_t channels = 16;
  std::size_t min_frames = 40;
  std::size_t max_frames = 80;
  std::size_t min_duration = 3;
  std::size_t max_duration = 7;
  std::size_t prosody_dim = 2;
  std::size_t speaker_dim = 3;
  double prosody_scale = 0.6;
  double speaker_scale = 0.8;
  double observation_noise = 0.05;
};

/// Fixed random linear maps shared by every utterance of a corpus.
struct CorpusMaps {
  Array base;     // [vocab x C], average pronunciation per token
  Array prosody;  // [prosody_dim x C]
  Array speaker;  // [speaker_dim x C]
  std::vector<Array> speaker_factors;  // one [speaker_dim] vector per speaker
};

CorpusMaps make_corpus_maps(const CorpusConfig& config);

/// Symmetric triangular smoothing (weights 1,2,3,2,1) along rows, renormalized at the edges.
Array smooth_frames(const Array& frames);

/// Frame index -> position in the token list.
std::vector<std::size_t> frame_to_token(const std::vector<std::size_t>& durations);

/// F3 = smooth(base[token_f] + contour_f * A a + B b) + N(0, noise^2), with the
/// prosody contour cos(pi f / T) giving a declining-then-rising shape over the utterance.
Array render_f3(const CorpusMaps& maps, const std::vector<std::size_t>& tokens,
                const std::vector<std::size_t>& durations, const Array& prosody, const Array& speaker,
                double observation_noise, Rng& rng);

std::vector<SyntheticUtterance> synth_corpus(const CorpusConfig& config);

/// Frames [start, start + length) of an utterance, with tokens clipped at the window edges.
SyntheticUtterance crop_utterance(const SyntheticUtterance& utt, std::size_t start, std::size_t length);

/// JSON lines: {"tokens", "durations", "prosody", "speaker", "speaker_id",
/// "f3": {"shape": [T, C], "data": base64 of little-endian float64}}.
void save_corpus(const std::filesystem::path& path, const std::vector<SyntheticUtterance>& corpus);
std::vector<SyntheticUtterance> load_corpus(const std::filesystem::path& path);

}  // namespace sflow::toyclone
