#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace sflow::featurestats {

struct Audio {
  std::vector<double> samples;  // mono, [-1, 1]
  double sample_rate = 0.0;

  double duration() const { return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0; }
};

/// 16-bit PCM WAV (plain or extensible header). Channels are averaged to mono.
Audio load_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM; samples are clipped to [-1, 1) and rounded.
void write_wav(const std::filesystem::path& path, const std::vector<double>& samples, unsigned sample_rate,
               unsigned channels = 1);

/// Windowed-sinc resampler. Output length is round(len * to / from).
std::vector<double> resample(const std::vector<double>& x, double from_rate, double to_rate);

/// Drops leading and trailing frames whose RMS is more than |threshold_db| below the loudest frame.
std::vector<double> trim_silence(const std::vector<double>& x, double threshold_db, std::size_t frame_len);

}  // namespace sflow::featurestats
