#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sflow/featurestats/matrix.hpp"

namespace sflow::featurestats {

/// Hann-windowed magnitude STFT without padding: floor((len - window) / hop) + 1
/// frames of fft_size / 2 + 1 bins.
FeatureMatrix stft_mag(const std::vector<double>& x, std::size_t window_len, std::size_t hop_len, std::size_t fft_size,
                       double sample_rate);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular HTK-scale filters, [n_mels x n_bins], peak weight 1.
Array mel_filterbank(std::size_t n_mels, std::size_t n_bins, double fmin, double fmax, double sample_rate);

FeatureMatrix mel_apply(const FeatureMatrix& linear, std::size_t n_mels, double fmin, double fmax,
                        double sample_rate);

/// log(max(x, floor)) elementwise.
FeatureMatrix log_compress(const FeatureMatrix& m, double floor = 1e-5);

struct SpectralPreset {
  std::string name;
  double window_seconds = 0.0;  // used when window_samples is 0
  double hop_seconds = 0.0;
  std::size_t window_samples = 0;
  std::size_t hop_samples = 0;
  std::size_t fft_size = 1024;
  std::size_t n_mels = 80;
  double fmin = 0.0;
  double fmax = 8000.0;

  std::size_t window_for(double sample_rate) const;
  std::size_t hop_for(double sample_rate) const;
};

/// "analyzer": 50 ms / 12.5 ms / fft 1024. "acoustic": 1024 / 256 / fft 1024. Both 80 mels on 0-8 kHz.
SpectralPreset preset(const std::string& name);

struct SpectralFeatures {
  FeatureMatrix linear;
  FeatureMatrix mel;
};

SpectralFeatures extract(const std::vector<double>& x, double sample_rate, const SpectralPreset& p,
                         bool log_mel = false);

}  // namespace sflow::featurestats
