#include "sflow/featurestats/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace sflow::featurestats {

namespace {

struct FftwPlan {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;

  explicit FftwPlan(std::size_t n) {
    in = fftw_alloc_real(n);
    out = fftw_alloc_complex(n / 2 + 1);
    if (!in || !out) throw std::bad_alloc();
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  ~FftwPlan() {
    if (plan) fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
};

}  // namespace

FeatureMatrix stft_mag(const std::vector<double>& x, std::size_t window_len, std::size_t hop_len, std::size_t fft_size,
                       double sample_rate) {
  if (window_len == 0 || hop_len == 0) throw std::invalid_argument("stft_mag: window and hop must be positive");
  if (window_len > fft_size) throw std::invalid_argument("stft_mag: window longer than the FFT size");
  if (x.size() < window_len) {
    throw std::invalid_argument("stft_mag: signal of " + std::to_string(x.size()) +
                                " samples is shorter than one window (" + std::to_string(window_len) + ")");
  }
  const std::size_t frames = (x.size() - window_len) / hop_len + 1;
  const std::size_t bins = fft_size / 2 + 1;

  std::vector<double> window(window_len);
  for (std::size_t i = 0; i < window_len; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(window_len));
  }

  FftwPlan fft(fft_size);
  Array mag({frames, bins}, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    const double* frame = x.data() + f * hop_len;
    for (std::size_t i = 0; i < fft_size; ++i) fft.in[i] = i < window_len ? frame[i] * window[i] : 0.0;
    fftw_execute(fft.plan);
    for (std::size_t k = 0; k < bins; ++k) mag.at(f, k) = std::hypot(fft.out[k][0], fft.out[k][1]);
  }
  return {std::move(mag), SourceTag::kLinear, sample_rate / static_cast<double>(hop_len)};
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Array mel_filterbank(std::size_t n_mels, std::size_t n_bins, double fmin, double fmax, double sample_rate) {
  if (n_mels == 0 || n_bins < 2) throw std::invalid_argument("mel_filterbank: need n_mels >= 1 and n_bins >= 2");
  if (!(fmin >= 0.0) || !(fmax > fmin) || fmax > sample_rate / 2.0 + 1e-9) {
    throw std::invalid_argument("mel_filterbank: invalid band edges [" + std::to_string(fmin) + ", " +
                                std::to_string(fmax) + "] for sample rate " + std::to_string(sample_rate));
  }
  const double fft_size = 2.0 * static_cast<double>(n_bins - 1);
  const double mlo = hz_to_mel(fmin), mhi = hz_to_mel(fmax);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mlo + (mhi - mlo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }
  Array fb({n_mels, n_bins}, 0.0);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      double w = 0.0;
      if (f > lo && f <= mid) {
        w = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      fb.at(m, k) = w;
    }
  }
  return fb;
}

FeatureMatrix mel_apply(const FeatureMatrix& linear, std::size_t n_mels, double fmin, double fmax,
                        double sample_rate) {
  validate(linear);
  const Array fb = mel_filterbank(n_mels, linear.channels(), fmin, fmax, sample_rate);
  const std::size_t frames = linear.frames(), bins = linear.channels();
  Array mel({frames, n_mels}, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t m = 0; m < n_mels; ++m) {
      double acc = 0.0;
      for (std::size_t k = 0; k < bins; ++k) acc += fb.at(m, k) * linear.values.at(t, k);
      mel.at(t, m) = acc;
    }
  }
  return {std::move(mel), SourceTag::kMel, linear.frame_rate};
}

FeatureMatrix log_compress(const FeatureMatrix& m, double floor) {
  FeatureMatrix out = m;
  for (double& v : out.values.data()) v = std::log(std::max(v, floor));
  return out;
}

std::size_t SpectralPreset::window_for(double sample_rate) const {
  return window_samples ? window_samples : static_cast<std::size_t>(std::llround(window_seconds * sample_rate));
}

std::size_t SpectralPreset::hop_for(double sample_rate) const {
  return hop_samples ? hop_samples : static_cast<std::size_t>(std::llround(hop_seconds * sample_rate));
}

SpectralPreset preset(const std::string& name) {
  SpectralPreset p;
  p.name = name;
  if (name == "analyzer") {
    p.window_seconds = 0.050;
    p.hop_seconds = 0.0125;
  } else if (name == "acoustic") {
    p.window_samples = 1024;
    p.hop_samples = 256;
  } else {
    throw std::invalid_argument("unknown spectral preset '" + name + "' (expected analyzer or acoustic)");
  }
  return p;
}

SpectralFeatures extract(const std::vector<double>& x, double sample_rate, const SpectralPreset& p, bool log_mel) {
  SpectralFeatures out;
  out.linear = stft_mag(x, p.window_for(sample_rate), p.hop_for(sample_rate), p.fft_size, sample_rate);
  out.mel = mel_apply(out.linear, p.n_mels, p.fmin, p.fmax, sample_rate);
  if (log_mel) out.mel = log_compress(out.mel);
  return out;
}

}  // namespace sflow::featurestats
