#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sflow/featurestats/audio.hpp"
#include "sflow/featurestats/pccs.hpp"
#include "sflow/featurestats/spectral.hpp"
#include "sflow/numkit/random.hpp"

using namespace sflow::featurestats;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "sflow_featurestats_test";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<double> tone(double hz, double rate, std::size_t n, double amp = 0.5) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2 * std::numbers::pi * hz * i / rate);
  return x;
}

// Textbook two-pass correlation of adjacent mean-removed vectors; independent of the library.
std::vector<double> brute_pccs(const Array& m, Axis axis) {
  const std::size_t rows = m.rows(), cols = m.cols();
  const bool time = axis == Axis::kTime;
  const std::size_t count = time ? rows : cols, len = time ? cols : rows;
  auto get = [&](std::size_t v, std::size_t k) { return time ? m.at(v, k) : m.at(k, v); };
  std::vector<double> avg(len, 0.0);
  for (std::size_t v = 0; v < count; ++v)
    for (std::size_t k = 0; k < len; ++k) avg[k] += get(v, k) / count;
  std::vector<double> out;
  for (std::size_t v = 0; v + 1 < count; ++v) {
    std::vector<double> a(len), b(len);
    for (std::size_t k = 0; k < len; ++k) {
      a[k] = get(v, k) - avg[k];
      b[k] = get(v + 1, k) - avg[k];
    }
    double ma = 0, mb = 0;
    for (std::size_t k = 0; k < len; ++k) {
      ma += a[k] / len;
      mb += b[k] / len;
    }
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t k = 0; k < len; ++k) {
      sab += (a[k] - ma) * (b[k] - mb);
      saa += (a[k] - ma) * (a[k] - ma);
      sbb += (b[k] - mb) * (b[k] - mb);
    }
    out.push_back(std::abs(sab / std::sqrt(saa * sbb)));
  }
  return out;
}

}  // namespace

TEST(Stft, TonePeakAtBin64) {
  auto m = stft_mag(tone(1000, 16000, 16000), 1024, 256, 1024, 16000);
  EXPECT_EQ(m.channels(), 513u);
  EXPECT_EQ(m.frames(), (16000 - 1024) / 256 + 1);
  EXPECT_DOUBLE_EQ(m.frame_rate, 16000.0 / 256);
  for (std::size_t f = 0; f < m.frames(); ++f) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < m.channels(); ++k)
      if (m.values.at(f, k) > m.values.at(f, best)) best = k;
    ASSERT_EQ(best, 64u) << "frame " << f;
  }
}

TEST(Stft, HannPeakMagnitude) {
  // a bin-centred sinusoid of amplitude A under a periodic Hann window peaks at A * N / 4
  auto m = stft_mag(tone(1000, 16000, 1024, 1.0), 1024, 256, 1024, 16000);
  EXPECT_NEAR(m.values.at(0, 64), 256.0, 1e-6);
}

TEST(Stft, Errors) {
  EXPECT_THROW(stft_mag(std::vector<double>(100), 256, 64, 1024, 16000), std::invalid_argument);
  EXPECT_THROW(stft_mag(std::vector<double>(4096), 2048, 64, 1024, 16000), std::invalid_argument);
}

TEST(Mel, ScaleAndFilterbank) {
  EXPECT_NEAR(hz_to_mel(1000), 1000.0, 0.1);
  EXPECT_NEAR(mel_to_hz(hz_to_mel(3210)), 3210, 1e-9);
  auto fb = mel_filterbank(80, 513, 0, 8000, 16000);
  EXPECT_EQ(fb.rows(), 80u);
  EXPECT_EQ(fb.cols(), 513u);
  for (std::size_t r = 0; r < 80; ++r) {
    double peak = 0;
    for (std::size_t c = 0; c < 513; ++c) {
      EXPECT_GE(fb.at(r, c), 0.0);
      peak = std::max(peak, fb.at(r, c));
    }
    EXPECT_GT(peak, 0.3) << r;
    EXPECT_LE(peak, 1.0);
  }
  EXPECT_THROW(mel_filterbank(80, 513, 5000, 4000, 16000), std::invalid_argument);
  EXPECT_THROW(mel_filterbank(80, 513, 0, 9000, 16000), std::invalid_argument);
}

TEST(Mel, PresetsGiveEightyChannels) {
  auto x = tone(440, 16000, 16000);
  for (const char* name : {"analyzer", "acoustic"}) {
    auto p = preset(name);
    auto f = extract(x, 16000, p);
    EXPECT_EQ(f.mel.channels(), 80u) << name;
    EXPECT_EQ(f.linear.channels(), 513u) << name;
    EXPECT_EQ(f.mel.source, SourceTag::kMel);
  }
  EXPECT_EQ(preset("analyzer").window_for(16000), 800u);
  EXPECT_EQ(preset("analyzer").hop_for(16000), 200u);
  EXPECT_EQ(preset("acoustic").hop_for(22050), 256u);
  EXPECT_THROW(preset("studio"), std::invalid_argument);
  auto logged = extract(x, 16000, preset("analyzer"), true);
  EXPECT_NEAR(logged.mel.values.at(3, 2), std::log(std::max(extract(x, 16000, preset("analyzer")).mel.values.at(3, 2), 1e-5)),
              1e-12);
}

TEST(Wav, RoundTripAndClipping) {
  std::vector<double> x{0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 1.0 / 32768};
  write_wav(scratch("a.wav"), x, 16000);
  auto a = load_wav(scratch("a.wav"));
  EXPECT_EQ(a.sample_rate, 16000);
  ASSERT_EQ(a.samples.size(), x.size());
  EXPECT_EQ(a.samples[1], 0.5);
  EXPECT_EQ(a.samples[3], 32767.0 / 32768);
  EXPECT_EQ(a.samples[4], -1.0);
  EXPECT_EQ(a.samples[5], 32767.0 / 32768);
  EXPECT_EQ(a.samples[6], -1.0);
  EXPECT_EQ(a.samples[7], 1.0 / 32768);
}

TEST(Wav, StereoIsAveraged) {
  write_wav(scratch("s.wav"), {0.5, 0.25, -0.5, 0.0}, 8000, 2);
  auto a = load_wav(scratch("s.wav"));
  ASSERT_EQ(a.samples.size(), 2u);
  EXPECT_EQ(a.samples[0], 0.375);
  EXPECT_EQ(a.samples[1], -0.25);
  EXPECT_DOUBLE_EQ(a.duration(), 2.0 / 8000);
}

TEST(Wav, RejectsOtherEncodings) {
  write_wav(scratch("f.wav"), {0.1, 0.2}, 8000);
  std::string bytes;
  {
    std::ifstream in(scratch("f.wav"), std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  bytes[20] = 3;  // IEEE float tag
  bytes[34] = 32;
  {
    std::ofstream(scratch("f.wav"), std::ios::binary) << bytes;
  }
  try {
    load_wav(scratch("f.wav"));
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("32-bit"), std::string::npos) << e.what();
  }
  try {
    load_wav(scratch("none.wav"));
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("none.wav"), std::string::npos);
  }
}

TEST(Wav, BundledFixturesLoad) {
  auto b = load_wav(fs::path(SFLOW_TEST_DATA) / "speech_b_16k_stereo.wav");
  EXPECT_EQ(b.sample_rate, 16000);
  EXPECT_GT(b.duration(), 1.0);
}

TEST(Resample, LengthAndTonePreserved) {
  auto x = tone(1000, 22050, 22050);
  auto y = resample(x, 22050, 16000);
  EXPECT_EQ(y.size(), 16000u);
  auto m = stft_mag(y, 1024, 256, 1024, 16000);
  std::size_t best = 0;
  for (std::size_t k = 1; k < m.channels(); ++k)
    if (m.values.at(5, k) > m.values.at(5, best)) best = k;
  EXPECT_EQ(best, 64u);
  EXPECT_EQ(resample(x, 22050, 22050), x);
  EXPECT_EQ(resample(tone(100, 48000, 480), 48000, 16000).size(), 160u);
  EXPECT_THROW(resample(x, 0, 16000), std::invalid_argument);
}

TEST(Resample, RemovesContentAboveNewNyquist) {
  auto y = resample(tone(7000, 48000, 48000), 48000, 8000);
  double rms = 0;
  for (std::size_t i = 400; i + 400 < y.size(); ++i) rms += y[i] * y[i];
  rms = std::sqrt(rms / (y.size() - 800));
  EXPECT_LT(rms, 0.01);
}

TEST(Trim, DropsSilentEdges) {
  std::vector<double> x(1000, 0.0);
  auto t = tone(440, 16000, 1600);
  x.insert(x.end(), t.begin(), t.end());
  x.insert(x.end(), 800, 0.0);
  auto y = trim_silence(x, -40, 100);
  EXPECT_EQ(y.size(), 1600u);
  EXPECT_TRUE(trim_silence(std::vector<double>(500, 0.0), -40, 100).empty());
  EXPECT_THROW(trim_silence(x, 10, 100), std::invalid_argument);
}

TEST(Matrix, CsvParseAndErrors) {
  auto m = parse_csv_matrix("1,2,3\n4,5,6\n");
  EXPECT_EQ(m.frames(), 2u);
  EXPECT_EQ(m.channels(), 3u);
  EXPECT_EQ(m.values.at(1, 2), 6.0);
  try {
    parse_csv_matrix("1,2,3\n4,5\n", "x.csv");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("ragged row 1 has 2 values, expected 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_csv_matrix("1,two\n"), std::runtime_error);
  EXPECT_THROW(parse_csv_matrix(""), std::runtime_error);
}

TEST(Matrix, RawAndCsvRoundTrip) {
  sflow::numkit::Rng rng(1);
  FeatureMatrix m{rng.normal_array({7, 3}), SourceTag::kExternal};
  for (auto fmt : {MatrixFormat::kRaw, MatrixFormat::kCsv}) {
    const auto path = scratch(fmt == MatrixFormat::kRaw ? "m.featmat" : "m.csv");
    export_matrix(path, m, fmt);
    EXPECT_EQ(import_matrix(path, fmt).values, m.values);
    EXPECT_EQ(format_for_path(path), fmt);
  }
  fs::resize_file(scratch("m.featmat"), 30);
  EXPECT_THROW(import_matrix(scratch("m.featmat"), MatrixFormat::kRaw), std::runtime_error);
  fs::resize_file(scratch("m.featmat"), 4);
  EXPECT_THROW(import_matrix(scratch("m.featmat"), MatrixFormat::kRaw), std::runtime_error);
  EXPECT_THROW(parse_matrix_format("npy"), std::invalid_argument);
}

TEST(Pccs, MatchesBruteForceOracle) {
  sflow::numkit::Rng rng(2);
  Array a = rng.normal_array({30, 12});
  for (std::size_t r = 0; r < 30; ++r)
    for (std::size_t c = 0; c < 12; ++c) a.at(r, c) += std::sin(0.3 * r + c);
  for (auto axis : {Axis::kTime, Axis::kChannel}) {
    auto rep = pccs_av({a}, axis);
    auto want = brute_pccs(a, axis);
    ASSERT_EQ(rep.cors.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(rep.cors[i], want[i], 1e-12);
    EXPECT_EQ(rep.skipped, 0u);
  }
}

TEST(Pccs, Properties) {
  sflow::numkit::Rng rng(3);
  Array a = rng.normal_array({20, 6});
  auto base = pccs_av({a}, Axis::kTime);
  // invariant to positive scaling and to a per-channel offset
  Array moved = 3.0 * a;
  for (std::size_t r = 0; r < 20; ++r)
    for (std::size_t c = 0; c < 6; ++c) moved.at(r, c) += 10.0 * c;
  auto again = pccs_av({moved}, Axis::kTime);
  for (std::size_t i = 0; i < base.cors.size(); ++i) EXPECT_NEAR(again.cors[i], base.cors[i], 1e-12);
  for (double c : base.cors) {
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
  }
  std::size_t total = 0;
  for (auto n : base.histogram.counts) total += n;
  EXPECT_EQ(total, base.cors.size());
  EXPECT_EQ(base.histogram.counts.size(), 50u);
  EXPECT_NEAR(base.bands.weak + base.bands.moderate + base.bands.strong, 1.0, 1e-12);
}

TEST(Pccs, ConstantMatrixSkipsEverything) {
  FeatureMatrix m{Array({10, 4}, 2.5)};
  auto t = pccs_av(m, Axis::kTime);
  EXPECT_TRUE(t.cors.empty());
  EXPECT_EQ(t.skipped, 9u);
  EXPECT_TRUE(std::isnan(t.median()));
  auto c = pccs_av(m, Axis::kChannel);
  EXPECT_EQ(c.skipped, 3u);
  auto js = summary_json(t);
  EXPECT_TRUE(js["median"].is_null());
  EXPECT_THROW(pccs_av(FeatureMatrix{Array({1, 4})}, Axis::kTime), std::invalid_argument);
}

TEST(Pccs, BandsAndHistogramEdges) {
  auto b = band_fractions({0.1, 0.4, 0.59, 0.6, 1.0});
  EXPECT_DOUBLE_EQ(b.weak, 0.2);
  EXPECT_DOUBLE_EQ(b.moderate, 0.4);
  EXPECT_DOUBLE_EQ(b.strong, 0.4);
  auto h = histogram({0.0, 1.0, 0.5}, 4);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{1, 0, 1, 1}));
  EXPECT_THROW(band_fractions({1.2}), std::invalid_argument);
  std::ostringstream os;
  CorrelationReport r;
  r.cors = {0.5, 0.25};
  write_cors_csv(os, r);
  EXPECT_EQ(os.str(), "index,cor\n0,0.5\n1,0.25\n");
}

TEST(Oracles, WavHeaderArithmetic) {
  std::vector<double> square(16000);
  for (std::size_t i = 0; i < square.size(); ++i) square[i] = (i / 20) % 2 ? -1.0 : 1.0;
  write_wav(scratch("sq.wav"), square, 16000);
  auto a = load_wav(scratch("sq.wav"));
  EXPECT_EQ(a.samples.size(), 16000u);
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    ASSERT_EQ(std::abs(a.samples[i]), square[i] > 0 ? 32767.0 / 32768 : 1.0) << i;
}

TEST(Oracles, ResampleCases) {
  EXPECT_NEAR(static_cast<double>(resample(std::vector<double>(3201, 0.1), 32000, 16000).size()), 1600.5, 1.0);
  auto y = resample(tone(1000, 48000, 48000), 48000, 16000);
  auto m = stft_mag(y, 1024, 256, 1024, 16000);
  std::size_t best = 0;
  for (std::size_t k = 1; k < m.channels(); ++k)
    if (m.values.at(10, k) > m.values.at(10, best)) best = k;
  EXPECT_LE(std::abs(static_cast<double>(best) - 64.0), 1.0);
}

TEST(Oracles, TrimCases) {
  auto t = tone(440, 16000, 8000);
  EXPECT_EQ(trim_silence(t, -40, 400), t);
  std::vector<double> padded(8000, 0.0);
  padded.insert(padded.end(), t.begin(), t.end());
  padded.insert(padded.end(), 8000, 0.0);
  auto y = trim_silence(padded, -40, 400);
  EXPECT_LE(std::abs(static_cast<double>(y.size()) - 8000.0), 400.0);
}

TEST(Oracles, SpectralCases) {
  auto dc = stft_mag(std::vector<double>(4096, 0.3), 1024, 256, 1024, 16000);
  for (std::size_t f = 0; f < dc.frames(); ++f) {
    double rest = 0;
    for (std::size_t k = 2; k < dc.channels(); ++k) rest += dc.values.at(f, k);
    EXPECT_GT(dc.values.at(f, 0), 100 * rest);
  }
  FeatureMatrix zero{Array({5, 513}, 0.0), SourceTag::kLinear, 62.5};
  auto mel = mel_apply(zero, 80, 0, 8000, 16000);
  EXPECT_EQ(mel.channels(), 80u);
  EXPECT_EQ(mel.values, Array({5, 80}, 0.0));
  auto fb = mel_filterbank(80, 513, 0, 8000, 16000);
  for (std::size_t r = 0; r < 80; ++r) {
    std::size_t first = 513, last = 0;
    for (std::size_t c = 0; c < 513; ++c)
      if (fb.at(r, c) > 0) {
        first = std::min(first, c);
        last = c;
      }
    ASSERT_LE(first, last) << r;
    std::size_t direction_changes = 0;
    bool rising = true;
    for (std::size_t c = first; c <= last; ++c) {
      ASSERT_GT(fb.at(r, c), 0.0) << "gap in filter " << r;
      if (c > first && rising && fb.at(r, c) < fb.at(r, c - 1)) {
        rising = false;
        ++direction_changes;
      } else if (c > first && !rising && fb.at(r, c) > fb.at(r, c - 1)) {
        ++direction_changes;
      }
    }
    EXPECT_LE(direction_changes, 1u) << r;
  }
}

TEST(Oracles, PccsCases) {
  // centered rows are positive multiples of one pattern
  Array m({4, 5});
  const double pattern[5] = {1, -2, 0.5, 3, -1};
  const double scale[4] = {1, 2, 3, 4};
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 5; ++c) m.at(r, c) = scale[r] * pattern[c];
  auto rep = pccs_av({m}, Axis::kTime);
  ASSERT_EQ(rep.cors.size(), 3u);
  for (double c : rep.cors) EXPECT_NEAR(c, 1.0, 1e-12);

  auto all = band_fractions({0.9, 0.9, 0.9});
  EXPECT_EQ(all.weak, 0.0);
  EXPECT_EQ(all.moderate, 0.0);
  EXPECT_EQ(all.strong, 1.0);
  auto thirds = band_fractions({0.1, 0.5, 0.9});
  EXPECT_DOUBLE_EQ(thirds.weak, 1.0 / 3);
  EXPECT_DOUBLE_EQ(thirds.moderate, 1.0 / 3);
  EXPECT_DOUBLE_EQ(thirds.strong, 1.0 / 3);
  EXPECT_EQ(band_fractions({0.4}).moderate, 1.0);

  sflow::numkit::Rng rng(3);
  auto noise = pccs_av({rng.normal_array({64, 1000})}, Axis::kTime);
  EXPECT_LT(noise.mean(), 0.1);
}

TEST(Oracles, CsvSmall) {
  auto m = parse_csv_matrix("1,2,3\n4,5,6");
  EXPECT_EQ(m.values, Array::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
}
