#include "sflow/featurestats/pccs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "sflow/numkit/text.hpp"

namespace sflow::featurestats {

const char* to_string(Axis axis) { return axis == Axis::kTime ? "time" : "channel"; }

Axis parse_axis(const std::string& text) {
  if (text == "time") return Axis::kTime;
  if (text == "channel") return Axis::kChannel;
  throw std::invalid_argument("unknown axis '" + text + "' (expected time or channel)");
}

double CorrelationReport::mean() const {
  if (cors.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double c : cors) s += c;
  return s / static_cast<double>(cors.size());
}

double CorrelationReport::median() const {
  if (cors.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> v = cors;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double pearson(const double* a, const double* b, std::size_t n, std::size_t stride_a, std::size_t stride_b) {
  double ma = 0.0, mb = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i * stride_a];
    mb += b[i * stride_b];
    scale = std::max({scale, std::abs(a[i * stride_a]), std::abs(b[i * stride_b])});
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i * stride_a] - ma, db = b[i * stride_b] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  // Sums of squares at rounding level of the inputs count as zero variance.
  const double tiny = 1e-24 * scale * scale * static_cast<double>(n);
  if (saa <= tiny || sbb <= tiny) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

CorrelationReport pccs_av(const FeatureMatrix& m, Axis axis, std::size_t bins) {
  validate(m);
  const std::size_t rows = m.frames(), cols = m.channels();
  const std::size_t count = axis == Axis::kTime ? rows : cols;
  const std::size_t len = axis == Axis::kTime ? cols : rows;
  if (count < 2) {
    throw std::invalid_argument(std::string("pccs_av: need at least 2 vectors along the ") + to_string(axis) +
                                " axis, got " + std::to_string(count));
  }

  // Average vector along the analysed axis, subtracted from every vector.
  std::vector<double> centered(m.values.data().begin(), m.values.data().end());
  std::vector<double> avg(len, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) avg[axis == Axis::kTime ? c : r] += m.values.at(r, c);
  for (double& v : avg) v /= static_cast<double>(count);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) centered[r * cols + c] -= avg[axis == Axis::kTime ? c : r];

  CorrelationReport rep;
  rep.axis = axis;
  for (std::size_t i = 0; i + 1 < count; ++i) {
    double p = 0.0;
    if (axis == Axis::kTime) {
      p = pearson(&centered[i * cols], &centered[(i + 1) * cols], cols);
    } else {
      p = pearson(&centered[i], &centered[i + 1], rows, cols, cols);
    }
    if (std::isnan(p)) {
      ++rep.skipped;
    } else {
      rep.cors.push_back(std::abs(p));
    }
  }
  rep.histogram = histogram(rep.cors, bins);
  rep.bands = band_fractions(rep.cors);
  return rep;
}

BandFractions band_fractions(const std::vector<double>& cors) {
  BandFractions b;
  if (cors.empty()) return b;
  std::size_t weak = 0, moderate = 0, strong = 0;
  for (double c : cors) {
    if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("band_fractions: correlation outside [0, 1]");
    if (c < 0.4) {
      ++weak;
    } else if (c < 0.6) {
      ++moderate;
    } else {
      ++strong;
    }
  }
  const double n = static_cast<double>(cors.size());
  return {weak / n, moderate / n, strong / n};
}

Histogram histogram(const std::vector<double>& cors, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("histogram: bins must be positive");
  Histogram h;
  h.counts.assign(bins, 0);
  for (std::size_t i = 0; i <= bins; ++i) h.edges.push_back(static_cast<double>(i) / static_cast<double>(bins));
  for (double c : cors) {
    const auto k = static_cast<std::size_t>(std::clamp(c, 0.0, 1.0) * static_cast<double>(bins));
    ++h.counts[std::min(k, bins - 1)];
  }
  return h;
}

void write_cors_csv(std::ostream& os, const CorrelationReport& r) {
  os << "index,cor\n";
  for (std::size_t i = 0; i < r.cors.size(); ++i) os << i << ',' << numkit::format_double(r.cors[i]) << '\n';
}

nlohmann::json summary_json(const CorrelationReport& r) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  return {{"axis", to_string(r.axis)},
          {"pairs", r.cors.size()},
          {"skipped", r.skipped},
          {"mean", num(r.mean())},
          {"median", num(r.median())},
          {"bands", {{"weak", r.bands.weak}, {"moderate", r.bands.moderate}, {"strong", r.bands.strong}}},
          {"histogram", {{"edges", r.histogram.edges}, {"counts", r.histogram.counts}}}};
}

}  // namespace sflow::featurestats
