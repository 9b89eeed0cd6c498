#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sflow/featurestats/matrix.hpp"

namespace sflow::featurestats {

enum class Axis { kTime, kChannel };

const char* to_string(Axis axis);
Axis parse_axis(const std::string& text);

struct BandFractions {
  double weak = 0.0;      // < 0.4
  double moderate = 0.0;  // [0.4, 0.6)
  double strong = 0.0;    // >= 0.6
};

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges on [0, 1]
  std::vector<std::size_t> counts;
};

struct CorrelationReport {
  Axis axis = Axis::kTime;
  std::vector<double> cors;
  std::size_t skipped = 0;
  Histogram histogram;
  BandFractions bands;

  double mean() const;
  double median() const;
};

/// Pearson correlation of two equal-length (possibly strided) vectors; NaN when either has zero variance.
double pearson(const double* a, const double* b, std::size_t n, std::size_t stride_a = 1, std::size_t stride_b = 1);

/// Cor_i = |pearson(s_i - E, s_{i+1} - E)| for adjacent vectors along `axis`, where E is the
/// average vector along that axis. Pairs with a zero-variance side are counted in `skipped`.
CorrelationReport pccs_av(const FeatureMatrix& m, Axis axis, std::size_t bins = 50);

BandFractions band_fractions(const std::vector<double>& cors);
Histogram histogram(const std::vector<double>& cors, std::size_t bins = 50);

/// "index,cor" per pair.
void write_cors_csv(std::ostream& os, const CorrelationReport& r);
nlohmann::json summary_json(const CorrelationReport& r);

}  // namespace sflow::featurestats
