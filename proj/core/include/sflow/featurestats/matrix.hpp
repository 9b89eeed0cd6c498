#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "sflow/numkit/array.hpp"

namespace sflow::featurestats {

using numkit::Array;

enum class SourceTag { kLinear, kMel, kExternal };

const char* to_string(SourceTag tag);

/// Frames x channels. Rows are time, columns are channels.
struct FeatureMatrix {
  Array values;
  SourceTag source = SourceTag::kExternal;
  double frame_rate = 0.0;  // frames per second, 0 when unknown
  std::array<std::string, 2> axis_labels = {"time", "channel"};

  std::size_t frames() const { return values.rows(); }
  std::size_t channels() const { return values.cols(); }
};

/// Checks rank 2, T >= 1, C >= 1 and finite values; throws std::invalid_argument.
void validate(const FeatureMatrix& m);

enum class MatrixFormat { kCsv, kRaw };

MatrixFormat parse_matrix_format(const std::string& text);
/// ".csv" -> csv, anything else -> raw.
MatrixFormat format_for_path(const std::filesystem::path& path);

// Raw layout: "FEATMAT1" (8 bytes), u32 T, u32 C, then T*C float64, row-major, all little-endian.
FeatureMatrix import_matrix(const std::filesystem::path& path, MatrixFormat format);
void export_matrix(const std::filesystem::path& path, const FeatureMatrix& m, MatrixFormat format);

FeatureMatrix parse_csv_matrix(const std::string& text, const std::string& origin = "<csv>");

}  // namespace sflow::featurestats
