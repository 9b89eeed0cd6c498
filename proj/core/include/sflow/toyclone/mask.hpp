#pragma once

#include <cstddef>

#include "sflow/numkit/array.hpp"
#include "sflow/numkit/random.hpp"

namespace sflow::toyclone {

/// One contiguous run of masked (to-be-generated) frames: [start, start + length).
struct MaskSpec {
  std::size_t total_frames = 0;
  double ratio = 0.0;
  std::size_t start = 0;
  std::size_t length = 0;

  bool masked(std::size_t frame) const { return frame >= start && frame < start + length; }
  /// [T] with 1 at masked frames.
  numkit::Array row_weights() const;
  /// [T x channels] with 1 on masked rows.
  numkit::Array matrix(std::size_t channels) const;
  /// [T x channels] with 1 on unmasked rows.
  numkit::Array complement(std::size_t channels) const;
};

/// Run length for a ratio: round-half-up of ratio * T, tolerant to the
/// representation error of decimal ratios (0.7 * 5 rounds to 4).
std::size_t masked_length(std::size_t total_frames, double ratio);

/// Contiguous mask of masked_length(T, ratio) frames with a uniformly random start.
MaskSpec make_mask(std::size_t total_frames, double ratio, numkit::Rng& rng);

/// Mask with an explicit start; throws when the run leaves [0, T).
MaskSpec fixed_mask(std::size_t total_frames, double ratio, std::size_t start);

}  // namespace sflow::toyclone
