#include "sflow/toyclone/mask.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sflow::toyclone {

numkit::Array MaskSpec::row_weights() const {
  numkit::Array w({total_frames}, 0.0);
  for (std::size_t f = start; f < start + length; ++f) w[f] = 1.0;
  return w;
}

numkit::Array MaskSpec::matrix(std::size_t channels) const {
  numkit::Array m({total_frames, channels}, 0.0);
  for (std::size_t f = start; f < start + length; ++f)
    for (std::size_t c = 0; c < channels; ++c) m.at(f, c) = 1.0;
  return m;
}

numkit::Array MaskSpec::complement(std::size_t channels) const {
  numkit::Array m({total_frames, channels}, 1.0);
  for (std::size_t f = start; f < start + length; ++f)
    for (std::size_t c = 0; c < channels; ++c) m.at(f, c) = 0.0;
  return m;
}

std::size_t masked_length(std::size_t total_frames, double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw std::invalid_argument("mask ratio must lie in [0, 1]");
  const double exact = ratio * static_cast<double>(total_frames);
  const auto n = static_cast<std::size_t>(std::floor(exact + 0.5 + 1e-9));
  return std::min(n, total_frames);
}

MaskSpec make_mask(std::size_t total_frames, double ratio, numkit::Rng& rng) {
  if (total_frames == 0) throw std::invalid_argument("make_mask: T must be at least 1");
  const std::size_t length = masked_length(total_frames, ratio);
  std::size_t start = 0;
  if (length > 0 && length < total_frames) {
    start = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(total_frames - length)));
  }
  return {total_frames, ratio, start, length};
}

MaskSpec fixed_mask(std::size_t total_frames, double ratio, std::size_t start) {
  const std::size_t length = masked_length(total_frames, ratio);
  if (start + length > total_frames) {
    throw std::out_of_range("fixed_mask: run [" + std::to_string(start) + ", " + std::to_string(start + length) +
                            ") exceeds " + std::to_string(total_frames) + " frames");
  }
  return {total_frames, ratio, start, length};
}

}  // namespace sflow::toyclone
