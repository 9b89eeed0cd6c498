#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sflow/numkit/autodiff.hpp"
#include "sflow/numkit/layers.hpp"
#include "sflow/toyclone/mask.hpp"

namespace sflow::toyclone {

using numkit::Scope;
using numkit::Var;

enum class DetailVersion { kV1, kV2 };

const char* to_string(DetailVersion v);
DetailVersion parse_detail_version(const std::string& text);

struct CloneConfig {
  std::size_t vocab_size = 20;
  std::size_t channels = 16;          // C, mel-like feature width
  std::size_t hidden = 32;            // H, text feature width
  std::size_t text_kernel = 5;
  std::size_t text_fusion_layers = 2;
  std::size_t speaker_rnn_hidden = 16;  // per direction
  std::vector<std::size_t> speaker_widths = {24, 20};  // reduced toward C; a final layer maps to C
  std::size_t speaker_kernel = 3;
  bool instance_norm = true;
  std::size_t trunk_width = 32;
  std::size_t trunk_blocks = 4;
  std::size_t trunk_kernel = 5;
  std::size_t time_features = 8;
  std::size_t planes_2d = 8;
  DetailVersion version = DetailVersion::kV1;
  std::uint64_t seed = 11;
};

void to_json(nlohmann::json& j, const CloneConfig& c);
void from_json(const nlohmann::json& j, CloneConfig& c);

/// Text encoder: embedding -> 1D local fusion stack -> bidirectional context.
struct TextEncoder {
  std::string embedding;
  std::vector<numkit::layers::LocalFusion1D> fusion;
  std::vector<numkit::layers::LayerNorm> norms;
  numkit::layers::BiRecurrent context;
};

/// Speaker adder: bidirectional context over [prompt | F1] then a
/// channel-reducing local fusion stack ending at C channels.
struct SpeakerAdder {
  numkit::layers::BiRecurrent context;
  std::vector<numkit::layers::LocalFusion1D> fusion;
};

struct DetailBlock {
  numkit::layers::LayerNorm fusion_norm;
  numkit::layers::LocalFusion1D fusion;
  numkit::layers::LayerNorm attention_norm;
  numkit::layers::Attention attention;
};

/// Detail ODE direction estimator. Version 2 adds two depthwise-separable 2D
/// layers over the planes [F2 + prompt, state] ahead of the trunk.
struct DetailNet {
  DetailVersion version = DetailVersion::kV1;
  std::vector<numkit::layers::DepthwiseSeparable2D> planar;  // empty for v1, two layers for v2
  numkit::layers::Affine input;
  numkit::layers::Affine time;
  numkit::layers::LocalFusion1D position;
  std::vector<DetailBlock> blocks;
  numkit::layers::Affine skip_merge;
  numkit::layers::LayerNorm output_norm;
  numkit::layers::Affine output;
};

class CloneModel {
 public:
  explicit CloneModel(const CloneConfig& config);

  const CloneConfig& config() const { return config_; }
  numkit::ParameterSet& params() { return params_; }
  const numkit::ParameterSet& params() const { return params_; }
  const DetailNet& detail() const { return detail_; }

  /// F1 [T x H]: encoded tokens upsampled by duration, zero at unmasked frames.
  Var text_encode(const Scope& s, const std::vector<std::size_t>& tokens, const std::vector<std::size_t>& durations,
                  const MaskSpec& mask) const;

  /// F2 [T x C]: prompt and F1 fused into a coarse feature, zero at unmasked frames.
  Var speaker_add(const Scope& s, Var f1, Var prompt, const MaskSpec& mask) const;

  /// Direction [T x C] for state h_t given the conditioning features.
  Var detail_direction(const Scope& s, Var state, Var f1, Var f2, Var prompt, double t) const;

 private:
  CloneConfig config_;
  numkit::ParameterSet params_;
  TextEncoder text_;
  SpeakerAdder speaker_;
  DetailNet detail_;
};

/// Row mask as a constant [T x width] on the scope's tape.
Var mask_rows(const Scope& s, Var x, const MaskSpec& mask);

/// Sinusoidal features of t: sin/cos(pi * 2^k * t), k = 0..n/2-1.
numkit::Array time_features(double t, std::size_t n);

}  // namespace sflow::toyclone
