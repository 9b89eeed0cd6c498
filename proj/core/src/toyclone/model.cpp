#include "sflow/toyclone/model.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <stdexcept>

#include "sflow/numkit/ops.hpp"
#include "sflow/toyclone/corpus.hpp"

namespace sflow::toyclone {

namespace ops = numkit::ops;
namespace layers = numkit::layers;

const char* to_string(DetailVersion v) { return v == DetailVersion::kV1 ? "v1" : "v2"; }

DetailVersion parse_detail_version(const std::string& text) {
  if (text == "v1") return DetailVersion::kV1;
  if (text == "v2") return DetailVersion::kV2;
  throw std::invalid_argument("unknown detail network version '" + text + "' (expected v1 or v2)");
}

void to_json(nlohmann::json& j, const CloneConfig& c) {
  j = nlohmann::json{{"vocab_size", c.vocab_size},
                     {"channels", c.channels},
                     {"hidden", c.hidden},
                     {"text_kernel", c.text_kernel},
                     {"text_fusion_layers", c.text_fusion_layers},
                     {"speaker_rnn_hidden", c.speaker_rnn_hidden},
                     {"speaker_widths", c.speaker_widths},
                     {"speaker_kernel", c.speaker_kernel},
                     {"instance_norm", c.instance_norm},
                     {"trunk_width", c.trunk_width},
                     {"trunk_blocks", c.trunk_blocks},
                     {"trunk_kernel", c.trunk_kernel},
                     {"time_features", c.time_features},
                     {"planes_2d", c.planes_2d},
                     {"version", to_string(c.version)},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, CloneConfig& c) {
  j.at("vocab_size").get_to(c.vocab_size);
  j.at("channels").get_to(c.channels);
  j.at("hidden").get_to(c.hidden);
  j.at("text_kernel").get_to(c.text_kernel);
  j.at("text_fusion_layers").get_to(c.text_fusion_layers);
  j.at("speaker_rnn_hidden").get_to(c.speaker_rnn_hidden);
  j.at("speaker_widths").get_to(c.speaker_widths);
  j.at("speaker_kernel").get_to(c.speaker_kernel);
  j.at("instance_norm").get_to(c.instance_norm);
  j.at("trunk_width").get_to(c.trunk_width);
  j.at("trunk_blocks").get_to(c.trunk_blocks);
  j.at("trunk_kernel").get_to(c.trunk_kernel);
  j.at("time_features").get_to(c.time_features);
  j.at("planes_2d").get_to(c.planes_2d);
  c.version = parse_detail_version(j.at("version").get<std::string>());
  j.at("seed").get_to(c.seed);
}

numkit::Array time_features(double t, std::size_t n) {
  numkit::Array f({1, n}, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::numbers::pi * std::ldexp(1.0, static_cast<int>(i / 2)) * t;
    f[i] = i % 2 == 0 ? std::sin(w) : std::cos(w);
  }
  return f;
}

Var mask_rows(const Scope& s, Var x, const MaskSpec& mask) {
  const auto& v = x.value();
  if (v.rows() != mask.total_frames) {
    throw std::invalid_argument("mask covers " + std::to_string(mask.total_frames) + " frames, feature has " +
                                std::to_string(v.rows()));
  }
  return ops::mul(x, s.constant(mask.matrix(v.cols())));
}

CloneModel::CloneModel(const CloneConfig& config) : config_(config) {
  const auto& c = config_;
  if (c.hidden % 2 != 0) throw std::invalid_argument("CloneModel: hidden width must be even");
  if (c.trunk_blocks < 2) throw std::invalid_argument("CloneModel: need at least two trunk blocks for the skip link");
  numkit::Rng rng(c.seed);

  text_.embedding = "text.embedding";
  params_.add(text_.embedding, rng.normal_array({c.vocab_size, c.hidden}, 1.0));
  for (std::size_t i = 0; i < c.text_fusion_layers; ++i) {
    const std::string name = "text.fusion" + std::to_string(i);
    text_.fusion.push_back(layers::LocalFusion1D::create(params_, name, c.hidden, c.hidden, c.text_kernel, rng));
    text_.norms.push_back(layers::LayerNorm::create(params_, name + ".norm", c.hidden));
  }
  text_.context = layers::BiRecurrent::create(params_, "text.context", c.hidden, c.hidden / 2, rng);

  speaker_.context = layers::BiRecurrent::create(params_, "speaker.context", c.channels + c.hidden,
                                                 c.speaker_rnn_hidden, rng);
  std::size_t width = speaker_.context.out();
  std::vector<std::size_t> widths = c.speaker_widths;
  widths.push_back(c.channels);
  for (std::size_t i = 0; i < widths.size(); ++i) {
    speaker_.fusion.push_back(layers::LocalFusion1D::create(params_, "speaker.fusion" + std::to_string(i), width,
                                                            widths[i], c.speaker_kernel, rng));
    width = widths[i];
  }

  auto& d = detail_;
  d.version = c.version;
  std::size_t in_width = 3 * c.channels + c.hidden;
  if (c.version == DetailVersion::kV2) {
    d.planar.push_back(layers::DepthwiseSeparable2D::create(params_, "detail.planar0", 2, c.planes_2d, 3, rng));
    d.planar.push_back(layers::DepthwiseSeparable2D::create(params_, "detail.planar1", c.planes_2d, 2, 3, rng));
    in_width = 2 * c.channels + c.hidden;
  }
  const std::size_t dw = c.trunk_width;
  d.input = layers::Affine::create(params_, "detail.input", in_width, dw, rng);
  d.time = layers::Affine::create(params_, "detail.time", c.time_features, dw, rng);
  d.position = layers::LocalFusion1D::create(params_, "detail.position", dw, dw, c.trunk_kernel, rng);
  for (std::size_t b = 0; b < c.trunk_blocks; ++b) {
    const std::string name = "detail.block" + std::to_string(b);
    d.blocks.push_back({layers::LayerNorm::create(params_, name + ".fusion_norm", dw),
                        layers::LocalFusion1D::create(params_, name + ".fusion", dw, dw, c.trunk_kernel, rng),
                        layers::LayerNorm::create(params_, name + ".attention_norm", dw),
                        layers::Attention::create(params_, name + ".attention", dw, rng)});
  }
  d.skip_merge = layers::Affine::create(params_, "detail.skip_merge", 2 * dw, dw, rng);
  d.output_norm = layers::LayerNorm::create(params_, "detail.output_norm", dw);
  d.output = layers::Affine::create(params_, "detail.output", dw, c.channels, rng);
}

Var CloneModel::text_encode(const Scope& s, const std::vector<std::size_t>& tokens,
                            const std::vector<std::size_t>& durations, const MaskSpec& mask) const {
  if (tokens.empty() || tokens.size() != durations.size()) {
    throw std::invalid_argument("text_encode: tokens and durations must be non-empty and equal in length");
  }
  std::size_t total = 0;
  for (auto d : durations) total += d;
  if (total != mask.total_frames) {
    throw std::invalid_argument("text_encode: durations sum to " + std::to_string(total) + " but the mask covers " +
                                std::to_string(mask.total_frames) + " frames");
  }
  Var x = ops::gather_rows(s.param(text_.embedding), tokens);
  for (std::size_t i = 0; i < text_.fusion.size(); ++i) x = ops::silu(text_.norms[i](s, text_.fusion[i](s, x)));
  x = text_.context(s, x);
  x = ops::gather_rows(x, frame_to_token(durations));
  return mask_rows(s, x, mask);
}

Var CloneModel::speaker_add(const Scope& s, Var f1, Var prompt, const MaskSpec& mask) const {
  const auto& pv = prompt.value();
  if (pv.rank() != 2 || pv.cols() != config_.channels || pv.rows() != f1.value().rows()) {
    throw std::invalid_argument("speaker_add: prompt " + numkit::shape_to_string(pv.shape()) + " incompatible with F1 " +
                                numkit::shape_to_string(f1.value().shape()));
  }
  Var x = speaker_.context(s, ops::concat_cols({prompt, f1}));
  for (std::size_t i = 0; i < speaker_.fusion.size(); ++i) {
    x = speaker_.fusion[i](s, x);
    if (i + 1 == speaker_.fusion.size()) break;
    if (config_.instance_norm) x = ops::instance_norm_cols(x);
    x = ops::silu(x);
  }
  return mask_rows(s, x, mask);
}

Var CloneModel::detail_direction(const Scope& s, Var state, Var f1, Var f2, Var prompt, double t) const {
  const std::size_t steps = state.value().rows();
  const std::size_t ch = config_.channels;
  for (Var v : {state, f2, prompt}) {
    if (v.value().rank() != 2 || v.value().rows() != steps || v.value().cols() != ch) {
      throw std::invalid_argument("detail_direction: expected [" + std::to_string(steps) + "x" + std::to_string(ch) +
                                  "], got " + numkit::shape_to_string(v.value().shape()));
    }
  }
  if (f1.value().rank() != 2 || f1.value().rows() != steps || f1.value().cols() != config_.hidden) {
    throw std::invalid_argument("detail_direction: F1 has shape " + numkit::shape_to_string(f1.value().shape()));
  }

  const auto& d = detail_;
  Var trunk_in;
  if (d.version == DetailVersion::kV2) {
    Var planes = ops::reshape(ops::concat_rows({ops::add(f2, prompt), state}), {2, steps, ch});
    Var fused = ops::silu(d.planar[0](s, planes));
    fused = ops::add(planes, d.planar[1](s, fused));
    Var flat = ops::reshape(fused, {2 * steps, ch});
    Var cond2d = ops::slice_rows(flat, 0, steps);
    Var state2d = ops::slice_rows(flat, steps, steps);
    trunk_in = ops::concat_cols({state2d, f1, cond2d});
  } else {
    trunk_in = ops::concat_cols({state, f1, f2, prompt});
  }

  Var x = d.input(s, trunk_in);
  Var temb = d.time(s, s.constant(time_features(t, config_.time_features)));
  x = ops::add_row(x, ops::reshape(temb, {config_.trunk_width}));
  x = ops::add(x, ops::silu(d.position(s, x)));

  Var skip;
  for (std::size_t b = 0; b < d.blocks.size(); ++b) {
    const auto& blk = d.blocks[b];
    if (b + 1 == d.blocks.size()) x = d.skip_merge(s, ops::concat_cols({x, skip}));
    x = ops::add(x, ops::silu(blk.fusion(s, blk.fusion_norm(s, x))));
    x = ops::add(x, blk.attention(s, blk.attention_norm(s, x)));
    if (b == 0) skip = x;
  }
  return d.output(s, d.output_norm(s, x));
}

}  // namespace sflow::toyclone
