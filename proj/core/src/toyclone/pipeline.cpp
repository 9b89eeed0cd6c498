#include "sflow/toyclone/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <optional>
#include <stdexcept>

#include "sflow/numkit/checkpoint.hpp"
#include "sflow/numkit/ops.hpp"

namespace sflow::toyclone {

namespace ops = numkit::ops;
using numkit::Tape;

const char* to_string(AblationConfig config) {
  switch (config) {
    case AblationConfig::kF1F2M: return "F1+F2+M";
    case AblationConfig::kF1F2: return "F1+F2";
    case AblationConfig::kF2: return "F2";
    case AblationConfig::kF1: return "F1";
    case AblationConfig::kNoiseInit: return "noise-init";
  }
  return "?";
}

AblationConfig parse_ablation_config(const std::string& text) {
  for (auto c : {AblationConfig::kF1F2M, AblationConfig::kF1F2, AblationConfig::kF2, AblationConfig::kF1,
                 AblationConfig::kNoiseInit}) {
    if (text == to_string(c)) return c;
  }
  throw std::invalid_argument("unknown ablation config '" + text +
                              "' (expected F1+F2+M, F1+F2, F2, F1 or noise-init)");
}

Variant variant_for(AblationConfig config) {
  switch (config) {
    case AblationConfig::kF1F2M: return {true, true, true, true};
    case AblationConfig::kF1F2: return {true, true, false, true};
    case AblationConfig::kF2: return {false, true, true, true};
    case AblationConfig::kF1: return {true, false, true, true};
    case AblationConfig::kNoiseInit: return {true, false, true, false};
  }
  return {};
}

Example make_example(const SyntheticUtterance& utt, const MaskSpec& mask) {
  if (mask.total_frames != utt.frames()) {
    throw std::invalid_argument("make_example: mask covers " + std::to_string(mask.total_frames) +
                                " frames, utterance has " + std::to_string(utt.frames()));
  }
  return {utt.tokens, utt.durations, utt.f3, numkit::hadamard(utt.f3, mask.complement(utt.f3.cols())), mask};
}

namespace {

struct Conditions {
  Var f1;  // as seen by the detail net
  Var f2;
  Var start;  // x0 before noise
};

Conditions build_conditions(const CloneModel& model, const Variant& variant, const Scope& s, const Example& ex,
                            Var prompt) {
  Var f1 = model.text_encode(s, ex.tokens, ex.durations, ex.mask);
  const std::size_t steps = ex.mask.total_frames, ch = model.config().channels;
  Var zero_c = s.constant(Array({steps, ch}, 0.0));
  Var f2 = variant.coarse_init ? model.speaker_add(s, f1, prompt, ex.mask) : zero_c;
  Conditions c{f1, variant.use_f2 ? f2 : zero_c, variant.coarse_init ? f2 : zero_c};
  if (!variant.use_f1) c.f1 = s.constant(Array(f1.value().shape(), 0.0));
  return c;
}

Var example_loss(const CloneModel& model, const Variant& variant, const Scope& s, const Example& ex, Rng& rng,
                 bool noise_enabled) {
  const std::size_t steps = ex.mask.total_frames, ch = model.config().channels;
  numkit::require_same_shape(ex.target, Array({steps, ch}), "training target");
  Var prompt = s.constant(ex.prompt);
  const Conditions c = build_conditions(model, variant, s, ex, prompt);

  const double t = rng.uniform(0.0, 1.0);
  Array xi = (noise_enabled || !variant.coarse_init) ? rng.normal_array({steps, ch}, 1.0) : Array({steps, ch}, 0.0);
  Array target = ex.target;
  if (variant.masked_loss) {
    const Array m = ex.mask.matrix(ch);
    xi = numkit::hadamard(xi, m);
    target = numkit::hadamard(target, m);
  }
  Var h0 = ops::add(c.start, s.constant(std::move(xi)));
  Var h1 = s.constant(std::move(target));
  Var state = flowcore::graph::interpolate(h0, h1, t);
  Var pred = model.detail_direction(s, state, c.f1, c.f2, prompt, t);
  if (variant.masked_loss) return flowcore::graph::fm_loss(pred, h0, h1, ex.mask.row_weights());
  return flowcore::graph::fm_loss(pred, h0, h1);
}

Var batch_loss(const CloneModel& model, const Variant& variant, const Scope& s, const std::vector<Example>& batch,
               Rng& rng, bool noise_enabled) {
  if (batch.empty()) throw std::invalid_argument("training batch is empty");
  Var total;
  for (const auto& ex : batch) {
    Var l = example_loss(model, variant, s, ex, rng, noise_enabled);
    total = total.valid() ? ops::add(total, l) : l;
  }
  return ops::scale(total, 1.0 / static_cast<double>(batch.size()));
}

}  // namespace

double evaluate_loss(const CloneModel& model, const Variant& variant, const std::vector<Example>& batch, Rng& rng,
                     bool noise_enabled) {
  Tape tape;
  const Scope s{tape, model.params()};
  return batch_loss(model, variant, s, batch, rng, noise_enabled).value().item();
}

double train_step(CloneModel& model, const Variant& variant, const std::vector<Example>& batch, Rng& rng,
                  numkit::OptimizerState& optimizer, bool noise_enabled) {
  Tape tape;
  const Scope s{tape, model.params()};
  Var loss = batch_loss(model, variant, s, batch, rng, noise_enabled);
  const double value = loss.value().item();
  if (!std::isfinite(value)) {
    throw numkit::NumericError("non-finite training loss at step " + std::to_string(optimizer.step));
  }
  numkit::adamw_step(model.params(), tape.backward(loss), optimizer);
  return value;
}

numkit::OptimizerState make_optimizer(const TrainConfig& config) {
  numkit::OptimizerState st;
  st.config.peak_lr = config.peak_lr;
  st.config.warmup_steps = std::min<std::uint64_t>(config.warmup_steps, config.steps / 5);  // short runs
  st.config.total_steps = config.steps;
  st.config.weight_decay = config.weight_decay;
  return st;
}

std::vector<double> train(CloneModel& model, const Variant& variant, const std::vector<SyntheticUtterance>& corpus,
                          const TrainConfig& config) {
  if (corpus.empty()) throw std::invalid_argument("train: corpus is empty");
  if (config.steps == 0 || config.batch == 0) throw std::invalid_argument("train: steps and batch must be positive");
  Rng rng(config.seed);
  auto optimizer = make_optimizer(config);
  std::vector<double> losses;
  losses.reserve(config.steps);
  for (std::size_t step = 0; step < config.steps; ++step) {
    std::vector<Example> batch;
    for (std::size_t b = 0; b < config.batch; ++b) {
      const auto& utt = corpus[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(corpus.size()) - 1))];
      SyntheticUtterance piece = utt;
      if (utt.frames() > config.max_frames) {
        const auto start = rng.uniform_int(0, static_cast<std::int64_t>(utt.frames() - config.max_frames));
        piece = crop_utterance(utt, static_cast<std::size_t>(start), config.max_frames);
      }
      batch.push_back(make_example(piece, make_mask(piece.frames(), config.mask_ratio, rng)));
    }
    losses.push_back(train_step(model, variant, batch, rng, optimizer, config.noise_train));
  }
  return losses;
}

DetailField::DetailField(const CloneModel& model, const Variant& variant, Array f1, Array f2, Array prompt,
                         MaskSpec mask)
    : model_(model),
      variant_(variant),
      f1_(std::move(f1)),
      f2_(std::move(f2)),
      prompt_(std::move(prompt)),
      mask_(mask) {}

Array DetailField::direction(const Array& state, double t, const flowcore::Conditioning&) const {
  Tape tape;
  const Scope s{tape, model_.params()};
  Var out = model_.detail_direction(s, s.constant(state), s.constant(f1_), s.constant(f2_), s.constant(prompt_), t);
  if (variant_.masked_loss) out = mask_rows(s, out, mask_);
  return out.value();
}

CloneResult clone_infer(const CloneModel& model, const Variant& variant, const std::vector<std::size_t>& tokens,
                        const std::vector<std::size_t>& durations, const Array& prompt, const MaskSpec& mask,
                        std::size_t nfe, Rng& rng, bool noise_at_inference) {
  if (nfe == 0) throw std::invalid_argument("clone_infer: nfe must be at least 1");
  const std::size_t steps = mask.total_frames, ch = model.config().channels;
  numkit::require_same_shape(prompt, Array({steps, ch}), "clone_infer prompt");

  Example ex{tokens, durations, Array({steps, ch}, 0.0), prompt, mask};
  Tape tape;
  const Scope s{tape, model.params()};
  const Conditions c = build_conditions(model, variant, s, ex, s.constant(prompt));

  Array x0 = c.start.value();
  if (noise_at_inference || !variant.coarse_init) {
    Array xi = rng.normal_array({steps, ch}, 1.0);
    if (variant.masked_loss) xi = numkit::hadamard(xi, mask.matrix(ch));
    x0 += xi;
  }
  const DetailField field(model, variant, c.f1.value(), c.f2.value(), prompt, mask);
  CloneResult result;
  result.trajectory = flowcore::euler_solve(field, x0, nfe);

  const Array& end = result.trajectory.endpoint();
  result.features = prompt;
  for (std::size_t f = mask.start; f < mask.start + mask.length; ++f)
    for (std::size_t k = 0; k < ch; ++k) result.features.at(f, k) = end.at(f, k);
  return result;
}

flowcore::Trajectory masked_trajectory(const flowcore::Trajectory& traj, const MaskSpec& mask) {
  if (mask.length == 0) throw std::invalid_argument("masked_trajectory: mask is empty");
  flowcore::Trajectory out;
  out.nfe = traj.nfe;
  for (const auto& p : traj.points) {
    const std::size_t ch = p.state.cols();
    Array rows({mask.length, ch}, 0.0);
    for (std::size_t f = 0; f < mask.length; ++f)
      for (std::size_t k = 0; k < ch; ++k) rows.at(f, k) = p.state.at(mask.start + f, k);
    out.points.push_back({p.t, std::move(rows)});
  }
  return out;
}

EvalSummary evaluate_heldout(const CloneModel& model, const Variant& variant,
                             const std::vector<SyntheticUtterance>& heldout, std::size_t nfe, std::uint64_t seed,
                             bool noise_at_inference, double mask_ratio) {
  if (heldout.empty()) throw std::invalid_argument("evaluate_heldout: no utterances");
  Rng master(seed);
  double sq = 0.0, count = 0.0, straight = 0.0;
  for (const auto& utt : heldout) {
    Rng rng = master.fork();
    const MaskSpec mask = make_mask(utt.frames(), mask_ratio, rng);
    const Example ex = make_example(utt, mask);
    const CloneResult r = clone_infer(model, variant, utt.tokens, utt.durations, ex.prompt, mask, nfe, rng,
                                      noise_at_inference);
    for (std::size_t f = mask.start; f < mask.start + mask.length; ++f) {
      for (std::size_t k = 0; k < utt.f3.cols(); ++k) {
        const double d = r.features.at(f, k) - utt.f3.at(f, k);
        sq += d * d;
        count += 1.0;
      }
    }
    straight += flowcore::straightness_error(masked_trajectory(r.trajectory, mask));
  }
  return {sq / count, straight / static_cast<double>(heldout.size())};
}

std::vector<AblationRow> ablation_suite(const std::vector<SyntheticUtterance>& train_corpus,
                                        const std::vector<SyntheticUtterance>& heldout,
                                        const std::vector<AblationConfig>& configs, const CloneConfig& model_config,
                                        const TrainConfig& train_config, std::size_t nfe, std::uint64_t eval_seed,
                                        std::size_t repeats, bool noise_at_inference) {
  if (repeats == 0) throw std::invalid_argument("ablation_suite: repeats must be at least 1");
  std::vector<AblationRow> rows;
  for (auto config : configs) {
    const Variant v = variant_for(config);
    AblationRow row{config};
    for (std::size_t r = 0; r < repeats; ++r) {
      TrainConfig tc = train_config;
      tc.seed = train_config.seed + r;
      CloneModel model(model_config);
      const auto losses = train(model, v, train_corpus, tc);
      const EvalSummary e = evaluate_heldout(model, v, heldout, nfe, eval_seed, noise_at_inference, tc.mask_ratio);
      row.masked_mse += e.masked_mse;
      row.mean_straightness += e.mean_straightness;
      row.initial_loss += losses.front();
      row.final_loss += losses.back();
    }
    const double n = static_cast<double>(repeats);
    row.masked_mse /= n;
    row.mean_straightness /= n;
    row.initial_loss /= n;
    row.final_loss /= n;
    rows.push_back(row);
  }
  return rows;
}

std::vector<NfeSweepRow> nfe_sweep(const CloneModel& model, const Variant& variant,
                                   const std::vector<SyntheticUtterance>& heldout, const std::vector<std::size_t>& nfes,
                                   std::uint64_t seed, bool noise_at_inference) {
  std::vector<NfeSweepRow> rows;
  for (auto n : nfes) {
    const EvalSummary e = evaluate_heldout(model, variant, heldout, n, seed, noise_at_inference);
    rows.push_back({n, e.masked_mse, e.mean_straightness});
  }
  return rows;
}

void save_clone(const std::filesystem::path& path, const CloneModel& model, const Variant& variant) {
  nlohmann::json meta;
  meta["model"] = model.config();
  meta["variant"] = {{"use_f1", variant.use_f1},
                     {"use_f2", variant.use_f2},
                     {"masked_loss", variant.masked_loss},
                     {"coarse_init", variant.coarse_init}};
  numkit::save_checkpoint(path, {model.params(), meta.dump()});
}

LoadedClone load_clone(const std::filesystem::path& path) {
  numkit::Checkpoint ckpt = numkit::load_checkpoint(path);
  nlohmann::json meta;
  CloneConfig config;
  Variant variant;
  try {
    meta = nlohmann::json::parse(ckpt.metadata);
    config = meta.at("model").get<CloneConfig>();
    const auto& v = meta.at("variant");
    variant = {v.at("use_f1").get<bool>(), v.at("use_f2").get<bool>(), v.at("masked_loss").get<bool>(),
               v.at("coarse_init").get<bool>()};
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint '" + path.string() + "' has no usable model metadata: " + e.what());
  }
  auto model = std::make_unique<CloneModel>(config);
  auto& params = model->params();
  if (params.size() != ckpt.params.size()) {
    throw std::runtime_error("checkpoint '" + path.string() + "' holds " + std::to_string(ckpt.params.size()) +
                             " parameters, model expects " + std::to_string(params.size()));
  }
  for (const auto& [name, value] : ckpt.params.entries()) {
    if (!params.contains(name) || params.get(name).shape() != value.shape()) {
      throw std::runtime_error("checkpoint '" + path.string() + "': parameter '" + name +
                               "' missing from or mis-shaped for the stored config");
    }
    params.get(name) = value;
  }
  return {std::move(model), variant};
}

DefaultCorpora default_corpora(std::uint64_t seed, std::size_t n_train, std::size_t n_heldout) {
  CorpusConfig cfg;
  cfg.seed = seed;
  cfg.n_utts = n_train + n_heldout;
  auto all = synth_corpus(cfg);
  DefaultCorpora out;
  out.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.heldout.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
  return out;
}

}  // namespace sflow::toyclone
