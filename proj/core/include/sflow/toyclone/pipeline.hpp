#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "sflow/flowcore/flow.hpp"
#include "sflow/numkit/optim.hpp"
#include "sflow/toyclone/corpus.hpp"
#include "sflow/toyclone/mask.hpp"
#include "sflow/toyclone/model.hpp"

namespace sflow::toyclone {

/// Which conditioning features the Detail ODE sees, where its solve starts,
/// and whether the loss (and the ODE state) is restricted to masked frames.
struct Variant {
  bool use_f1 = true;
  bool use_f2 = true;
  bool masked_loss = true;
  bool coarse_init = true;
};

enum class AblationConfig { kF1F2M, kF1F2, kF2, kF1, kNoiseInit };

const char* to_string(AblationConfig config);
AblationConfig parse_ablation_config(const std::string& text);
Variant variant_for(AblationConfig config);

/// Everything a single training or inference pass needs for one utterance.
struct Example {
  std::vector<std::size_t> tokens;
  std::vector<std::size_t> durations;
  Array target;  // F3, [T x C]
  Array prompt;  // F3 at unmasked frames, zero elsewhere
  MaskSpec mask;
};

Example make_example(const SyntheticUtterance& utt, const MaskSpec& mask);

struct TrainConfig {
  std::size_t steps = 500;
  std::size_t batch = 8;
  double peak_lr = 5e-3;
  std::uint64_t warmup_steps = 25;
  double weight_decay = 0.01;
  double mask_ratio = 0.7;
  std::size_t max_frames = 80;  // longer utterances are randomly cropped first
  bool noise_train = true;
  std::uint64_t seed = 5;
};

/// Loss of one batch with per-example t ~ U[0,1] and xi drawn from `rng`; no update.
double evaluate_loss(const CloneModel& model, const Variant& variant, const std::vector<Example>& batch, Rng& rng,
                     bool noise_enabled);

/// One AdamW update on the batch. Returns the loss before the update.
double train_step(CloneModel& model, const Variant& variant, const std::vector<Example>& batch, Rng& rng,
                  numkit::OptimizerState& optimizer, bool noise_enabled);

numkit::OptimizerState make_optimizer(const TrainConfig& config);

/// Full training loop: per step, sample a batch, crop, mask, update. Returns the loss curve.
std::vector<double> train(CloneModel& model, const Variant& variant, const std::vector<SyntheticUtterance>& corpus,
                          const TrainConfig& config);

/// Reverse-solve field over one utterance; conditioning is fixed at construction.
class DetailField final : public flowcore::FlowField {
 public:
  DetailField(const CloneModel& model, const Variant& variant, Array f1, Array f2, Array prompt, MaskSpec mask);
  Array direction(const Array& state, double t, const flowcore::Conditioning& cond) const override;

 private:
  const CloneModel& model_;
  Variant variant_;
  Array f1_;
  Array f2_;
  Array prompt_;
  MaskSpec mask_;
};

struct CloneResult {
  Array features;  // [T x C]: solve endpoint on masked frames, prompt elsewhere
  flowcore::Trajectory trajectory;
};

/// Three-stage generation: text encoder, speaker adder, Euler solve of the Detail ODE.
CloneResult clone_infer(const CloneModel& model, const Variant& variant, const std::vector<std::size_t>& tokens,
                        const std::vector<std::size_t>& durations, const Array& prompt, const MaskSpec& mask,
                        std::size_t nfe, Rng& rng, bool noise_at_inference = true);

/// Rows of every trajectory point restricted to the masked frames.
flowcore::Trajectory masked_trajectory(const flowcore::Trajectory& traj, const MaskSpec& mask);

struct EvalSummary {
  double masked_mse = 0.0;
  double mean_straightness = 0.0;
};

/// Seeded masks per utterance (ratio `mask_ratio`), solve at `nfe`, and score the
/// masked frames against ground truth.
EvalSummary evaluate_heldout(const CloneModel& model, const Variant& variant,
                             const std::vector<SyntheticUtterance>& heldout, std::size_t nfe, std::uint64_t seed,
                             bool noise_at_inference = true, double mask_ratio = 0.7);

struct AblationRow {
  AblationConfig config = AblationConfig::kF1F2M;
  double masked_mse = 0.0;
  double mean_straightness = 0.0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Trains one model per configuration with shared seeds and budget, then scores held-out utterances at `nfe`.
/// With repeats > 1 every configuration is trained under seeds seed, seed+1, ... and the metrics averaged.
std::vector<AblationRow> ablation_suite(const std::vector<SyntheticUtterance>& train_corpus,
                                        const std::vector<SyntheticUtterance>& heldout,
                                        const std::vector<AblationConfig>& configs, const CloneConfig& model_config,
                                        const TrainConfig& train_config, std::size_t nfe = 8,
                                        std::uint64_t eval_seed = 99, std::size_t repeats = 1,
                                        bool noise_at_inference = true);

struct NfeSweepRow {
  std::size_t nfe = 0;
  double masked_mse = 0.0;
  double mean_straightness = 0.0;
};

std::vector<NfeSweepRow> nfe_sweep(const CloneModel& model, const Variant& variant,
                                   const std::vector<SyntheticUtterance>& heldout, const std::vector<std::size_t>& nfes,
                                   std::uint64_t seed, bool noise_at_inference = true);

/// Model parameters plus config and variant in the checkpoint metadata.
void save_clone(const std::filesystem::path& path, const CloneModel& model, const Variant& variant);

struct LoadedClone {
  std::unique_ptr<CloneModel> model;
  Variant variant;
};

/// Throws when the file is missing or its parameters do not match the stored config.
LoadedClone load_clone(const std::filesystem::path& path);

struct DefaultCorpora {
  std::vector<SyntheticUtterance> train;
  std::vector<SyntheticUtterance> heldout;
};

/// The bundled corpus: 64 training utterances plus 32 held-out ones drawn from the same generator.
DefaultCorpora default_corpora(std::uint64_t seed = 1234, std::size_t n_train = 64, std::size_t n_heldout = 32);

}  // namespace sflow::toyclone
