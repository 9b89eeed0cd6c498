#include <cstdio>
#include <sstream>

#include "commands.hpp"
#include "sflow/featurestats/matrix.hpp"
#include "sflow/numkit/svg.hpp"
#include "sflow/numkit/text.hpp"
#include "sflow/toyclone/pipeline.hpp"

namespace sflow::cli {

using numkit::format_double;
namespace svg = numkit::svg;
namespace tc = toyclone;

namespace {

const std::vector<std::string> kAllConfigs = {"F1+F2+M", "F1+F2", "F2", "F1", "noise-init"};

nlohmann::json model_keys() {
  const tc::CloneConfig d;
  return {{"model_seed", d.seed}, {"version", tc::to_string(d.version)}, {"instance_norm", d.instance_norm}};
}

nlohmann::json train_keys() {
  const tc::TrainConfig d;
  return {{"steps", d.steps},
          {"batch", d.batch},
          {"peak_lr", d.peak_lr},
          {"warmup_steps", d.warmup_steps},
          {"weight_decay", d.weight_decay},
          {"mask_ratio", d.mask_ratio},
          {"max_frames", d.max_frames},
          {"noise_train", d.noise_train}};
}

nlohmann::json corpus_keys() { return {{"corpus_seed", std::uint64_t{1234}}, {"heldout", std::size_t{32}}}; }

nlohmann::json joined(std::initializer_list<nlohmann::json> parts) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& p : parts) out.update(p);
  return out;
}

tc::CloneConfig model_config(const Settings& s) {
  tc::CloneConfig c;
  c.seed = s.u64("model_seed");
  try {
    c.version = tc::parse_detail_version(s.text("version"));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  c.instance_norm = s.flag("instance_norm");
  return c;
}

tc::TrainConfig train_config(const Settings& s, std::uint64_t seed) {
  tc::TrainConfig c;
  c.steps = s.size("steps");
  c.batch = s.size("batch");
  c.peak_lr = s.real("peak_lr");
  c.warmup_steps = s.u64("warmup_steps");
  c.weight_decay = s.real("weight_decay");
  c.mask_ratio = s.real("mask_ratio");
  c.max_frames = s.size("max_frames");
  c.noise_train = s.flag("noise_train");
  c.seed = seed;
  if (c.steps == 0 || c.batch == 0) throw UsageError("steps and batch must be positive");
  if (!(c.mask_ratio > 0.0 && c.mask_ratio <= 1.0)) throw UsageError("mask_ratio must lie in (0, 1]");
  if (c.max_frames == 0) throw UsageError("max_frames must be positive");
  return c;
}

tc::AblationConfig ablation(const std::string& name) {
  try {
    return tc::parse_ablation_config(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

tc::DefaultCorpora corpora(const Settings& s) { return tc::default_corpora(s.u64("corpus_seed"), 64, s.size("heldout")); }

std::string two_digits(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return buf;
}

std::vector<std::size_t> positive(const std::vector<std::size_t>& nfes) {
  if (nfes.empty()) throw UsageError("nfe list is empty");
  for (auto n : nfes)
    if (n == 0) throw UsageError("nfe values must be positive");
  return nfes;
}

}  // namespace

nlohmann::json toyclone_train_defaults() {
  return joined({{{"seed", tc::TrainConfig{}.seed},
                  {"ablation", "F1+F2+M"},
                  {"corpus", ""},
                  {"eval_nfe", std::size_t{8}},
                  {"eval_seed", std::uint64_t{99}},
                  {"noise_at_inference", true}},
                 model_keys(), train_keys(), corpus_keys()});
}

int run_toyclone_train(const Settings& s, RunDir& dir, std::ostream& log) {
  const auto mc = model_config(s);
  const auto tcfg = train_config(s, s.u64("seed"));
  const auto config = ablation(s.text("ablation"));
  const auto variant = tc::variant_for(config);
  auto data = corpora(s);
  if (!s.text("corpus").empty()) data.train = tc::load_corpus(s.text("corpus"));

  tc::CloneModel model(mc);
  const auto losses = tc::train(model, variant, data.train, tcfg);
  tc::save_clone(dir.path("model.ckpt"), model, variant);
  dir.track("model.ckpt");

  std::ostringstream csv;
  csv << "step,loss\n";
  svg::Series curve{"", {}, {}};
  for (std::size_t i = 0; i < losses.size(); ++i) {
    csv << i << ',' << format_double(losses[i]) << '\n';
    curve.x.push_back(static_cast<double>(i));
    curve.y.push_back(losses[i]);
  }
  dir.write_text("loss.csv", csv.str());
  dir.write_text("loss.svg", svg::line_plot({std::string("training loss, ") + tc::to_string(config), "step",
                                             "masked FM loss", false, true},
                                            {curve}));

  const auto eval = tc::evaluate_heldout(model, variant, data.heldout, positive({s.size("eval_nfe")}).front(),
                                         s.u64("eval_seed"), s.flag("noise_at_inference"), tcfg.mask_ratio);
  std::ostringstream metrics;
  metrics << "metric,value\n"
          << "initial_loss," << format_double(losses.front()) << '\n'
          << "final_loss," << format_double(losses.back()) << '\n'
          << "loss_ratio," << format_double(losses.back() / losses.front()) << '\n'
          << "heldout_masked_mse," << format_double(eval.masked_mse) << '\n'
          << "heldout_straightness," << format_double(eval.mean_straightness) << '\n';
  dir.write_text("metrics.csv", metrics.str());
  log << "trained " << tc::to_string(config) << " for " << losses.size() << " steps: loss "
      << format_double(losses.front()) << " -> " << format_double(losses.back()) << ", held-out masked MSE "
      << format_double(eval.masked_mse) << '\n';
  return 0;
}

nlohmann::json toyclone_infer_defaults() {
  return joined({{{"checkpoint", ""},
                  {"seed", std::uint64_t{99}},
                  {"nfe", std::vector<std::size_t>{8}},
                  {"utterances", std::size_t{4}},
                  {"mask_ratio", 0.7},
                  {"noise_at_inference", true},
                  {"format", "csv"}},
                 corpus_keys()});
}

int run_toyclone_infer(const Settings& s, RunDir& dir, std::ostream& log) {
  const std::string ckpt = s.text("checkpoint");
  if (ckpt.empty()) throw UsageError("toyclone infer needs --checkpoint <path>");
  const auto nfes = positive(s.sizes("nfe"));
  const auto format = featurestats::parse_matrix_format(s.text("format"));
  const std::string ext = format == featurestats::MatrixFormat::kCsv ? ".csv" : ".featmat";
  const auto loaded = tc::load_clone(ckpt);
  const auto data = corpora(s);
  const std::size_t n = s.size("utterances");
  if (n == 0 || n > data.heldout.size()) {
    throw UsageError("utterances must lie in [1, " + std::to_string(data.heldout.size()) + "]");
  }

  numkit::Rng master(s.u64("seed"));
  std::ostringstream metrics;
  metrics << "utterance,nfe,frames,mask_start,mask_length,masked_mse\n";
  for (std::size_t u = 0; u < n; ++u) {
    const auto& utt = data.heldout[u];
    numkit::Rng rng = master.fork();
    const auto mask = tc::make_mask(utt.frames(), s.real("mask_ratio"), rng);
    const auto ex = tc::make_example(utt, mask);
    for (auto nfe : nfes) {
      numkit::Rng local = rng;  // same xi for every nfe
      const auto r = tc::clone_infer(*loaded.model, loaded.variant, utt.tokens, utt.durations, ex.prompt, mask, nfe,
                                     local, s.flag("noise_at_inference"));
      double sq = 0.0;
      for (std::size_t f = mask.start; f < mask.start + mask.length; ++f)
        for (std::size_t k = 0; k < utt.f3.cols(); ++k) {
          const double d = r.features.at(f, k) - utt.f3.at(f, k);
          sq += d * d;
        }
      const double mse = mask.length ? sq / static_cast<double>(mask.length * utt.f3.cols()) : 0.0;
      const std::string name = "generated/utt" + two_digits(u) + "_nfe" + std::to_string(nfe) + ext;
      featurestats::FeatureMatrix out{r.features, featurestats::SourceTag::kExternal};
      featurestats::export_matrix(dir.prepare(name), out, format);
      dir.track(name);
      metrics << u << ',' << nfe << ',' << utt.frames() << ',' << mask.start << ',' << mask.length << ','
              << format_double(mse) << '\n';
    }
  }
  dir.write_text("metrics.csv", metrics.str());
  log << "generated " << n << " utterance(s) at nfe";
  for (auto nfe : nfes) log << ' ' << nfe;
  log << '\n';
  return 0;
}

nlohmann::json toyclone_ablate_defaults() {
  return joined({{{"seed", tc::TrainConfig{}.seed},
                  {"configs", kAllConfigs},
                  {"repeats", std::size_t{1}},
                  {"nfe", std::vector<std::size_t>{8}},
                  {"eval_seed", std::uint64_t{99}},
                  {"noise_at_inference", true}},
                 model_keys(), train_keys(), corpus_keys()});
}

int run_toyclone_ablate(const Settings& s, RunDir& dir, std::ostream& log) {
  const auto nfes = positive(s.sizes("nfe"));
  if (nfes.size() != 1) throw UsageError("toyclone ablate evaluates at a single nfe");
  std::vector<tc::AblationConfig> configs;
  for (const auto& name : s.texts("configs")) configs.push_back(ablation(name));
  if (configs.empty()) throw UsageError("configs is empty");
  const std::size_t repeats = s.size("repeats");
  if (repeats == 0) throw UsageError("repeats must be at least 1");
  const auto data = corpora(s);
  const auto rows = tc::ablation_suite(data.train, data.heldout, configs, model_config(s),
                                       train_config(s, s.u64("seed")), nfes.front(), s.u64("eval_seed"), repeats,
                                       s.flag("noise_at_inference"));
  std::ostringstream csv;
  csv << "config,nfe,masked_mse,mean_straightness,initial_loss,final_loss\n";
  for (const auto& r : rows) {
    csv << tc::to_string(r.config) << ',' << nfes.front() << ',' << format_double(r.masked_mse) << ','
        << format_double(r.mean_straightness) << ',' << format_double(r.initial_loss) << ','
        << format_double(r.final_loss) << '\n';
    log << tc::to_string(r.config) << ": held-out masked MSE " << format_double(r.masked_mse) << '\n';
  }
  dir.write_text("ablation.csv", csv.str());
  return 0;
}

nlohmann::json toyclone_sweep_defaults() {
  return joined({{{"checkpoint", ""},
                  {"seed", std::uint64_t{99}},
                  {"train_seed", tc::TrainConfig{}.seed},
                  {"nfe", std::vector<std::size_t>{1, 2, 4, 8, 16, 32, 64, 128}},
                  {"noise_at_inference", true}},
                 model_keys(), train_keys(), corpus_keys()});
}

int run_toyclone_sweep(const Settings& s, RunDir& dir, std::ostream& log) {
  const auto nfes = positive(s.sizes("nfe"));
  const auto data = corpora(s);
  struct Entry {
    std::string name;
    std::unique_ptr<tc::CloneModel> model;
    tc::Variant variant;
  };
  std::vector<Entry> models;
  if (!s.text("checkpoint").empty()) {
    auto loaded = tc::load_clone(s.text("checkpoint"));
    models.push_back({"checkpoint", std::move(loaded.model), loaded.variant});
  } else {
    const auto tcfg = train_config(s, s.u64("train_seed"));
    for (auto config : {tc::AblationConfig::kF1F2M, tc::AblationConfig::kNoiseInit}) {
      auto model = std::make_unique<tc::CloneModel>(model_config(s));
      const auto variant = tc::variant_for(config);
      tc::train(*model, variant, data.train, tcfg);
      models.push_back({config == tc::AblationConfig::kF1F2M ? "coarse-init" : "noise-init", std::move(model), variant});
    }
  }

  std::ostringstream csv;
  csv << "model,nfe,masked_mse,mean_straightness\n";
  std::vector<svg::Series> mse_series, straight_series;
  for (const auto& m : models) {
    const auto rows = tc::nfe_sweep(*m.model, m.variant, data.heldout, nfes, s.u64("seed"), s.flag("noise_at_inference"));
    svg::Series a{m.name, {}, {}}, b{m.name, {}, {}};
    for (const auto& r : rows) {
      csv << m.name << ',' << r.nfe << ',' << format_double(r.masked_mse) << ',' << format_double(r.mean_straightness)
          << '\n';
      a.x.push_back(static_cast<double>(r.nfe));
      a.y.push_back(r.masked_mse);
      b.x.push_back(static_cast<double>(r.nfe));
      b.y.push_back(r.mean_straightness);
      log << m.name << " nfe " << r.nfe << ": masked MSE " << format_double(r.masked_mse) << '\n';
    }
    mse_series.push_back(std::move(a));
    straight_series.push_back(std::move(b));
  }
  dir.write_text("nfe_sweep.csv", csv.str());
  dir.write_text("nfe_sweep_mse.svg",
                 svg::line_plot({"held-out masked endpoint MSE", "NFE", "MSE", true, false}, mse_series));
  dir.write_text("nfe_sweep_straightness.svg",
                 svg::line_plot({"mean straightness error", "NFE", "straightness", true, false}, straight_series));
  return 0;
}

nlohmann::json toyclone_corpus_defaults() {
  return {{"seed", std::uint64_t{1234}}, {"train", std::size_t{64}}, {"heldout", std::size_t{32}}};
}

int run_toyclone_corpus(const Settings& s, RunDir& dir, std::ostream& log) {
  const std::size_t n_train = s.size("train"), n_heldout = s.size("heldout");
  if (n_train == 0) throw UsageError("train must be positive");
  const auto data = tc::default_corpora(s.u64("seed"), n_train, n_heldout);
  tc::save_corpus(dir.path("corpus_train.jsonl"), data.train);
  dir.track("corpus_train.jsonl");
  if (n_heldout > 0) {
    tc::save_corpus(dir.path("corpus_heldout.jsonl"), data.heldout);
    dir.track("corpus_heldout.jsonl");
  }
  log << "wrote " << n_train << " training and " << n_heldout << " held-out utterances\n";
  return 0;
}

}  // namespace sflow::cli
