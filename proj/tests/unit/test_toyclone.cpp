#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "sflow/featurestats/pccs.hpp"
#include "sflow/numkit/ops.hpp"
#include "sflow/toyclone/pipeline.hpp"

using namespace sflow::toyclone;
namespace fs = std::filesystem;
using sflow::numkit::Shape;
using sflow::numkit::Tape;

namespace {

CorpusConfig small_corpus() {
  CorpusConfig c;
  c.n_utts = 6;
  c.min_frames = 20;
  c.max_frames = 30;
  return c;
}

CloneConfig small_model(DetailVersion v = DetailVersion::kV1) {
  CloneConfig c;
  c.hidden = 8;
  c.speaker_rnn_hidden = 4;
  c.speaker_widths = {12};
  c.trunk_width = 8;
  c.trunk_blocks = 2;
  c.planes_2d = 2;
  c.version = v;
  return c;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "sflow_toyclone_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Mask, LengthMatchesIntegerOracle) {
  for (std::size_t t = 1; t <= 200; ++t) EXPECT_EQ(masked_length(t, 0.7), (7 * t + 5) / 10) << t;
  EXPECT_EQ(masked_length(10, 0.0), 0u);
  EXPECT_EQ(masked_length(10, 1.0), 10u);
  EXPECT_THROW(masked_length(10, 1.5), std::invalid_argument);
}

TEST(Mask, StartsCoverEveryOffset) {
  Rng rng(8);
  for (std::size_t t : {1u, 9u, 57u}) {
    std::set<std::size_t> seen;
    for (int i = 0; i < 10000; ++i) {
      auto m = make_mask(t, 0.7, rng);
      ASSERT_LE(m.start + m.length, t);
      seen.insert(m.start);
    }
    EXPECT_EQ(seen.size(), t - masked_length(t, 0.7) + 1) << t;
  }
}

TEST(Mask, MatricesAndBounds) {
  auto m = fixed_mask(5, 0.4, 2);
  EXPECT_EQ(m.length, 2u);
  EXPECT_EQ(m.row_weights(), sflow::numkit::Array::vector({0, 0, 1, 1, 0}));
  EXPECT_EQ(m.matrix(2) + m.complement(2), Array({5, 2}, 1.0));
  EXPECT_THROW(fixed_mask(5, 0.4, 4), std::out_of_range);
}

TEST(Corpus, DeterministicAndInRange) {
  const auto cfg = small_corpus();
  auto a = synth_corpus(cfg), b = synth_corpus(cfg);
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].f3, b[i].f3);
    EXPECT_EQ(a[i].tokens, b[i].tokens);
    EXPECT_GE(a[i].frames(), cfg.min_frames);
    EXPECT_LE(a[i].frames(), cfg.max_frames);
    EXPECT_EQ(a[i].f3.cols(), cfg.channels);
    std::size_t total = 0;
    const auto& ds = a[i].durations;
    for (std::size_t k = 0; k < ds.size(); ++k) {
      // only the last token is cut to fit the frame count
      if (k + 1 < ds.size()) EXPECT_GE(ds[k], cfg.min_duration);
      EXPECT_GE(ds[k], 1u);
      EXPECT_LE(ds[k], cfg.max_duration);
      total += ds[k];
    }
    EXPECT_EQ(total, a[i].frames());
    for (auto tok : a[i].tokens) EXPECT_LT(tok, cfg.vocab_size);
  }
  auto other = cfg;
  other.seed = 99;
  EXPECT_NE(synth_corpus(other)[0].f3, a[0].f3);
}

TEST(Corpus, TextCarriesProvenance) {
  // same tokens and speaker, different token order -> different features
  auto cfg = small_corpus();
  auto maps = make_corpus_maps(cfg);
  Rng r1(1), r2(1);
  const Array pros = Array::vector({0.1, -0.2}), spk = Array::vector({0.3, 0, 0.1});
  auto a = render_f3(maps, {1, 2, 3}, {4, 4, 4}, pros, spk, 0.0, r1);
  auto b = render_f3(maps, {3, 2, 1}, {4, 4, 4}, pros, spk, 0.0, r2);
  EXPECT_GT(sflow::numkit::max_abs_diff(a, b), 0.1);
}

TEST(Corpus, HelpersAndRoundTrip) {
  EXPECT_EQ(frame_to_token({2, 1, 3}), (std::vector<std::size_t>{0, 0, 1, 2, 2, 2}));
  const Array flat(Shape{6, 2}, 1.5);
  EXPECT_LE(sflow::numkit::max_abs_diff(smooth_frames(flat), flat), 1e-15);

  auto corpus = synth_corpus(small_corpus());
  save_corpus(scratch("c.jsonl"), corpus);
  auto back = load_corpus(scratch("c.jsonl"));
  ASSERT_EQ(back.size(), corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(back[i].f3, corpus[i].f3);
    EXPECT_EQ(back[i].durations, corpus[i].durations);
    EXPECT_EQ(back[i].speaker_id, corpus[i].speaker_id);
  }

  auto crop = crop_utterance(corpus[0], 5, 10);
  EXPECT_EQ(crop.frames(), 10u);
  std::size_t total = 0;
  for (auto d : crop.durations) total += d;
  EXPECT_EQ(total, 10u);
  EXPECT_EQ(crop.f3.at(0, 0), corpus[0].f3.at(5, 0));
  EXPECT_THROW(crop_utterance(corpus[0], corpus[0].frames() - 2, 5), std::out_of_range);
}

TEST(Model, ShapesAndMaskedFeatures) {
  auto utt = synth_corpus(small_corpus())[0];
  const auto mask = fixed_mask(utt.frames(), 0.7, 3);
  for (auto v : {DetailVersion::kV1, DetailVersion::kV2}) {
    CloneModel model(small_model(v));
    Tape tape;
    Scope s{tape, model.params()};
    const auto ex = make_example(utt, mask);
    Var f1 = model.text_encode(s, utt.tokens, utt.durations, mask);
    Var f2 = model.speaker_add(s, f1, s.constant(ex.prompt), mask);
    EXPECT_EQ(f1.shape(), (Shape{utt.frames(), 8}));
    EXPECT_EQ(f2.shape(), (Shape{utt.frames(), 16}));
    for (std::size_t r = 0; r < utt.frames(); ++r) {
      if (mask.masked(r)) continue;
      for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(f1.value().at(r, c), 0.0);
      for (std::size_t c = 0; c < 16; ++c) EXPECT_EQ(f2.value().at(r, c), 0.0);
    }
    Var d = model.detail_direction(s, f2, f1, f2, s.constant(ex.prompt), 0.3);
    EXPECT_EQ(d.shape(), f2.shape());
    EXPECT_TRUE(d.value().all_finite());
  }
}

TEST(Model, VersionsDiffer) {
  CloneModel v1(small_model(DetailVersion::kV1)), v2(small_model(DetailVersion::kV2));
  EXPECT_TRUE(v1.detail().planar.empty());
  EXPECT_EQ(v2.detail().planar.size(), 2u);
  EXPECT_GT(v2.params().size(), v1.params().size());
  EXPECT_EQ(parse_detail_version("v2"), DetailVersion::kV2);
  EXPECT_THROW(parse_detail_version("v3"), std::invalid_argument);
}

TEST(Model, TimeFeatures) {
  const auto f = time_features(0.25, 4);
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(time_features(0.0, 4), time_features(0.0, 4));
  EXPECT_NE(time_features(0.1, 4), time_features(0.2, 4));
}

TEST(Pipeline, AblationTable) {
  EXPECT_EQ(parse_ablation_config("F1+F2+M"), AblationConfig::kF1F2M);
  EXPECT_STREQ(to_string(AblationConfig::kNoiseInit), "noise-init");
  EXPECT_THROW(parse_ablation_config("F3"), std::invalid_argument);
  const auto m = variant_for(AblationConfig::kF1F2M), nm = variant_for(AblationConfig::kF1F2);
  EXPECT_TRUE(m.masked_loss);
  EXPECT_FALSE(nm.masked_loss);
  EXPECT_FALSE(variant_for(AblationConfig::kF2).use_f1);
  EXPECT_FALSE(variant_for(AblationConfig::kF1).use_f2);
  EXPECT_FALSE(variant_for(AblationConfig::kNoiseInit).coarse_init);
}

TEST(Pipeline, MaskedOnlyContractIsBitExact) {
  auto corpus = synth_corpus(small_corpus());
  std::vector<Example> batch, perturbed;
  Rng mrng(2);
  for (const auto& u : corpus) {
    auto ex = make_example(u, make_mask(u.frames(), 0.7, mrng));
    batch.push_back(ex);
    for (std::size_t r = 0; r < u.frames(); ++r)
      if (!ex.mask.masked(r))
        for (std::size_t c = 0; c < u.f3.cols(); ++c) ex.target.at(r, c) += 3.0 + r;
    perturbed.push_back(ex);
  }
  const auto variant = variant_for(AblationConfig::kF1F2M);
  CloneModel a(small_model()), b(small_model());
  Rng ra(4), rb(4);
  EXPECT_EQ(evaluate_loss(a, variant, batch, ra, true), evaluate_loss(b, variant, perturbed, rb, true));
  auto oa = make_optimizer(TrainConfig{}), ob = make_optimizer(TrainConfig{});
  for (int step = 0; step < 3; ++step) {
    EXPECT_EQ(train_step(a, variant, batch, ra, oa, true), train_step(b, variant, perturbed, rb, ob, true));
  }
  EXPECT_EQ(a.params(), b.params());

  // without the mask-restricted loss the same perturbation is visible
  const auto full = variant_for(AblationConfig::kF1F2);
  Rng rc(4), rd(4);
  EXPECT_NE(evaluate_loss(a, full, batch, rc, true), evaluate_loss(a, full, perturbed, rd, true));
}

TEST(Pipeline, InferenceKeepsPromptAndIsReproducible) {
  auto utt = synth_corpus(small_corpus())[1];
  const auto mask = fixed_mask(utt.frames(), 0.7, 2);
  const auto ex = make_example(utt, mask);
  CloneModel model(small_model(DetailVersion::kV2));
  for (auto cfg : {AblationConfig::kF1F2M, AblationConfig::kF1F2, AblationConfig::kNoiseInit}) {
    const auto v = variant_for(cfg);
    Rng r1(7), r2(7);
    auto a = clone_infer(model, v, utt.tokens, utt.durations, ex.prompt, mask, 4, r1);
    auto b = clone_infer(model, v, utt.tokens, utt.durations, ex.prompt, mask, 4, r2);
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(a.trajectory.points.size(), 5u);
    for (std::size_t r = 0; r < utt.frames(); ++r)
      if (!mask.masked(r))
        for (std::size_t c = 0; c < utt.f3.cols(); ++c) EXPECT_EQ(a.features.at(r, c), utt.f3.at(r, c));
  }
}

TEST(Pipeline, NoiseAtInferenceToggle) {
  auto utt = synth_corpus(small_corpus())[2];
  const auto mask = fixed_mask(utt.frames(), 0.7, 0);
  const auto ex = make_example(utt, mask);
  CloneModel model(small_model());
  const auto v = variant_for(AblationConfig::kF1F2M);
  Rng r1(1), r2(2);
  auto off1 = clone_infer(model, v, utt.tokens, utt.durations, ex.prompt, mask, 3, r1, false);
  auto off2 = clone_infer(model, v, utt.tokens, utt.durations, ex.prompt, mask, 3, r2, false);
  EXPECT_EQ(off1.features, off2.features);
  Rng r3(1), r4(2);
  auto on1 = clone_infer(model, v, utt.tokens, utt.durations, ex.prompt, mask, 3, r3, true);
  auto on2 = clone_infer(model, v, utt.tokens, utt.durations, ex.prompt, mask, 3, r4, true);
  EXPECT_NE(on1.features, on2.features);
}

TEST(Pipeline, TrainingLowersLossAndCheckpointsRoundTrip) {
  auto corpus = synth_corpus(small_corpus());
  CloneModel model(small_model(DetailVersion::kV2));
  TrainConfig tc;
  tc.steps = 40;
  tc.batch = 4;
  tc.warmup_steps = 5;
  const auto v = variant_for(AblationConfig::kF1F2M);
  auto losses = train(model, v, corpus, tc);
  ASSERT_EQ(losses.size(), 40u);
  double head = 0, tail = 0;
  for (int i = 0; i < 5; ++i) {
    head += losses[i];
    tail += losses[35 + i];
  }
  EXPECT_LT(tail, head);

  save_clone(scratch("m.ckpt"), model, v);
  auto loaded = load_clone(scratch("m.ckpt"));
  EXPECT_EQ(loaded.model->params(), model.params());
  EXPECT_EQ(loaded.model->config().version, DetailVersion::kV2);
  EXPECT_TRUE(loaded.variant.masked_loss);
  EXPECT_THROW(load_clone(scratch("nope.ckpt")), std::runtime_error);

  const auto a = evaluate_heldout(model, v, corpus, 4, 3);
  const auto b = evaluate_heldout(*loaded.model, v, corpus, 4, 3);
  EXPECT_EQ(a.masked_mse, b.masked_mse);
  EXPECT_EQ(a.mean_straightness, b.mean_straightness);
  auto sweep = nfe_sweep(model, v, corpus, {1, 4}, 3);
  ASSERT_EQ(sweep.size(), 2u);
  EXPECT_EQ(sweep[1].masked_mse, a.masked_mse);
}

TEST(Pipeline, DefaultCorporaSplit) {
  auto d = default_corpora(1234, 10, 4);
  EXPECT_EQ(d.train.size(), 10u);
  EXPECT_EQ(d.heldout.size(), 4u);
  EXPECT_NE(d.train[0].f3, d.heldout[0].f3);
}

TEST(Oracles, CorpusConstruction) {
  auto cfg = small_corpus();
  auto maps = make_corpus_maps(cfg);
  Rng r(1);
  const std::vector<std::size_t> tokens{4, 9, 4}, durations{3, 5, 2};
  auto f3 = render_f3(maps, tokens, durations, Array({cfg.prosody_dim}), Array({cfg.speaker_dim}), 0.0, r);
  Array raw({10, cfg.channels});
  const auto owner = frame_to_token(durations);
  for (std::size_t f = 0; f < 10; ++f)
    for (std::size_t c = 0; c < cfg.channels; ++c) raw.at(f, c) = maps.base.at(tokens[owner[f]], c);
  EXPECT_LE(sflow::numkit::max_abs_diff(f3, smooth_frames(raw)), 1e-12);

  Rng r1(2), r2(2);
  auto a = render_f3(maps, tokens, durations, Array({cfg.prosody_dim}), maps.speaker_factors[0], 0.0, r1);
  auto b = render_f3(maps, tokens, durations, Array({cfg.prosody_dim}), maps.speaker_factors[1], 0.0, r2);
  EXPECT_GT(sflow::numkit::l2_norm(a - b), 0.0);
}

TEST(Oracles, CorpusIsSmoothAlongTime) {
  auto corpus = synth_corpus(CorpusConfig{});
  std::vector<double> cors;
  for (const auto& u : corpus) {
    auto rep = sflow::featurestats::pccs_av({u.f3}, sflow::featurestats::Axis::kTime);
    cors.insert(cors.end(), rep.cors.begin(), rep.cors.end());
  }
  std::sort(cors.begin(), cors.end());
  EXPECT_GT(cors[cors.size() / 2], 0.8);
}

TEST(Oracles, MaskEdges) {
  Rng rng(1);
  EXPECT_EQ(make_mask(10, 0.7, rng).length, 7u);
  EXPECT_EQ(make_mask(10, 0.0, rng).length, 0u);
  auto all = make_mask(10, 1.0, rng);
  EXPECT_EQ(all.length, 10u);
  EXPECT_EQ(all.start, 0u);
}

TEST(Oracles, UpsamplingProvenance) {
  CloneModel model(small_model());
  Tape tape;
  Scope s{tape, model.params()};
  const auto mask = fixed_mask(5, 1.0, 0);
  const Array f1 = model.text_encode(s, {3, 7}, {2, 3}, mask).value();
  auto row = [&](std::size_t r) {
    std::vector<double> v(f1.cols());
    for (std::size_t c = 0; c < f1.cols(); ++c) v[c] = f1.at(r, c);
    return v;
  };
  EXPECT_EQ(row(0), row(1));
  EXPECT_EQ(row(2), row(3));
  EXPECT_EQ(row(3), row(4));
  EXPECT_NE(row(1), row(2));
  EXPECT_THROW(model.text_encode(s, {3, 7}, {2, 2}, mask), std::invalid_argument);
}

TEST(Oracles, PromptChangesCoarseFeature) {
  auto corpus = synth_corpus(small_corpus());
  const auto& u = corpus[0];
  const auto& w = corpus[1];
  const auto mask = fixed_mask(u.frames(), 0.7, 2);
  CloneModel model(small_model());
  Tape tape;
  Scope s{tape, model.params()};
  Var f1 = model.text_encode(s, u.tokens, u.durations, mask);
  const Array p1 = make_example(u, mask).prompt;
  Array p2(p1.shape());
  for (std::size_t r = 0; r < p2.rows(); ++r)
    if (!mask.masked(r) && r < w.frames())
      for (std::size_t c = 0; c < p2.cols(); ++c) p2.at(r, c) = w.f3.at(r, c);
  const Array a = model.speaker_add(s, f1, s.constant(p1), mask).value();
  const Array b = model.speaker_add(s, f1, s.constant(p2), mask).value();
  EXPECT_GT(sflow::numkit::l2_norm(a - b), 0.0);
}

TEST(Oracles, VersionsGiveDifferentDirections) {
  auto utt = synth_corpus(small_corpus())[0];
  const auto mask = fixed_mask(utt.frames(), 0.7, 1);
  const auto ex = make_example(utt, mask);
  auto direction = [&](DetailVersion v) {
    CloneModel model(small_model(v));
    Tape tape;
    Scope s{tape, model.params()};
    Var f1 = model.text_encode(s, utt.tokens, utt.durations, mask);
    Var f2 = model.speaker_add(s, f1, s.constant(ex.prompt), mask);
    return model.detail_direction(s, s.constant(utt.f3), f1, f2, s.constant(ex.prompt), 0.5).value();
  };
  const Array d1 = direction(DetailVersion::kV1), d2 = direction(DetailVersion::kV2);
  EXPECT_EQ(d1.shape(), d2.shape());
  EXPECT_GT(sflow::numkit::max_abs_diff(d1, d2), 1e-6);
}

TEST(Oracles, InitialLossFinitePositive) {
  auto corpus = synth_corpus(small_corpus());
  Rng mrng(3), rng(4);
  std::vector<Example> batch;
  for (const auto& u : corpus) batch.push_back(make_example(u, make_mask(u.frames(), 0.7, mrng)));
  CloneModel model(small_model());
  const double loss = evaluate_loss(model, variant_for(AblationConfig::kF1F2M), batch, rng, true);
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_GT(loss, 0.0);
}

TEST(Oracles, AblationSuiteSmall) {
  auto d = default_corpora(1234, 8, 3);
  CloneConfig mc = small_model();
  TrainConfig tc;
  tc.steps = 4;
  tc.batch = 2;
  auto one = ablation_suite(d.train, d.heldout, {AblationConfig::kF1}, mc, tc, 2);
  ASSERT_EQ(one.size(), 1u);
  auto again = ablation_suite(d.train, d.heldout, {AblationConfig::kF1}, mc, tc, 2);
  EXPECT_EQ(one[0].masked_mse, again[0].masked_mse);
  EXPECT_EQ(one[0].final_loss, again[0].final_loss);
}
