#pragma once

// End-to-end stages shared by the CLI, the demo and the acceptance suite.

#include <set>
#include <string>
#include <vector>

#include "mclp/config.hpp"
#include "mclp/curation.hpp"
#include "mclp/eval.hpp"
#include "mclp/grpo.hpp"
#include "mclp/sft.hpp"
#include "mclp/style_world.hpp"

namespace mclp {

inline StyleWorld build_world(const RunConfig& c) {
  return generate_world(c.world, stage_seed(c, Stage::kWorld));
}

inline std::vector<DialogueScene> build_corpus(const StyleWorld& world, const RunConfig& c) {
  CorpusConfig cc;
  cc.n_scenes = c.data.sft_scenes + c.data.rl_scenes + c.data.test_pool_scenes;
  cc.min_turns = c.data.min_turns;
  cc.max_turns = c.data.max_turns;
  cc.n_characters = c.data.n_characters;
  cc.scenes_per_source = c.data.scenes_per_source;
  return sample_corpus(world, cc, stage_seed(c, Stage::kCorpus));
}

struct CuratedSplits {
  std::vector<DialogueScene> sft;
  std::vector<DialogueScene> rl;
  std::vector<DialogueScene> test;
};

/// First sft_scenes for SFT, the next rl_scenes filtered for RL, the test set
/// stratified from whatever is left by source.
inline CuratedSplits curate_splits(const std::vector<DialogueScene>& corpus, const StyleWorld& world,
                                   const RunConfig& c) {
  const std::size_t n_sft = c.data.sft_scenes;
  const std::size_t n_train = n_sft + c.data.rl_scenes;
  if (corpus.size() < n_train)
    throw Error(ErrorCode::kInsufficientScenes, "corpus smaller than the SFT + RL budget");
  CuratedSplits out;
  out.sft.assign(corpus.begin(), corpus.begin() + static_cast<std::ptrdiff_t>(n_sft));
  const std::vector<DialogueScene> pool(corpus.begin() + static_cast<std::ptrdiff_t>(n_sft),
                                        corpus.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.rl = filter_rl(pool, oracle_classifier(world), c.curation.rl);
  std::set<std::string> train_sources;
  for (std::size_t i = 0; i < n_train; ++i) train_sources.insert(corpus[i].source_id);
  out.test = stratify_test(corpus, c.data.per_bucket, c.data.bucket_lo, c.data.bucket_hi,
                           stage_seed(c, Stage::kSplit), train_sources);
  return out;
}

inline std::vector<SftSample> sft_samples(const std::vector<DialogueScene>& scenes) {
  std::vector<SftSample> out;
  for (const auto& sc : scenes) {
    auto s = decompose_session(sc);
    out.insert(out.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  return out;
}

inline SftResult run_sft(const std::vector<DialogueScene>& scenes, const RunConfig& c) {
  SftConfig s = c.sft;
  s.seed = stage_seed(c, Stage::kSft);
  const auto data = sft_samples(scenes);
  return sft_fit(PolicyParams(c.feature_config()), data, s);
}

inline std::vector<RlQuery> rl_queries(const std::vector<DialogueScene>& scenes, const RunConfig& c) {
  const auto regime = c.grpo.include_audio_history ? HistoryRegime::kWithHistory
                                                   : HistoryRegime::kWithoutHistory;
  std::vector<RlQuery> out;
  out.reserve(scenes.size());
  for (const auto& sc : scenes) out.push_back(final_turn_query(sc, regime));
  return out;
}

inline GrpoConfig seeded_grpo(const RunConfig& c) {
  GrpoConfig g = c.grpo;
  g.seed = stage_seed(c, Stage::kGrpo);
  return g;
}

inline GrpoResult run_grpo(const PolicyParams& sft_policy, const std::vector<RlQuery>& queries,
                           const StyleWorld& world, const RunConfig& c,
                           const GroupObserver& observer = {}, const CheckpointFn& checkpoint = {}) {
  return grpo_train(sft_policy, queries, seeded_grpo(c), world.oracle, world.decoder, c.threads,
                    observer, checkpoint);
}

/// SFT, GRPO, ground truth and uniform audio, each in both regimes.
inline std::vector<EvalRecord> run_eval(const PolicyParams& sft_policy, const PolicyParams& grpo_policy,
                                        const std::vector<DialogueScene>& test,
                                        const StyleWorld& world, const RunConfig& c) {
  const auto seed = stage_seed(c, Stage::kEval);
  std::vector<EvalRecord> out;
  auto add = [&](const auto& sys, const std::string& name) {
    for (auto regime : {HistoryRegime::kWithHistory, HistoryRegime::kWithoutHistory}) {
      auto r = evaluate_system(sys, name, test, regime, world.oracle, world.decoder, seed, c.threads);
      out.insert(out.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    }
  };
  add(PolicySystem{&sft_policy, c.grpo.temperature}, "sft");
  add(PolicySystem{&grpo_policy, c.grpo.temperature}, "grpo");
  add(GroundTruthSystem{}, "ground_truth");
  add(UniformSystem{c.world.vocab.audio}, "uniform");
  return out;
}

inline std::vector<AblationRow> summarize_rows(const std::vector<EvalRecord>& records) {
  std::vector<AblationRow> rows;
  std::vector<std::pair<std::string, HistoryRegime>> keys;
  for (const auto& r : records) {
    const std::pair key{r.system, r.regime};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  for (const auto& [sys, regime] : keys) {
    std::vector<EvalRecord> sub;
    for (const auto& r : records)
      if (r.system == sys && r.regime == regime) sub.push_back(r);
    rows.push_back({sys, regime, summarize(sub)});
  }
  return rows;
}

inline std::vector<QualityPoint> quality_points(const std::vector<EvalRecord>& records) {
  std::vector<QualityPoint> pts;
  pts.reserve(records.size());
  for (const auto& r : records)
    pts.push_back({r.mclp, r.oracle_similarity, r.system + "/" + to_string(r.regime)});
  return pts;
}

struct WinRateResult {
  WinRateReport report;
  TrendTest trend;
};

inline WinRateResult run_winrate(const std::vector<EvalRecord>& records, const RunConfig& c) {
  WinRateResult w;
  w.report = winrate_analysis(quality_points(records), c.eval.cross_group_only, c.eval.winrate_bins);
  w.trend = isotonic_trend_test(w.report.bins, stage_seed(c, Stage::kTrend), c.eval.trend_resamples);
  return w;
}

inline AblationReport run_ablation(const PolicyParams& sft_policy, const std::vector<RlQuery>& queries,
                                   const std::vector<DialogueScene>& test, const StyleWorld& world,
                                   const RunConfig& c) {
  return ablation_grid(sft_policy, queries, test, seeded_grpo(c), world.oracle, world.decoder,
                       stage_seed(c, Stage::kEval), c.threads);
}

}  // namespace mclp
