#pragma once

// The CLI commands as library calls. Each reads its inputs from the run
// directory and writes its artifacts back through the manifest.

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mclp/io.hpp"
#include "mclp/pipeline.hpp"

namespace mclp {

namespace fs = std::filesystem;

/// <root>/<first 16 hex of the config hash>; root from the config, then
/// $MCLP_OUTPUT_ROOT, then ./runs.
inline fs::path run_directory(const RunConfig& c) {
  fs::path root = c.paths.output_root;
  if (root.empty()) {
    const char* env = std::getenv("MCLP_OUTPUT_ROOT");
    root = env && *env ? fs::path(env) : fs::path("runs");
  }
  return root / config_hash(c).substr(0, 16);
}

inline RunDir open_run(const RunConfig& c) { return RunDir(run_directory(c), config_hash(c), c.seed); }

namespace detail {

inline Json parse_artifact(const RunDir& dir, const std::string& rel) {
  const std::string text = dir.read(rel);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, dir.path(rel).string() + ": " + e.what());
  }
}

inline StyleWorld load_world(const RunDir& dir) { return world_from_json(parse_artifact(dir, "world.json")); }

inline std::vector<DialogueScene> load_scenes(const RunDir& dir, const std::string& rel) {
  return scenes_from_jsonl(dir.read(rel));
}

inline PolicyParams load_policy(const RunDir& dir, const std::string& rel) {
  return policy_from_json(parse_artifact(dir, rel));
}

inline std::string policy_text(const PolicyParams& p) { return policy_to_json(p).dump() + "\n"; }

// eval/records.csv back into records; only the columns the win-rate uses
inline std::vector<EvalRecord> parse_records_csv(const std::string& text) {
  std::vector<EvalRecord> out;
  const auto lines = split_lines(text);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    while (true) {
      const auto comma = lines[i].find(',', pos);
      f.push_back(lines[i].substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (f.size() != 7)
      throw Error(ErrorCode::kParseError, "records line " + std::to_string(i + 1) + ": expected 7 fields");
    EvalRecord r;
    r.scene_id = f[0];
    r.system = f[1];
    r.regime = f[2] == to_string(HistoryRegime::kWithHistory) ? HistoryRegime::kWithHistory
                                                              : HistoryRegime::kWithoutHistory;
    r.mclp = parse_dstr(f[3]);
    r.cer = parse_dstr(f[4]);
    r.wer = parse_dstr(f[5]);
    r.oracle_similarity = parse_dstr(f[6]);
    out.push_back(std::move(r));
  }
  return out;
}

// Transcripts for real-data curation: one JSON object per line with
// file_id, text, start, end.
inline std::map<std::string, std::vector<TranscriptSegment>> parse_transcripts(std::string_view text) {
  std::map<std::string, std::vector<TranscriptSegment>> out;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      const Json j = Json::parse(lines[i]);
      out[j.at("file_id").get<std::string>()].push_back(
          {j.at("text").get<std::string>(), j.at("start").get<double>(), j.at("end").get<double>(), {}});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParseError, "transcripts line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

inline Json scene_segments_json(const std::string& audio_id, const Scene& sc) {
  Json segs = Json::array();
  for (const auto& s : sc.segments)
    segs.push_back({{"text", s.text}, {"start", s.start}, {"end", s.end},
                    {"speaker", s.speaker.value_or(std::string(kUnknownSpeaker))}});
  return {{"audio_id", audio_id}, {"scene_id", sc.scene_id}, {"oversized", sc.oversized},
          {"segments", std::move(segs)}};
}

}  // namespace detail

inline void cmd_world_gen(const RunConfig& c, RunDir& dir) {
  dir.write("config.json", to_json(c).dump(2) + "\n");
  dir.write("world.json", world_to_json(build_world(c)).dump() + "\n");
}

/// Synthetic splits always; with paths.rttm and paths.transcripts set, the
/// real-data scene curation and corpus statistics as well.
inline void cmd_data_curate(const RunConfig& c, RunDir& dir) {
  const StyleWorld world = detail::load_world(dir);
  const auto corpus = build_corpus(world, c);
  const auto splits = curate_splits(corpus, world, c);
  dir.write("data/sft.jsonl", scenes_to_jsonl(splits.sft));
  dir.write("data/rl.jsonl", scenes_to_jsonl(splits.rl));
  dir.write("data/test.jsonl", scenes_to_jsonl(splits.test));

  if (c.paths.rttm.empty() != c.paths.transcripts.empty())
    throw Error(ErrorCode::kConfigInvalid, "paths.rttm and paths.transcripts go together");
  if (c.paths.rttm.empty()) return;
  for (const auto& p : {c.paths.rttm, c.paths.transcripts})
    if (!fs::exists(p)) throw Error(ErrorCode::kMissingInput, "missing input " + p);
  const auto rttm = parse_rttm(read_text_file(c.paths.rttm));
  const auto transcripts = detail::parse_transcripts(read_text_file(c.paths.transcripts));
  std::vector<CuratedAudio> curated;
  std::string lines;
  for (const auto& [file_id, segs] : transcripts) {
    std::vector<RttmSegment> own;
    for (const auto& r : rttm)
      if (r.file_id == file_id) own.push_back(r);
    auto sorted = segs;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.start < b.start; });
    CuratedAudio a{file_id, segment_scenes(assign_speakers(sorted, own), file_id, c.curation.scene)};
    for (const auto& sc : a.scenes) lines += detail::scene_segments_json(file_id, sc).dump() + "\n";
    curated.push_back(std::move(a));
  }
  dir.write("curated/scenes.jsonl", lines);
  dir.write("curated/stats.csv", stats_csv(compute_stats(curated)));
}

inline void cmd_train_sft(const RunConfig& c, RunDir& dir) {
  const auto result = run_sft(detail::load_scenes(dir, "data/sft.jsonl"), c);
  dir.write("sft/policy.json", detail::policy_text(result.params));
  dir.write("sft/loss.csv", sft_log_csv(result.loss_curve));
}

inline void cmd_train_grpo(const RunConfig& c, RunDir& dir) {
  const PolicyParams sft = detail::load_policy(dir, "sft/policy.json");
  const StyleWorld world = detail::load_world(dir);
  const auto queries = rl_queries(detail::load_scenes(dir, "data/rl.jsonl"), c);
  std::string rewards;
  const auto observe = [&](std::uint32_t it, std::size_t slot, const GroupBatch& g) {
    for (std::size_t i = 0; i < g.rewards.size(); ++i) rewards += reward_record(it, slot, i, g).dump() + "\n";
  };
  const auto checkpoint = [&](std::uint32_t it, const PolicyParams& p) {
    dir.write("grpo/checkpoint_iter_" + std::to_string(it) + ".json", detail::policy_text(p));
  };
  GrpoResult result;
  try {
    result = run_grpo(sft, queries, world, c, observe, checkpoint);
  } catch (const Error&) {
    dir.write("grpo/rewards.jsonl", rewards);
    throw;
  }
  dir.write("grpo/policy.json", detail::policy_text(result.params));
  dir.write("grpo/log.csv", grpo_log_csv(result.log));
  dir.write("grpo/rewards.jsonl", rewards);
}

inline void cmd_eval(const RunConfig& c, RunDir& dir) {
  const PolicyParams sft = detail::load_policy(dir, "sft/policy.json");
  const PolicyParams grpo = detail::load_policy(dir, "grpo/policy.json");
  const StyleWorld world = detail::load_world(dir);
  const auto records = run_eval(sft, grpo, detail::load_scenes(dir, "data/test.jsonl"), world, c);
  dir.write("eval/records.csv", eval_records_csv(records));
  dir.write("eval/summary.csv", summary_csv(summarize_rows(records)));
}

/// Pools the WithHistory records of every evaluated system.
inline std::vector<EvalRecord> winrate_records(const std::vector<EvalRecord>& all) {
  std::vector<EvalRecord> out;
  for (const auto& r : all)
    if (r.regime == HistoryRegime::kWithHistory) out.push_back(r);
  return out;
}

inline void cmd_winrate(const RunConfig& c, RunDir& dir) {
  const auto records = winrate_records(detail::parse_records_csv(dir.read("eval/records.csv")));
  const auto w = run_winrate(records, c);
  dir.write("eval/winrate.csv", winrate_csv(w.report));
  const Json trend = {{"n_records", records.size()},
                      {"n_pairs", w.report.n_pairs},
                      {"pooled_win_rate", dstr(w.report.pooled_win_rate)},
                      {"lr_constant_vs_monotone", dstr(w.trend.lr_constant_vs_monotone)},
                      {"lr_monotone_vs_free", dstr(w.trend.lr_monotone_vs_free)},
                      {"p_trend", dstr(w.trend.p_trend)},
                      {"p_departure", dstr(w.trend.p_departure)},
                      {"bins_used", w.trend.bins_used},
                      {"alpha", dstr(c.eval.alpha)},
                      {"nondecreasing", w.trend.nondecreasing(c.eval.alpha)}};
  dir.write("eval/trend.json", trend.dump(2) + "\n");
}

inline void cmd_ablate(const RunConfig& c, RunDir& dir) {
  const PolicyParams sft = detail::load_policy(dir, "sft/policy.json");
  const StyleWorld world = detail::load_world(dir);
  const auto queries = rl_queries(detail::load_scenes(dir, "data/rl.jsonl"), c);
  const auto rep = run_ablation(sft, queries, detail::load_scenes(dir, "data/test.jsonl"), world, c);
  dir.write("ablate/ablation_with_history.csv", ablation_csv(rep, HistoryRegime::kWithHistory));
  dir.write("ablate/ablation_without_history.csv", ablation_csv(rep, HistoryRegime::kWithoutHistory));
  dir.write("ablate/summary.csv", summary_csv(rep.rows));
  dir.write("ablate/records.csv", eval_records_csv(rep.records));
  for (const auto& [name, log] : rep.logs) dir.write("ablate/" + name + "_log.csv", grpo_log_csv(log));
}

inline void run_all(const RunConfig& c, RunDir& dir) {
  cmd_world_gen(c, dir);
  cmd_data_curate(c, dir);
  cmd_train_sft(c, dir);
  cmd_train_grpo(c, dir);
  cmd_eval(c, dir);
  cmd_winrate(c, dir);
  cmd_ablate(c, dir);
}

}  // namespace mclp
