#pragma once

// Run configuration: one JSON document with a "version" field, dotted-path
// overrides, and a SHA-256 hash that names the run directory.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mclp/curation.hpp"
#include "mclp/error.hpp"
#include "mclp/grpo.hpp"
#include "mclp/io.hpp"
#include "mclp/sft.hpp"
#include "mclp/style_world.hpp"

namespace mclp {

inline constexpr int kConfigVersion = 1;

/// Scene budget. The corpus is one draw of sft + rl + test_pool scenes; the
/// three ranges are split on source boundaries, and the test set is
/// stratified out of the pool with train sources excluded.
struct DataConfig {
  std::uint32_t sft_scenes = 200;
  std::uint32_t rl_scenes = 1000;
  std::uint32_t test_pool_scenes = 3600;
  std::uint32_t min_turns = 1;
  std::uint32_t max_turns = 6;
  std::uint32_t n_characters = 2;
  std::uint32_t scenes_per_source = 10;
  // test stratification
  std::uint32_t per_bucket = 400;
  std::uint32_t bucket_lo = 2;
  std::uint32_t bucket_hi = 6;

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct CurationConfig {
  SceneRules scene{};
  RlFilterRules rl{};

  friend bool operator==(const CurationConfig& a, const CurationConfig& b) {
    return a.scene.max_gap == b.scene.max_gap && a.scene.max_span == b.scene.max_span &&
           a.rl.min_turns == b.rl.min_turns && a.rl.max_turns == b.rl.max_turns &&
           a.rl.min_final_length == b.rl.min_final_length;
  }
};

struct EvalConfig {
  std::uint32_t winrate_bins = 10;
  bool cross_group_only = false;
  std::uint32_t trend_resamples = 2000;
  double alpha = 0.05;

  friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

struct PathConfig {
  // empty: $MCLP_OUTPUT_ROOT, else ./runs
  std::string output_root;
  // real-data curation inputs; empty in synthetic mode
  std::string rttm;
  std::string transcripts;

  friend bool operator==(const PathConfig&, const PathConfig&) = default;
};

struct RunConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  WorldConfig world{};
  DataConfig data{};
  std::uint32_t policy_instruction_vocab = 8;
  std::uint32_t policy_bucket_count = 8192;
  SftConfig sft{};
  GrpoConfig grpo{};
  CurationConfig curation{};
  EvalConfig eval{};
  PathConfig paths{};

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  FeatureConfig feature_config() const {
    return {world.vocab, policy_instruction_vocab, policy_bucket_count};
  }
};

// Stage seeds hang off the global seed.
enum class Stage : std::uint64_t { kWorld = 1, kCorpus, kSft, kGrpo, kEval, kTrend, kSplit };

inline std::uint64_t stage_seed(const RunConfig& c, Stage s) {
  return derive_seed(c.seed, {static_cast<std::uint64_t>(s)});
}

/// The reference configuration for seeded runs: 2 styles, 8 audio and 16
/// text tokens, 200 SFT scenes, 50 GRPO iterations.
inline RunConfig smoke_config() {
  RunConfig c;
  c.world.n_styles = 2;
  c.world.vocab = {16, 8};
  c.world.instruction_vocab = 8;
  c.world.emission_concentration = 0.05;
  c.world.instruction_concentration = 1.0;
  c.world.separation_floor = 0.2;
  c.world.max_transcript_len = 16;
  c.sft.learning_rate = 5.0;
  c.sft.epochs = 60;
  c.sft.batch_size = 16;
  c.grpo.learning_rate = 1500.0;
  c.grpo.iterations = 50;
  c.grpo.queries_per_iter = 32;
  return c;
}

inline Json to_json(const RunConfig& c) {
  return {
      {"version", c.version},
      {"seed", c.seed},
      {"threads", c.threads},
      {"world", to_json(c.world)},
      {"data",
       {{"sft_scenes", c.data.sft_scenes},
        {"rl_scenes", c.data.rl_scenes},
        {"test_pool_scenes", c.data.test_pool_scenes},
        {"min_turns", c.data.min_turns},
        {"max_turns", c.data.max_turns},
        {"n_characters", c.data.n_characters},
        {"scenes_per_source", c.data.scenes_per_source},
        {"per_bucket", c.data.per_bucket},
        {"bucket_lo", c.data.bucket_lo},
        {"bucket_hi", c.data.bucket_hi}}},
      {"policy",
       {{"instruction_vocab", c.policy_instruction_vocab}, {"bucket_count", c.policy_bucket_count}}},
      {"sft", to_json(c.sft)},
      {"grpo", to_json(c.grpo)},
      {"curation",
       {{"max_gap", num(c.curation.scene.max_gap)},
        {"max_span", num(c.curation.scene.max_span)},
        {"rl_min_turns", c.curation.rl.min_turns},
        {"rl_max_turns", c.curation.rl.max_turns},
        {"rl_min_final_length", c.curation.rl.min_final_length}}},
      {"eval",
       {{"winrate_bins", c.eval.winrate_bins},
        {"cross_group_only", c.eval.cross_group_only},
        {"trend_resamples", c.eval.trend_resamples},
        {"alpha", num(c.eval.alpha)}}},
      {"paths",
       {{"output_root", c.paths.output_root},
        {"rttm", c.paths.rttm},
        {"transcripts", c.paths.transcripts}}},
  };
}

inline RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  c.version = field<int>(j, "version");
  if (c.version != kConfigVersion)
    throw Error(ErrorCode::kConfigInvalid, "unsupported config version " + std::to_string(c.version));
  c.seed = field<std::uint64_t>(j, "seed");
  c.threads = field<unsigned>(j, "threads");
  c.world = world_config_from_json(j.at("world"));
  const Json& d = j.at("data");
  c.data.sft_scenes = field<std::uint32_t>(d, "sft_scenes");
  c.data.rl_scenes = field<std::uint32_t>(d, "rl_scenes");
  c.data.test_pool_scenes = field<std::uint32_t>(d, "test_pool_scenes");
  c.data.min_turns = field<std::uint32_t>(d, "min_turns");
  c.data.max_turns = field<std::uint32_t>(d, "max_turns");
  c.data.n_characters = field<std::uint32_t>(d, "n_characters");
  c.data.scenes_per_source = field<std::uint32_t>(d, "scenes_per_source");
  c.data.per_bucket = field<std::uint32_t>(d, "per_bucket");
  c.data.bucket_lo = field<std::uint32_t>(d, "bucket_lo");
  c.data.bucket_hi = field<std::uint32_t>(d, "bucket_hi");
  const Json& p = j.at("policy");
  c.policy_instruction_vocab = field<std::uint32_t>(p, "instruction_vocab");
  c.policy_bucket_count = field<std::uint32_t>(p, "bucket_count");
  c.sft = sft_config_from_json(j.at("sft"));
  c.grpo = grpo_config_from_json(j.at("grpo"));
  const Json& cu = j.at("curation");
  c.curation.scene.max_gap = get_num(cu.at("max_gap"));
  c.curation.scene.max_span = get_num(cu.at("max_span"));
  c.curation.rl.min_turns = field<std::size_t>(cu, "rl_min_turns");
  c.curation.rl.max_turns = field<std::size_t>(cu, "rl_max_turns");
  c.curation.rl.min_final_length = field<std::size_t>(cu, "rl_min_final_length");
  const Json& e = j.at("eval");
  c.eval.winrate_bins = field<std::uint32_t>(e, "winrate_bins");
  c.eval.cross_group_only = field<bool>(e, "cross_group_only");
  c.eval.trend_resamples = field<std::uint32_t>(e, "trend_resamples");
  c.eval.alpha = get_num(e.at("alpha"));
  const Json& pa = j.at("paths");
  c.paths.output_root = field<std::string>(pa, "output_root");
  c.paths.rttm = field<std::string>(pa, "rttm");
  c.paths.transcripts = field<std::string>(pa, "transcripts");
  return c;
}

inline void validate(const RunConfig& c) {
  validate(c.world);
  validate(c.grpo);
  const auto& d = c.data;
  if (d.scenes_per_source == 0 || d.sft_scenes % d.scenes_per_source ||
      d.rl_scenes % d.scenes_per_source)
    throw Error(ErrorCode::kConfigInvalid,
                "sft_scenes and rl_scenes must be multiples of scenes_per_source");
  if (d.sft_scenes == 0) throw Error(ErrorCode::kConfigInvalid, "sft_scenes must be positive");
  if (d.bucket_lo > d.bucket_hi) throw Error(ErrorCode::kConfigInvalid, "empty test bucket range");
  if (c.policy_instruction_vocab == 0 || c.policy_bucket_count == 0)
    throw Error(ErrorCode::kConfigInvalid, "degenerate policy configuration");
  if (c.threads == 0) throw Error(ErrorCode::kConfigInvalid, "threads must be >= 1");
}

/// Applies `a.b.c=value`. The value is parsed as JSON when it can be, else
/// taken as a string; the key must already exist.
inline void apply_override(Json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw Error(ErrorCode::kConfigInvalid, "override must look like key=value: " + std::string(assignment));
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  Json* node = &doc;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (!node->is_object() || !node->contains(part))
      throw Error(ErrorCode::kConfigInvalid, "unknown config key '" + key + "'");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  if (node->is_object() || (node->is_array() && !value.is_array()))
    throw Error(ErrorCode::kConfigInvalid, "'" + key + "' is not a scalar");
  *node = std::move(value);
}

inline RunConfig load_config(const Json& doc, const std::vector<std::string>& overrides) {
  Json j = doc;
  for (const auto& o : overrides) apply_override(j, o);
  RunConfig c = run_config_from_json(j);
  validate(c);
  return c;
}

/// SHA-256 of the canonical document, without fields that cannot change
/// results (worker count, output location).
inline std::string config_hash(const RunConfig& c) {
  Json j = to_json(c);
  j.erase("threads");
  j["paths"].erase("output_root");
  return sha256_hex(j.dump());
}

}  // namespace mclp
