#pragma once

// Group relative policy optimization on final-turn synthesis: G rollouts per
// query, group-normalized sequence-level advantages, clipped ratio surrogate
// with a token-level KL anchor to the SFT snapshot.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mclp/error.hpp"
#include "mclp/parallel.hpp"
#include "mclp/policy.hpp"
#include "mclp/reward.hpp"
#include "mclp/sft.hpp"
#include "mclp/style_world.hpp"

namespace mclp {

enum class KlMode { kExact, kSampled };

struct GrpoConfig {
  std::uint32_t group_size = 8;
  double clip_eps = 0.2;
  double kl_coeff = 0.001;
  double temperature = 1.0;
  double learning_rate = 20.0;
  std::uint32_t iterations = 50;
  std::uint32_t queries_per_iter = 16;
  std::uint64_t seed = 0;
  RewardConfig reward{};
  KlMode kl_mode = KlMode::kExact;
  std::uint32_t checkpoint_every = 10;
  bool include_audio_history = true;

  friend bool operator==(const GrpoConfig&, const GrpoConfig&) = default;
};

inline void validate(const GrpoConfig& c) {
  if (c.group_size < 2) throw Error(ErrorCode::kConfigInvalid, "group size must be >= 2");
  if (!(c.clip_eps > 0.0)) throw Error(ErrorCode::kConfigInvalid, "clip epsilon must be > 0");
  if (!(c.kl_coeff >= 0.0)) throw Error(ErrorCode::kConfigInvalid, "KL coefficient must be >= 0");
  if (!(c.temperature > 0.0)) throw Error(ErrorCode::kConfigInvalid, "temperature must be > 0");
  if (c.queries_per_iter < 1) throw Error(ErrorCode::kConfigInvalid, "need >= 1 query per iteration");
}

/// A final-turn synthesis query: prompt q, transcript w and reference z_gt.
struct RlQuery {
  std::string scene_id;
  Prompt prompt;
  Transcript transcript;
  TA4Sequence target;
};

inline RlQuery final_turn_query(const DialogueScene& scene, HistoryRegime regime) {
  if (scene.turns.empty()) throw Error(ErrorCode::kEmptyTarget, "scene has no turns");
  const std::size_t j = scene.turn_count() - 1;
  return {scene.scene_id, apply_regime(prompt_for_turn(scene, j), regime),
          scene.turns[j].transcript, scene.turns[j].target};
}

/// (R - mean) / population std; all zeros when std < 1e-8.
inline std::vector<double> normalize_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw Error(ErrorCode::kGroupTooSmall, "need at least 2 rewards");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(rewards.size());
  const double sd = std::sqrt(var);
  std::vector<double> adv(rewards.size(), 0.0);
  if (sd < 1e-8) return adv;
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / sd;
  return adv;
}

struct GroupBatch {
  std::string query_id;
  std::vector<Rollout> rollouts;
  std::vector<RewardBreakdown> rewards;
  std::vector<double> advantages;
};

/// Rollout i samples from substream (seed, i); rewards decode from (seed, G + i).
inline GroupBatch collect_group(const PolicyParams& policy_old, const RlQuery& query,
                                const GrpoConfig& config, const OracleModel& scorer,
                                const DecodeTable& table, std::uint64_t seed) {
  validate(config);
  GroupBatch batch;
  batch.query_id = query.scene_id;
  std::vector<TA4Sequence> seqs;
  for (std::uint32_t i = 0; i < config.group_size; ++i) {
    Rng rng = substream(seed, {i});
    batch.rollouts.push_back(sample(policy_old, query.prompt, query.transcript, config.temperature, rng));
    seqs.push_back(batch.rollouts.back().sequence);
  }
  batch.rewards = reward_group(config.reward, seqs, query.target, query.transcript, scorer, table,
                               derive_seed(seed, {0xdec0deULL}));
  std::vector<double> r;
  for (const auto& b : batch.rewards) r.push_back(b.reward);
  batch.advantages = normalize_advantages(r);
  return batch;
}

struct SurrogateResult {
  double loss = 0.0;
  std::vector<double> gradient;  // d loss / d theta
  double mean_kl = 0.0;          // per visited token
  std::size_t tokens = 0;
  std::size_t clipped_tokens = 0;
};

/// Negative clipped-surrogate objective averaged over groups, with weights
/// 1/G and 1/|o_i| inside each group. Tokens on the clipped branch carry no
/// policy gradient.
inline SurrogateResult surrogate_loss(const PolicyParams& params, std::span<const GroupBatch> batches,
                                      const PolicyParams& ref, const GrpoConfig& config) {
  SurrogateResult res;
  res.gradient.assign(params.theta().size(), 0.0);
  if (batches.empty()) return res;
  const std::uint32_t A = params.audio_vocab();
  std::vector<double> lp(A), lq(A), p(A);
  double kl_sum = 0.0;
  const double per_group = 1.0 / static_cast<double>(batches.size());
  for (const auto& batch : batches) {
    const double G = static_cast<double>(batch.rollouts.size());
    for (std::size_t i = 0; i < batch.rollouts.size(); ++i) {
      const Rollout& ro = batch.rollouts[i];
      const double adv = batch.advantages[i];
      const std::size_t n = ro.feature_trace.size();
      if (n == 0) continue;
      const double w = per_group / (G * static_cast<double>(n));
      for (std::size_t t = 0; t < n; ++t) {
        const std::uint32_t f = ro.feature_trace[t];
        const std::uint32_t a = ro.sequence.audio_at(t);
        log_softmax(params.row(f), lp);
        for (std::uint32_t j = 0; j < A; ++j) p[j] = std::exp(lp[j]);
        const double ratio = std::exp(lp[a] - ro.per_token_logprob[t]);
        const double unclipped = ratio * adv;
        const double clipped = std::clamp(ratio, 1.0 - config.clip_eps, 1.0 + config.clip_eps) * adv;
        double objective;
        double* g = res.gradient.data() + std::size_t{f} * A;
        if (clipped < unclipped) {
          objective = clipped;
          ++res.clipped_tokens;
        } else {
          objective = unclipped;
          // d(-ratio * adv) = -ratio * adv * (onehot(a) - p)
          for (std::uint32_t j = 0; j < A; ++j) g[j] += w * unclipped * p[j];
          g[a] -= w * unclipped;
        }
        double kl = 0.0;
        if (config.kl_mode == KlMode::kExact) {
          log_softmax(ref.row(f), lq);
          for (std::uint32_t j = 0; j < A; ++j) kl += p[j] * (lp[j] - lq[j]);
          if (config.kl_coeff != 0.0)
            for (std::uint32_t j = 0; j < A; ++j)
              g[j] += w * config.kl_coeff * p[j] * (lp[j] - lq[j] - kl);
        } else {
          const double log_r = token_logprob(ref, f, a) - lp[a];
          const double r = std::exp(log_r);
          kl = r - log_r - 1.0;
          // d kl = (1 - r) (onehot(a) - p)
          if (config.kl_coeff != 0.0) {
            for (std::uint32_t j = 0; j < A; ++j) g[j] -= w * config.kl_coeff * (1.0 - r) * p[j];
            g[a] += w * config.kl_coeff * (1.0 - r);
          }
        }
        kl_sum += kl;
        ++res.tokens;
        res.loss -= w * (objective - config.kl_coeff * kl);
      }
    }
  }
  res.mean_kl = res.tokens ? kl_sum / static_cast<double>(res.tokens) : 0.0;
  if (!std::isfinite(res.loss)) throw Error(ErrorCode::kNonFiniteLoss, "surrogate loss is non-finite");
  return res;
}

struct GrpoLogRow {
  std::uint32_t iter = 0;
  double mean_reward = 0.0;
  double mean_mclp = 0.0;
  double mean_cer = 0.0;
  double gated_frac = 0.0;
  double mean_kl = 0.0;
  double loss = 0.0;
};

struct GrpoResult {
  PolicyParams params;
  std::vector<GrpoLogRow> log;
};

using GroupObserver = std::function<void(std::uint32_t iter, std::size_t slot, const GroupBatch&)>;
using CheckpointFn = std::function<void(std::uint32_t iter, const PolicyParams&)>;

/// One gradient step per collection. Queries are visited in a seeded
/// shuffled order; group collection runs on `threads` workers with per-slot
/// seeds so the result does not depend on the worker count.
inline GrpoResult grpo_train(const PolicyParams& policy_sft, std::span<const RlQuery> queries,
                             const GrpoConfig& config, const OracleModel& scorer,
                             const DecodeTable& table, unsigned threads = 1,
                             const GroupObserver& observer = {},
                             const CheckpointFn& checkpoint = {}) {
  validate(config);
  if (queries.empty()) throw Error(ErrorCode::kEmptyDataset, "no RL queries");
  GrpoResult result;
  result.params = policy_sft;
  const PolicyParams& ref = policy_sft;

  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  std::uint64_t pass = 0;
  auto next_query = [&]() -> std::size_t {
    if (cursor == order.size()) {
      order.resize(queries.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng rng = substream(config.seed, {0x0dde5ULL, pass++});
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
      cursor = 0;
    }
    return order[cursor++];
  };

  for (std::uint32_t it = 0; it < config.iterations; ++it) {
    const PolicyParams old = result.params;
    std::vector<std::size_t> picks(config.queries_per_iter);
    for (auto& q : picks) q = next_query();
    std::vector<GroupBatch> groups(picks.size());
    parallel_for(picks.size(), threads, [&](std::size_t slot) {
      groups[slot] = collect_group(old, queries[picks[slot]], config, scorer, table,
                                   derive_seed(config.seed, {it, slot}));
    });
    if (observer)
      for (std::size_t slot = 0; slot < groups.size(); ++slot) observer(it, slot, groups[slot]);

    SurrogateResult sr;
    try {
      sr = surrogate_loss(result.params, groups, ref, config);
    } catch (const Error&) {
      if (checkpoint) checkpoint(it, result.params);
      throw;
    }
    auto& theta = result.params.theta();
    bool finite = true;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double next = theta[i] - config.learning_rate * sr.gradient[i];
      finite = finite && std::isfinite(next);
    }
    if (!finite) {
      if (checkpoint) checkpoint(it, result.params);
      throw Error(ErrorCode::kNonFiniteLoss, "parameter update became non-finite at iteration " +
                                                 std::to_string(it));
    }
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= config.learning_rate * sr.gradient[i];

    GrpoLogRow row;
    row.iter = it;
    std::size_t n = 0;
    for (const auto& g : groups) {
      for (const auto& b : g.rewards) {
        row.mean_reward += b.reward;
        row.mean_mclp += b.mclp;
        row.mean_cer += b.cer;
        row.gated_frac += b.gated ? 1.0 : 0.0;
        ++n;
      }
    }
    row.mean_reward /= static_cast<double>(n);
    row.mean_mclp /= static_cast<double>(n);
    row.mean_cer /= static_cast<double>(n);
    row.gated_frac /= static_cast<double>(n);
    row.mean_kl = sr.mean_kl;
    row.loss = sr.loss;
    result.log.push_back(row);

    if (checkpoint && config.checkpoint_every > 0 && (it + 1) % config.checkpoint_every == 0)
      checkpoint(it + 1, result.params);
  }
  return result;
}

}  // namespace mclp
