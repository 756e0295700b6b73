#pragma once

// Gated hybrid reward: R = MCLP + C - lambda * CER, zeroed when CER > tau.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mclp/fidelity.hpp"
#include "mclp/mclp_scorer.hpp"
#include "mclp/rng.hpp"
#include "mclp/ta4.hpp"

namespace mclp {

enum class RewardKind {
  kHybrid,       // gated style reward minus content penalty
  kContentOnly,  // -lambda * CER, no gate
};

struct RewardConfig {
  double bias = 15.0;
  double cer_penalty = 10.0;
  double gate_threshold = 0.2;
  RewardKind kind = RewardKind::kHybrid;

  static RewardConfig style_only() {
    RewardConfig c;
    c.cer_penalty = 0.0;
    c.gate_threshold = std::numeric_limits<double>::infinity();
    return c;
  }
  static RewardConfig content_only() {
    RewardConfig c;
    c.kind = RewardKind::kContentOnly;
    return c;
  }

  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

struct RewardBreakdown {
  double mclp = 0.0;
  double cer = 0.0;
  double r_style = 0.0;
  double r_content = 0.0;
  bool gated = false;
  double reward = 0.0;
};

inline RewardBreakdown assemble_reward(const RewardConfig& config, double mclp_value,
                                       double cer_value) {
  RewardBreakdown b;
  b.mclp = mclp_value;
  b.cer = cer_value;
  b.r_style = mclp_value + config.bias;
  b.r_content = config.cer_penalty * cer_value;
  if (config.kind == RewardKind::kContentOnly) {
    b.gated = false;
    b.reward = -b.r_content;
    return b;
  }
  // strict: a CER equal to the threshold passes the gate
  b.gated = cer_value > config.gate_threshold;
  b.reward = b.gated ? 0.0 : b.r_style - b.r_content;
  return b;
}

/// One decode per rollout feeds both the gate and the penalty.
template <AudioScorer S>
RewardBreakdown compute_reward(const RewardConfig& config, const TA4Sequence& rollout,
                               const TA4Sequence& z_gt, const Transcript& w, const S& scorer,
                               const DecodeTable& table, Rng& rng) {
  const double m = mclp(scorer, rollout, z_gt, w).value;
  const Transcript hyp = decode(table, rollout, rng);
  return assemble_reward(config, m, cer(hyp, w).value);
}

/// Rollout i decodes with the substream derived from (seed, i).
template <AudioScorer S>
std::vector<RewardBreakdown> reward_group(const RewardConfig& config,
                                          std::span<const TA4Sequence> rollouts,
                                          const TA4Sequence& z_gt, const Transcript& w,
                                          const S& scorer, const DecodeTable& table,
                                          std::uint64_t seed) {
  if (rollouts.empty()) throw Error(ErrorCode::kGroupTooSmall, "empty rollout group");
  std::vector<RewardBreakdown> out;
  out.reserve(rollouts.size());
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    Rng rng = substream(seed, {i});
    out.push_back(compute_reward(config, rollouts[i], z_gt, w, scorer, table, rng));
  }
  return out;
}

}  // namespace mclp
