#pragma once

// Supervised fine-tuning: per-turn maximum likelihood with plain mini-batch
// gradient descent.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mclp/error.hpp"
#include "mclp/policy.hpp"
#include "mclp/rng.hpp"
#include "mclp/style_world.hpp"

namespace mclp {

struct SftSample {
  std::string scene_id;
  std::uint32_t turn_index = 0;
  Prompt prompt;
  Transcript transcript;
  TA4Sequence target;
};

/// Prompt for turn j: global context, turns 0..j-1 as history, and I_j.
inline Prompt prompt_for_turn(const DialogueScene& scene, std::size_t j) {
  Prompt p;
  p.scene_text = scene.spec.scene_text;
  p.profiles = scene.spec.profiles;
  for (std::size_t k = 0; k < j; ++k) {
    const auto& t = scene.turns[k];
    p.history.push_back({t.speaker, t.instruction, t.transcript, t.target});
  }
  p.speaker = scene.turns[j].speaker;
  p.instruction = scene.turns[j].instruction;
  return p;
}

inline std::vector<SftSample> decompose_session(const DialogueScene& scene) {
  std::vector<SftSample> out;
  out.reserve(scene.turn_count());
  for (std::size_t j = 0; j < scene.turn_count(); ++j) {
    out.push_back({scene.scene_id, static_cast<std::uint32_t>(j), prompt_for_turn(scene, j),
                   scene.turns[j].transcript, scene.turns[j].target});
  }
  return out;
}

struct SftConfig {
  double learning_rate = 0.5;
  std::uint32_t epochs = 20;
  std::uint32_t batch_size = 16;
  std::uint64_t seed = 0;
  bool include_audio_history = true;

  friend bool operator==(const SftConfig&, const SftConfig&) = default;
};

struct SftResult {
  PolicyParams params;
  // mean per-token NLL over the whole dataset after each epoch
  std::vector<double> loss_curve;
};

namespace detail {

struct ScoredTarget {
  std::vector<std::uint32_t> trace;
  std::vector<std::uint32_t> tokens;
};

inline std::vector<ScoredTarget> trace_samples(const FeatureConfig& fc,
                                               std::span<const SftSample> data,
                                               HistoryRegime regime) {
  std::vector<ScoredTarget> out;
  out.reserve(data.size());
  for (const auto& s : data) {
    out.push_back({feature_trace(fc, apply_regime(s.prompt, regime), s.target), s.target.audio_ids()});
  }
  return out;
}

inline double mean_token_nll(const PolicyParams& params, const std::vector<ScoredTarget>& data) {
  double nll = 0.0;
  std::size_t n = 0;
  std::vector<double> lp(params.audio_vocab());
  for (const auto& s : data) {
    for (std::size_t k = 0; k < s.trace.size(); ++k) {
      log_softmax(params.row(s.trace[k]), lp);
      nll -= lp[s.tokens[k]];
      ++n;
    }
  }
  return n ? nll / static_cast<double>(n) : 0.0;
}

}  // namespace detail

inline double mean_token_nll(const PolicyParams& params, std::span<const SftSample> data,
                             HistoryRegime regime = HistoryRegime::kWithHistory) {
  return detail::mean_token_nll(params, detail::trace_samples(params.config(), data, regime));
}

/// Minimizes the mean per-sample sequence NLL of each mini-batch.
inline SftResult sft_fit(PolicyParams params, std::span<const SftSample> data,
                         const SftConfig& config) {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "SFT dataset is empty");
  if (!(config.learning_rate >= 0.0) || config.epochs < 1 || config.batch_size < 1)
    throw Error(ErrorCode::kConfigInvalid, "bad SFT configuration");
  const auto regime = config.include_audio_history ? HistoryRegime::kWithHistory
                                                   : HistoryRegime::kWithoutHistory;
  const auto traced = detail::trace_samples(params.config(), data, regime);

  SftResult result;
  std::vector<std::size_t> order(data.size());
  std::vector<double> grad(params.theta().size());
  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = substream(config.seed, {epoch});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double w = 1.0 / static_cast<double>(end - start);
      for (std::size_t b = start; b < end; ++b) {
        const auto& s = traced[order[b]];
        for (std::size_t k = 0; k < s.trace.size(); ++k)
          accumulate_token_grad(params, s.trace[k], s.tokens[k], w, grad);
      }
      // ascend log-likelihood == descend NLL
      auto& theta = params.theta();
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += config.learning_rate * grad[i];
    }

    const double nll = detail::mean_token_nll(params, traced);
    if (!std::isfinite(nll)) {
      throw Error(ErrorCode::kNonFiniteLoss,
                  "SFT loss became non-finite at epoch " + std::to_string(epoch) +
                      " (learning rate " + std::to_string(config.learning_rate) + ")");
    }
    result.loss_curve.push_back(nll);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace mclp
