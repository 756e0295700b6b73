#pragma once

// Trainable generator: a tabular softmax over audio tokens indexed by a
// feature bucket. Text tokens are teacher-forced from the transcript and
// never modeled, so every likelihood and gradient covers audio tokens only.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "mclp/error.hpp"
#include "mclp/rng.hpp"
#include "mclp/ta4.hpp"

namespace mclp {

struct HistoryTurn {
  std::uint32_t speaker = 0;
  std::vector<std::uint32_t> instruction;
  Transcript transcript;
  std::optional<TA4Sequence> audio;

  friend bool operator==(const HistoryTurn&, const HistoryTurn&) = default;
};

/// Everything the generator may read for one turn: scene text S, profiles P,
/// prior turns H_<j and the turn instruction I_j.
struct Prompt {
  std::vector<std::uint32_t> scene_text;
  std::vector<std::vector<std::uint32_t>> profiles;
  std::vector<HistoryTurn> history;
  std::uint32_t speaker = 0;
  std::vector<std::uint32_t> instruction;

  friend bool operator==(const Prompt&, const Prompt&) = default;
};

enum class HistoryRegime { kWithHistory, kWithoutHistory };

inline const char* to_string(HistoryRegime r) {
  return r == HistoryRegime::kWithHistory ? "with_history" : "without_history";
}

/// Drops prior-turn audio; instructions and transcripts stay.
inline Prompt apply_regime(Prompt p, HistoryRegime regime) {
  if (regime == HistoryRegime::kWithoutHistory)
    for (auto& h : p.history) h.audio.reset();
  return p;
}

struct FeatureConfig {
  Vocab vocab{};
  std::uint32_t instruction_vocab = 8;
  std::uint32_t bucket_count = 4096;

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;

  // cue values: instruction tokens, then one per audio token copied from history
  std::uint32_t cue_count() const { return instruction_vocab + vocab.audio; }
  // group start, then (position in group, previous token)
  std::size_t state_count() const { return 1 + std::size_t{kAudioPerText - 1} * vocab.audio; }
  std::size_t feature_domain() const {
    return std::size_t{cue_count()} * vocab.text * state_count();
  }
};

/// Per-position style cues for one prompt. For each text token the speaker
/// already voiced in an earlier turn, the audio group used there (most recent
/// occurrence); positions whose text token never appeared fall back to the
/// most recent instruction token, then to the speaker's profile.
class CueMap {
 public:
  CueMap(const FeatureConfig& fc, const Prompt& p)
      : offset_(fc.instruction_vocab), groups_(fc.vocab.text) {
    if (!p.instruction.empty())
      fallback_ = std::min(p.instruction.back(), fc.instruction_vocab - 1);
    else if (p.speaker < p.profiles.size() && !p.profiles[p.speaker].empty())
      fallback_ = std::min(p.profiles[p.speaker].back(), fc.instruction_vocab - 1);
    for (const auto& h : p.history) {
      if (h.speaker != p.speaker || !h.audio) continue;
      const TA4Sequence& seq = *h.audio;
      for (std::size_t i = 0; i < seq.text_count(); ++i) {
        const std::uint32_t t = seq.text_at(i);
        if (t >= groups_.size()) continue;
        auto& g = groups_[t];
        g.emplace();
        for (std::size_t j = 0; j < kAudioPerText; ++j)
          (*g)[j] = std::min(seq.audio_at(i * kAudioPerText + j), fc.vocab.audio - 1);
      }
    }
  }

  std::uint32_t at(std::uint32_t text, std::size_t j) const {
    if (text < groups_.size() && groups_[text]) return offset_ + (*groups_[text])[j];
    return fallback_;
  }
  std::uint32_t fallback() const { return fallback_; }

 private:
  std::uint32_t offset_;
  std::uint32_t fallback_ = 0;
  std::vector<std::optional<std::array<std::uint32_t, kAudioPerText>>> groups_;
};

/// Exact index when the (cue, text, position, prev) domain fits the bucket
/// count, hashed otherwise. `prev` is ignored at position 0.
inline std::uint32_t feature_bucket(const FeatureConfig& fc, std::uint32_t cue, std::uint32_t text,
                                    std::size_t position, std::uint32_t prev) {
  const std::size_t state = position == 0 ? 0 : 1 + (position - 1) * fc.vocab.audio + prev;
  const std::size_t idx = (std::size_t{cue} * fc.vocab.text + text) * fc.state_count() + state;
  if (fc.feature_domain() <= fc.bucket_count) return static_cast<std::uint32_t>(idx);
  return static_cast<std::uint32_t>(mix64(idx) % fc.bucket_count);
}

class PolicyParams {
 public:
  PolicyParams() = default;
  explicit PolicyParams(FeatureConfig config)
      : config_(config), theta_(std::size_t{config.bucket_count} * config.vocab.audio, 0.0) {
    if (config.bucket_count == 0 || config.vocab.audio < 2 || config.instruction_vocab == 0)
      throw Error(ErrorCode::kConfigInvalid, "degenerate policy configuration");
  }
  PolicyParams(FeatureConfig config, std::vector<double> theta)
      : config_(config), theta_(std::move(theta)) {
    if (theta_.size() != std::size_t{config.bucket_count} * config.vocab.audio)
      throw Error(ErrorCode::kConfigInvalid, "theta has wrong size");
  }

  const FeatureConfig& config() const { return config_; }
  std::uint32_t audio_vocab() const { return config_.vocab.audio; }
  std::span<const double> row(std::uint32_t bucket) const {
    return {theta_.data() + std::size_t{bucket} * audio_vocab(), audio_vocab()};
  }
  std::span<double> row(std::uint32_t bucket) {
    return {theta_.data() + std::size_t{bucket} * audio_vocab(), audio_vocab()};
  }
  const std::vector<double>& theta() const { return theta_; }
  std::vector<double>& theta() { return theta_; }

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;

 private:
  FeatureConfig config_;
  std::vector<double> theta_;
};

inline void log_softmax(std::span<const double> logits, std::span<double> out,
                        double temperature = 1.0) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : logits) hi = std::max(hi, x / temperature);
  double acc = 0.0;
  for (double x : logits) acc += std::exp(x / temperature - hi);
  const double lse = hi + std::log(acc);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] / temperature - lse;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  log_softmax(logits, out);
  for (double& v : out) v = std::exp(v);
  return out;
}

/// Feature bucket of every audio position of `target` under `prompt`.
inline std::vector<std::uint32_t> feature_trace(const FeatureConfig& fc, const Prompt& prompt,
                                                const TA4Sequence& target) {
  const CueMap cues(fc, prompt);
  std::vector<std::uint32_t> trace;
  trace.reserve(target.audio_count());
  for (std::size_t k = 0; k < target.audio_count(); ++k) {
    const std::size_t j = k % kAudioPerText;
    const std::uint32_t text = target.text_of_audio(k);
    const std::uint32_t prev = j == 0 ? 0 : target.audio_at(k - 1);
    trace.push_back(feature_bucket(fc, cues.at(text, j), text, j, prev));
  }
  return trace;
}

struct LogProb {
  double total = 0.0;
  std::vector<double> per_token;
};

inline double token_logprob(const PolicyParams& params, std::uint32_t bucket, std::uint32_t token) {
  std::vector<double> lp(params.audio_vocab());
  log_softmax(params.row(bucket), lp);
  return lp[token];
}

inline LogProb logprob(const PolicyParams& params, const Prompt& prompt, const TA4Sequence& target) {
  const auto trace = feature_trace(params.config(), prompt, target);
  LogProb out;
  out.per_token.reserve(trace.size());
  for (std::size_t k = 0; k < trace.size(); ++k) {
    out.per_token.push_back(token_logprob(params, trace[k], target.audio_at(k)));
    out.total += out.per_token.back();
  }
  return out;
}

/// grad[f, .] += weight * (onehot(a) - softmax(theta[f, .])) at one position.
inline void accumulate_token_grad(const PolicyParams& params, std::uint32_t bucket,
                                  std::uint32_t token, double weight, std::vector<double>& grad) {
  const std::uint32_t A = params.audio_vocab();
  const auto p = softmax(params.row(bucket));
  double* g = grad.data() + std::size_t{bucket} * A;
  for (std::uint32_t a = 0; a < A; ++a) g[a] -= weight * p[a];
  g[token] += weight;
}

inline std::vector<double> logprob_grad(const PolicyParams& params, const Prompt& prompt,
                                        const TA4Sequence& target) {
  std::vector<double> grad(params.theta().size(), 0.0);
  const auto trace = feature_trace(params.config(), prompt, target);
  for (std::size_t k = 0; k < trace.size(); ++k)
    accumulate_token_grad(params, trace[k], target.audio_at(k), 1.0, grad);
  return grad;
}

struct Rollout {
  TA4Sequence sequence;
  // log-likelihood of each audio token under the sampling policy at temperature 1
  std::vector<double> per_token_logprob;
  std::vector<std::uint32_t> feature_trace;
};

inline Rollout sample(const PolicyParams& params, const Prompt& prompt,
                      const Transcript& transcript, double temperature, Rng& rng) {
  if (!(temperature > 0.0)) throw Error(ErrorCode::kConfigInvalid, "temperature must be > 0");
  const FeatureConfig& fc = params.config();
  const CueMap cues(fc, prompt);
  const std::uint32_t A = fc.vocab.audio;
  Rollout r;
  std::vector<std::uint32_t> audio;
  audio.reserve(transcript.size() * kAudioPerText);
  std::vector<double> lp(A), lp_t(A), probs(A);
  for (std::uint32_t text : transcript.text_ids) {
    std::uint32_t prev = 0;
    for (std::size_t j = 0; j < kAudioPerText; ++j) {
      const std::uint32_t f = feature_bucket(fc, cues.at(text, j), text, j, prev);
      log_softmax(params.row(f), lp_t, temperature);
      for (std::uint32_t a = 0; a < A; ++a) probs[a] = std::exp(lp_t[a]);
      const auto tok = static_cast<std::uint32_t>(rng.categorical(probs));
      log_softmax(params.row(f), lp);
      r.per_token_logprob.push_back(lp[tok]);
      r.feature_trace.push_back(f);
      audio.push_back(tok);
      prev = tok;
    }
  }
  r.sequence = interleave(transcript, audio);
  return r;
}

/// Exact categorical KL(pi_p(.|f) || pi_q(.|f)).
inline double kl_token(const PolicyParams& p, const PolicyParams& q, std::uint32_t feature) {
  const std::uint32_t A = p.audio_vocab();
  std::vector<double> lp(A), lq(A);
  log_softmax(p.row(feature), lp);
  log_softmax(q.row(feature), lq);
  double kl = 0.0;
  for (std::uint32_t a = 0; a < A; ++a) kl += std::exp(lp[a]) * (lp[a] - lq[a]);
  return std::max(0.0, kl);
}

/// Single-sample estimator r - log r - 1 with r = pi_q(token) / pi_p(token);
/// unbiased for KL(pi_p || pi_q) when token ~ pi_p.
inline double kl_token_sampled(const PolicyParams& p, const PolicyParams& q,
                               std::uint32_t feature, std::uint32_t token) {
  const double log_r = token_logprob(q, feature, token) - token_logprob(p, feature, token);
  return std::exp(log_r) - log_r - 1.0;
}

}  // namespace mclp
