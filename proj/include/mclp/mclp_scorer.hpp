#pragma once

// Mean continuation log-probability: the mean log-likelihood a scorer assigns
// to the reference's audio tokens after reading [w, candidate, w].
// Also the exact enumeration oracle relating expected score to the
// conditional entropy of the reference given the candidate.

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mclp/error.hpp"
#include "mclp/style_world.hpp"
#include "mclp/ta4.hpp"

namespace mclp {

template <class S>
concept AudioScorer = requires(const S& s, std::span<const ContextSegment> ctx, const TA4Sequence& t) {
  { s.audio_logprobs(ctx, t) } -> std::convertible_to<std::vector<double>>;
};

/// H = [w, z_eval, w], separated by SEP markers. Text-only segments carry no
/// style evidence; the candidate's audio updates the style posterior.
struct ContinuationContext {
  const Transcript* w = nullptr;
  const TA4Sequence* z_eval = nullptr;

  std::array<ContextSegment, 3> segments() const {
    return {std::cref(*w), std::cref(*z_eval), std::cref(*w)};
  }

  std::vector<Token> tokens() const {
    std::vector<Token> out;
    for (auto id : w->text_ids) out.push_back(Token::text(id));
    out.push_back(Token::marker(Marker::kSep));
    out.insert(out.end(), z_eval->tokens().begin(), z_eval->tokens().end());
    out.push_back(Token::marker(Marker::kSep));
    for (auto id : w->text_ids) out.push_back(Token::text(id));
    return out;
  }
};

struct MclpScore {
  double value = 0.0;
  std::size_t n_audio_tokens = 0;
};

template <AudioScorer S>
MclpScore mclp(const S& scorer, const TA4Sequence& z_eval, const TA4Sequence& z_gt,
               const Transcript& w) {
  if (w.empty() || z_gt.empty()) throw Error(ErrorCode::kEmptyTarget, "empty reference");
  if (z_eval.transcript() != w || z_gt.transcript() != w)
    throw Error(ErrorCode::kTranscriptMismatch, "candidate/reference transcript differs from w");
  const ContinuationContext ctx{&w, &z_eval};
  const auto segs = ctx.segments();
  const std::vector<double> lp = scorer.audio_logprobs(segs, z_gt);
  double sum = 0.0;
  for (double v : lp) sum += v;
  return {sum / static_cast<double>(lp.size()), lp.size()};
}

template <AudioScorer S>
std::vector<std::vector<MclpScore>> mclp_matrix(const S& scorer,
                                                std::span<const TA4Sequence> candidates,
                                                std::span<const TA4Sequence> references,
                                                const Transcript& w) {
  std::vector<std::vector<MclpScore>> out(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out[i].reserve(references.size());
    for (const auto& ref : references) out[i].push_back(mclp(scorer, candidates[i], ref, w));
  }
  return out;
}

// ---------------------------------------------------------------------------
// enumeration oracle

/// A candidate generator for the enumeration oracle: gives the exact
/// probability of a candidate's audio given the latent style and transcript.
template <class G>
concept CandidateGenerator = requires(const G& g, std::size_t style, const TA4Sequence& seq) {
  { g.probability(style, seq) } -> std::convertible_to<double>;
};

/// Candidates drawn from the true emitter of the reference's style.
struct TrueGenerator {
  const OracleModel* world;
  double probability(std::size_t style, const TA4Sequence& seq) const {
    return std::exp(world->log_likelihood(style, seq));
  }
};

/// Candidates with i.i.d. uniform audio, independent of style.
struct UniformAudioGenerator {
  std::uint32_t audio_vocab;
  double probability(std::size_t, const TA4Sequence& seq) const {
    return std::pow(1.0 / audio_vocab, static_cast<double>(seq.audio_count()));
  }
};

struct EntropyReport {
  // all entropies are per reference audio token, in nats
  double conditional_entropy = 0.0;  // H(Z_gt | Z_eval, W)
  double marginal_entropy = 0.0;     // H(Z_gt | W)
  double mutual_information = 0.0;   // I(Z_eval; Z_gt | W)
  double expected_mclp = 0.0;
  std::size_t n_pairs = 0;
};

struct EnumerationLimits {
  std::size_t max_styles = 3;
  std::uint32_t max_audio_vocab = 3;
  std::size_t max_transcript_len = 2;
  // total scored (w, z_eval, z_gt) triples
  std::size_t max_triples = 20'000'000;
};

/// Exact joint enumeration over transcripts (uniform), candidates and
/// references. The entropy side uses only the generative probabilities; the
/// score side runs `mclp` with the oracle scorer on every pair.
template <CandidateGenerator G>
EntropyReport conditional_entropy_oracle(const OracleModel& world, std::size_t transcript_length,
                                         const G& eval_policy, EnumerationLimits limits = {}) {
  const Vocab v = world.vocab();
  const std::size_t K = world.n_styles();
  if (K > limits.max_styles || v.audio > limits.max_audio_vocab ||
      transcript_length > limits.max_transcript_len || transcript_length == 0)
    throw Error(ErrorCode::kInstanceTooLarge, "instance exceeds enumeration bounds");
  const std::size_t n_audio = transcript_length * kAudioPerText;
  std::size_t n_seq = 1;
  for (std::size_t i = 0; i < n_audio; ++i) n_seq *= v.audio;
  std::size_t n_w = 1;
  for (std::size_t i = 0; i < transcript_length; ++i) n_w *= v.text;
  if (n_w * n_seq * n_seq > limits.max_triples)
    throw Error(ErrorCode::kInstanceTooLarge, "too many (w, z_eval, z_gt) triples");

  EntropyReport rep;
  const double pw = 1.0 / static_cast<double>(n_w);
  std::vector<TA4Sequence> seqs(n_seq);
  std::vector<double> e(n_seq * K), g(n_seq * K);
  std::vector<std::uint32_t> audio(n_audio);
  for (std::size_t wi = 0; wi < n_w; ++wi) {
    Transcript w;
    for (std::size_t i = 0, x = wi; i < transcript_length; ++i, x /= v.text)
      w.text_ids.push_back(static_cast<std::uint32_t>(x % v.text));
    for (std::size_t zi = 0; zi < n_seq; ++zi) {
      for (std::size_t i = 0, x = zi; i < n_audio; ++i, x /= v.audio)
        audio[i] = static_cast<std::uint32_t>(x % v.audio);
      seqs[zi] = interleave(w, audio);
      for (std::size_t s = 0; s < K; ++s) {
        e[zi * K + s] = eval_policy.probability(s, seqs[zi]);
        g[zi * K + s] = std::exp(world.log_likelihood(s, seqs[zi]));
      }
    }
    // H(Z_gt | W = w)
    for (std::size_t zg = 0; zg < n_seq; ++zg) {
      double p = 0.0;
      for (std::size_t s = 0; s < K; ++s) p += world.prior()[s] * g[zg * K + s];
      if (p > 0.0) rep.marginal_entropy -= pw * p * std::log(p);
    }
    for (std::size_t ze = 0; ze < n_seq; ++ze) {
      double p_eval = 0.0;
      for (std::size_t s = 0; s < K; ++s) p_eval += world.prior()[s] * e[ze * K + s];
      if (p_eval <= 0.0) continue;
      for (std::size_t zg = 0; zg < n_seq; ++zg) {
        double joint = 0.0;
        for (std::size_t s = 0; s < K; ++s)
          joint += world.prior()[s] * e[ze * K + s] * g[zg * K + s];
        if (joint <= 0.0) continue;
        rep.conditional_entropy -= pw * joint * std::log(joint / p_eval);
        rep.expected_mclp += pw * joint * mclp(world, seqs[ze], seqs[zg], w).value;
        ++rep.n_pairs;
      }
    }
  }
  rep.conditional_entropy /= static_cast<double>(n_audio);
  rep.marginal_entropy /= static_cast<double>(n_audio);
  rep.mutual_information = rep.marginal_entropy - rep.conditional_entropy;
  return rep;
}

}  // namespace mclp
