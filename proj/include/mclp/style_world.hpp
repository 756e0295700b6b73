#pragma once

// The synthetic generative world. A finite set of latent styles, each a
// conditional emission model P(audio | style, text, previous audio), plus
// per-style instruction-token tables. The same tables define the exact
// Bayesian mixture density (OracleModel) used for continuation scoring, so
// the scorer is the data-generating distribution by construction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mclp/error.hpp"
#include "mclp/fidelity.hpp"
#include "mclp/rng.hpp"
#include "mclp/ta4.hpp"

namespace mclp {

struct InstructionTokens {
  std::span<const std::uint32_t> ids;
};

/// One element of a scoring context. Transcripts carry no style evidence;
/// TA4 sequences and instruction tokens update the style posterior.
using ContextSegment = std::variant<std::reference_wrapper<const Transcript>,
                                    std::reference_wrapper<const TA4Sequence>, InstructionTokens>;

inline double log_sum_exp(std::span<const double> xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

/// P(audio | text, prev) for one style. `prev` is the preceding audio token
/// inside the same text token's group; `prev == audio_vocab` is the start
/// state every group opens from.
class EmissionTable {
 public:
  EmissionTable() = default;
  EmissionTable(Vocab vocab, std::vector<double> probs) : vocab_(vocab), p_(std::move(probs)) {
    if (p_.size() != row_count() * vocab_.audio)
      throw Error(ErrorCode::kConfigInvalid, "emission table has wrong size");
    for (std::size_t r = 0; r < row_count(); ++r) {
      double sum = 0.0;
      for (std::size_t a = 0; a < vocab_.audio; ++a) {
        const double v = p_[r * vocab_.audio + a];
        if (!(v >= 0.0)) throw Error(ErrorCode::kConfigInvalid, "negative emission probability");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw Error(ErrorCode::kConfigInvalid, "emission row does not sum to 1");
    }
    logp_.resize(p_.size());
    std::transform(p_.begin(), p_.end(), logp_.begin(), [](double v) { return std::log(v); });
  }

  std::uint32_t start_state() const { return vocab_.audio; }
  std::size_t row_count() const { return std::size_t{vocab_.text} * (vocab_.audio + 1); }
  std::size_t row_index(std::uint32_t text, std::uint32_t prev) const {
    return std::size_t{text} * (vocab_.audio + 1) + prev;
  }
  std::span<const double> row(std::uint32_t text, std::uint32_t prev) const {
    return {p_.data() + row_index(text, prev) * vocab_.audio, vocab_.audio};
  }
  double prob(std::uint32_t text, std::uint32_t prev, std::uint32_t audio) const {
    return p_[row_index(text, prev) * vocab_.audio + audio];
  }
  double logprob(std::uint32_t text, std::uint32_t prev, std::uint32_t audio) const {
    return logp_[row_index(text, prev) * vocab_.audio + audio];
  }
  const Vocab& vocab() const { return vocab_; }
  const std::vector<double>& probs() const { return p_; }

 private:
  Vocab vocab_;
  std::vector<double> p_;
  std::vector<double> logp_;
};

class OracleModel {
 public:
  OracleModel() = default;
  OracleModel(std::vector<double> prior, std::vector<EmissionTable> emitters,
              std::vector<std::vector<double>> instruction_tables)
      : prior_(std::move(prior)),
        emitters_(std::move(emitters)),
        instruction_(std::move(instruction_tables)) {
    if (prior_.empty() || prior_.size() != emitters_.size() ||
        prior_.size() != instruction_.size()) {
      throw Error(ErrorCode::kConfigInvalid, "prior, emitters and instruction tables disagree");
    }
    check_distribution(prior_, "style prior");
    for (const auto& e : emitters_)
      if (!(e.vocab() == emitters_.front().vocab()))
        throw Error(ErrorCode::kConfigInvalid, "emitters use different vocabularies");
    for (const auto& t : instruction_) {
      if (t.size() != instruction_.front().size() || t.empty())
        throw Error(ErrorCode::kConfigInvalid, "instruction tables disagree in size");
      check_distribution(t, "instruction table");
    }
    log_prior_.resize(prior_.size());
    std::transform(prior_.begin(), prior_.end(), log_prior_.begin(),
                   [](double v) { return std::log(v); });
  }

  std::size_t n_styles() const { return prior_.size(); }
  const Vocab& vocab() const { return emitters_.front().vocab(); }
  std::uint32_t instruction_vocab() const {
    return static_cast<std::uint32_t>(instruction_.front().size());
  }
  const std::vector<double>& prior() const { return prior_; }
  const std::vector<double>& log_prior() const { return log_prior_; }
  const EmissionTable& emitter(std::size_t style) const { return emitters_[style]; }
  const std::vector<EmissionTable>& emitters() const { return emitters_; }
  const std::vector<double>& instruction_table(std::size_t style) const {
    return instruction_[style];
  }
  const std::vector<std::vector<double>>& instruction_tables() const { return instruction_; }

  /// log P(audio tokens of seq | style, its transcript)
  double log_likelihood(std::size_t style, const TA4Sequence& seq) const {
    const EmissionTable& e = emitters_[style];
    double acc = 0.0;
    std::uint32_t prev = e.start_state();
    for (std::size_t k = 0; k < seq.audio_count(); ++k) {
      if (k % kAudioPerText == 0) prev = e.start_state();
      const std::uint32_t a = seq.audio_at(k);
      acc += e.logprob(seq.text_of_audio(k), prev, a);
      prev = a;
    }
    return acc;
  }

  /// Per-token log predictive probabilities of the target's audio tokens
  /// under the style mixture, given the context and the target's own prefix.
  std::vector<double> audio_logprobs(std::span<const ContextSegment> context,
                                     const TA4Sequence& target) const;

  /// Bayes posterior over styles after observing every context segment.
  std::vector<double> posterior(std::span<const ContextSegment> context) const;

 private:
  static void check_distribution(const std::vector<double>& p, const char* what) {
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) throw Error(ErrorCode::kConfigInvalid, std::string(what) + " is negative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw Error(ErrorCode::kConfigInvalid, std::string(what) + " does not sum to 1");
  }

  std::vector<double> prior_;
  std::vector<double> log_prior_;
  std::vector<EmissionTable> emitters_;
  std::vector<std::vector<double>> instruction_;
};

/// Sequential style belief in log space, renormalized after every update.
class StyleBelief {
 public:
  explicit StyleBelief(const OracleModel& model)
      : model_(&model), logw_(model.log_prior()), scratch_(model.n_styles()) {}

  void observe(const ContextSegment& seg) {
    std::visit(
        [this](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, InstructionTokens>) {
            observe_instruction(s.ids);
          } else if constexpr (std::is_same_v<S, std::reference_wrapper<const TA4Sequence>>) {
            observe_audio(s.get());
          }
        },
        seg);
  }

  void observe_instruction(std::span<const std::uint32_t> ids) {
    for (std::uint32_t tok : ids) {
      for (std::size_t s = 0; s < logw_.size(); ++s)
        logw_[s] += std::log(model_->instruction_table(s)[tok]);
    }
    normalize();
  }

  void observe_audio(const TA4Sequence& seq) {
    std::uint32_t prev = model_->vocab().audio;
    for (std::size_t k = 0; k < seq.audio_count(); ++k) {
      if (k % kAudioPerText == 0) prev = model_->vocab().audio;
      const std::uint32_t a = seq.audio_at(k);
      for (std::size_t s = 0; s < logw_.size(); ++s)
        logw_[s] += model_->emitter(s).logprob(seq.text_of_audio(k), prev, a);
      prev = a;
    }
    normalize();
  }

  /// log P(audio | text, prev, evidence so far); then conditions on it.
  double predict_and_observe(std::uint32_t text, std::uint32_t prev, std::uint32_t audio) {
    for (std::size_t s = 0; s < logw_.size(); ++s)
      scratch_[s] = logw_[s] + model_->emitter(s).logprob(text, prev, audio);
    const double lp = log_sum_exp(scratch_);
    for (std::size_t s = 0; s < logw_.size(); ++s) logw_[s] = scratch_[s] - lp;
    return lp;
  }

  std::vector<double> posterior() const {
    std::vector<double> p(logw_.size());
    const double z = log_sum_exp(logw_);
    for (std::size_t s = 0; s < p.size(); ++s) p[s] = std::exp(logw_[s] - z);
    return p;
  }

 private:
  void normalize() {
    const double z = log_sum_exp(logw_);
    if (!std::isfinite(z)) return;
    for (double& w : logw_) w -= z;
  }

  const OracleModel* model_;
  std::vector<double> logw_;
  std::vector<double> scratch_;
};

inline std::vector<double> OracleModel::audio_logprobs(std::span<const ContextSegment> context,
                                                       const TA4Sequence& target) const {
  StyleBelief belief(*this);
  for (const auto& seg : context) belief.observe(seg);
  std::vector<double> out;
  out.reserve(target.audio_count());
  std::uint32_t prev = vocab().audio;
  for (std::size_t k = 0; k < target.audio_count(); ++k) {
    if (k % kAudioPerText == 0) prev = vocab().audio;
    const std::uint32_t a = target.audio_at(k);
    out.push_back(belief.predict_and_observe(target.text_of_audio(k), prev, a));
    prev = a;
  }
  return out;
}

inline std::vector<double> OracleModel::posterior(std::span<const ContextSegment> context) const {
  StyleBelief belief(*this);
  for (const auto& seg : context) belief.observe(seg);
  return belief.posterior();
}

inline std::vector<double> style_posterior(const OracleModel& model,
                                           std::span<const ContextSegment> context) {
  return model.posterior(context);
}

inline std::vector<double> oracle_logprob(const OracleModel& model,
                                          std::span<const ContextSegment> context,
                                          const TA4Sequence& target) {
  return model.audio_logprobs(context, target);
}

/// Draws the audio tokens for `transcript` from one style's emitter.
inline TA4Sequence sample_utterance(const OracleModel& model, std::size_t style,
                                    const Transcript& transcript, Rng& rng) {
  const EmissionTable& e = model.emitter(style);
  std::vector<std::uint32_t> audio;
  audio.reserve(transcript.size() * kAudioPerText);
  for (std::uint32_t t : transcript.text_ids) {
    std::uint32_t prev = e.start_state();
    for (std::size_t j = 0; j < kAudioPerText; ++j) {
      const auto a = static_cast<std::uint32_t>(rng.categorical(e.row(t, prev)));
      audio.push_back(a);
      prev = a;
    }
  }
  return interleave(transcript, audio);
}

// ---------------------------------------------------------------------------
// world generation

enum class StyleLabel { kNeutral, kNotNeutral };

inline std::string to_string(StyleLabel l) {
  return l == StyleLabel::kNeutral ? "Neutral" : "NotNeutral";
}

struct WorldConfig {
  std::uint32_t n_styles = 2;
  Vocab vocab{};
  std::uint32_t instruction_vocab = 8;
  double emission_concentration = 0.3;
  double instruction_concentration = 1.0;
  // minimum mean per-row total-variation distance between any two emitters
  double separation_floor = 0.2;
  double smoothing = 1e-6;
  std::uint32_t scene_text_len = 4;
  std::uint32_t profile_len = 3;
  std::uint32_t instruction_len = 2;
  std::uint32_t min_transcript_len = 4;
  std::uint32_t max_transcript_len = 12;
  std::uint32_t max_turns = 10;
  std::vector<std::uint32_t> neutral_styles;
  double decode_noise = 0.0;
  std::uint32_t max_regenerations = 10000;

  friend bool operator==(const WorldConfig&, const WorldConfig&) = default;
};

struct StyleWorld {
  WorldConfig config;
  OracleModel oracle;
  DecodeTable decoder;
  std::vector<StyleLabel> labels;
};

namespace detail {

inline std::vector<double> dirichlet_row(Rng& rng, std::size_t n, double alpha, double eps) {
  std::vector<double> row(n);
  double sum = 0.0;
  for (double& v : row) {
    v = rng.gamma(alpha);
    sum += v;
  }
  if (!(sum > 0.0)) {
    std::fill(row.begin(), row.end(), 0.0);
    row[rng.uniform_index(n)] = 1.0;
    sum = 1.0;
  }
  double total = 0.0;
  for (double& v : row) {
    v = v / sum + eps;
    total += v;
  }
  for (double& v : row) v /= total;
  return row;
}

inline std::vector<double> dirichlet_table(Rng& rng, Vocab vocab, double alpha, double eps) {
  const std::size_t rows = std::size_t{vocab.text} * (vocab.audio + 1);
  std::vector<double> table;
  table.reserve(rows * vocab.audio);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = dirichlet_row(rng, vocab.audio, alpha, eps);
    table.insert(table.end(), row.begin(), row.end());
  }
  return table;
}

// mean over conditioning rows of the total-variation distance
inline double mean_row_tv(const std::vector<double>& a, const std::vector<double>& b,
                          std::uint32_t audio) {
  const std::size_t rows = a.size() / audio;
  double acc = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double tv = 0.0;
    for (std::size_t j = 0; j < audio; ++j) tv += std::abs(a[r * audio + j] - b[r * audio + j]);
    acc += 0.5 * tv;
  }
  return acc / static_cast<double>(rows);
}

// P(tuple | style, text); every group opens from the start state.
inline std::vector<double> tuple_marginals(const EmissionTable& e, std::uint32_t text) {
  const std::uint32_t A = e.vocab().audio;
  const auto first = e.row(text, e.start_state());
  const std::size_t n = DecodeTable::tuple_count(A);
  std::vector<double> out(n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    const auto tup = DecodeTable::tuple_at(idx, A);
    double p = first[tup[0]];
    for (std::size_t j = 1; j < kAudioPerText; ++j) p *= e.prob(text, tup[j - 1], tup[j]);
    out[idx] = p;
  }
  return out;
}

}  // namespace detail

/// Maximum-likelihood decoder over the world: each 4-tuple maps to the text
/// token that best explains it, and every (style, text) modal tuple is forced
/// to decode to its own text token. Returns false on an irreconcilable clash
/// between two modal tuples (the caller regenerates the offending rows).
inline bool build_decode_table(const OracleModel& oracle, double noise, DecodeTable& out,
                               std::size_t& clash_style, std::uint32_t& clash_text) {
  const Vocab v = oracle.vocab();
  const std::size_t n = DecodeTable::tuple_count(v.audio);
  std::vector<double> best(n, -1.0);
  std::vector<std::uint32_t> mapping(n, 0);
  std::vector<std::size_t> modal_owner(n, std::numeric_limits<std::size_t>::max());
  std::vector<std::uint32_t> forced(n, 0);
  for (std::uint32_t t = 0; t < v.text; ++t) {
    std::vector<double> mix(n, 0.0);
    for (std::size_t s = 0; s < oracle.n_styles(); ++s) {
      const auto m = detail::tuple_marginals(oracle.emitter(s), t);
      const auto modal = static_cast<std::size_t>(std::max_element(m.begin(), m.end()) - m.begin());
      if (modal_owner[modal] != std::numeric_limits<std::size_t>::max() && forced[modal] != t) {
        clash_style = s;
        clash_text = t;
        return false;
      }
      modal_owner[modal] = s;
      forced[modal] = t;
      for (std::size_t i = 0; i < n; ++i) mix[i] += oracle.prior()[s] * m[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (mix[i] > best[i]) {
        best[i] = mix[i];
        mapping[i] = t;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (modal_owner[i] != std::numeric_limits<std::size_t>::max()) mapping[i] = forced[i];
  out = DecodeTable(v, std::move(mapping), noise);
  return true;
}

inline void validate(const WorldConfig& c) {
  if (c.n_styles < 1 || c.vocab.text < 2 || c.vocab.audio < 2 || c.instruction_vocab < 1)
    throw Error(ErrorCode::kConfigInvalid, "degenerate world sizes");
  if (!(c.emission_concentration > 0.0) || !(c.instruction_concentration > 0.0))
    throw Error(ErrorCode::kConfigInvalid, "Dirichlet concentrations must be positive");
  if (!(c.smoothing > 0.0)) throw Error(ErrorCode::kConfigInvalid, "smoothing must be positive");
  if (c.min_transcript_len < 1 || c.max_transcript_len < c.min_transcript_len)
    throw Error(ErrorCode::kConfigInvalid, "bad transcript length range");
  if (c.max_turns < 1) throw Error(ErrorCode::kConfigInvalid, "max_turns must be >= 1");
  if (c.separation_floor >= 1.0)
    throw Error(ErrorCode::kConfigInvalid, "separation floor must be below 1");
  for (auto s : c.neutral_styles)
    if (s >= c.n_styles) throw Error(ErrorCode::kConfigInvalid, "neutral style out of range");
}

/// Deterministic in (config, seed).
inline StyleWorld generate_world(const WorldConfig& config, std::uint64_t seed) {
  validate(config);
  Rng rng(seed);
  const Vocab v = config.vocab;
  const std::size_t K = config.n_styles;

  std::vector<std::vector<double>> tables;
  tables.reserve(K);
  std::uint32_t attempts = 0;
  for (std::size_t s = 0; s < K; ++s) {
    while (true) {
      auto table = detail::dirichlet_table(rng, v, config.emission_concentration, config.smoothing);
      bool separated = true;
      for (const auto& other : tables) {
        if (detail::mean_row_tv(table, other, v.audio) < config.separation_floor) {
          separated = false;
          break;
        }
      }
      if (separated) {
        tables.push_back(std::move(table));
        break;
      }
      if (++attempts > config.max_regenerations)
        throw Error(ErrorCode::kConfigInvalid, "cannot reach the style separation floor");
    }
  }

  std::vector<std::vector<double>> instruction;
  for (std::size_t s = 0; s < K; ++s)
    instruction.push_back(detail::dirichlet_row(rng, config.instruction_vocab,
                                                config.instruction_concentration,
                                                config.smoothing));

  const std::vector<double> prior(K, 1.0 / static_cast<double>(K));
  auto make_oracle = [&] {
    std::vector<EmissionTable> emitters;
    for (const auto& t : tables) emitters.emplace_back(v, t);
    return OracleModel(prior, std::move(emitters), instruction);
  };

  StyleWorld world;
  world.config = config;
  world.oracle = make_oracle();
  while (true) {
    std::size_t clash_style = 0;
    std::uint32_t clash_text = 0;
    if (build_decode_table(world.oracle, config.decode_noise, world.decoder, clash_style,
                           clash_text))
      break;
    if (++attempts > config.max_regenerations)
      throw Error(ErrorCode::kConfigInvalid, "cannot build a consistent decode table");
    // redraw the clashing style's rows for that text token
    auto& table = tables[clash_style];
    bool separated = false;
    while (!separated) {
      for (std::uint32_t prev = 0; prev <= v.audio; ++prev) {
        auto row = detail::dirichlet_row(rng, v.audio, config.emission_concentration,
                                         config.smoothing);
        const std::size_t base = (std::size_t{clash_text} * (v.audio + 1) + prev) * v.audio;
        std::copy(row.begin(), row.end(), table.begin() + static_cast<std::ptrdiff_t>(base));
      }
      separated = true;
      for (std::size_t o = 0; o < K; ++o)
        if (o != clash_style &&
            detail::mean_row_tv(table, tables[o], v.audio) < config.separation_floor)
          separated = false;
      if (!separated && ++attempts > config.max_regenerations)
        throw Error(ErrorCode::kConfigInvalid, "cannot reach the style separation floor");
    }
    world.oracle = make_oracle();
  }

  world.labels.assign(K, StyleLabel::kNotNeutral);
  for (auto s : config.neutral_styles) world.labels[s] = StyleLabel::kNeutral;
  return world;
}

// ---------------------------------------------------------------------------
// scenes

struct SceneSpec {
  std::vector<std::uint32_t> scene_text;
  std::vector<std::vector<std::uint32_t>> profiles;
  // latent; evaluation-only
  std::vector<std::uint32_t> style_map;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

struct DialogueTurn {
  std::uint32_t speaker = 0;
  std::vector<std::uint32_t> instruction;
  Transcript transcript;
  TA4Sequence target;

  friend bool operator==(const DialogueTurn&, const DialogueTurn&) = default;
};

struct DialogueScene {
  std::string scene_id;
  std::string source_id;
  SceneSpec spec;
  std::vector<DialogueTurn> turns;

  std::size_t turn_count() const { return turns.size(); }
  std::uint32_t style_of_turn(std::size_t j) const { return spec.style_map[turns[j].speaker]; }

  friend bool operator==(const DialogueScene&, const DialogueScene&) = default;
};

inline std::vector<std::uint32_t> sample_instruction(const OracleModel& m, std::size_t style,
                                                     std::size_t len, Rng& rng) {
  std::vector<std::uint32_t> out(len);
  for (auto& tok : out)
    tok = static_cast<std::uint32_t>(rng.categorical(m.instruction_table(style)));
  return out;
}

inline DialogueScene sample_scene(const StyleWorld& world, std::size_t n_turns,
                                  std::size_t n_characters, std::uint64_t seed) {
  const WorldConfig& c = world.config;
  if (n_turns < 1 || n_turns > c.max_turns)
    throw Error(ErrorCode::kConfigInvalid, "turn count outside [1, max_turns]");
  if (n_characters < 1 || n_characters > world.oracle.n_styles())
    throw Error(ErrorCode::kConfigInvalid, "need 1 <= characters <= styles");
  Rng rng(seed);
  const OracleModel& m = world.oracle;

  DialogueScene scene;
  scene.scene_id = "scene-" + std::to_string(seed);
  scene.source_id = scene.scene_id;

  std::vector<std::uint32_t> styles(m.n_styles());
  std::iota(styles.begin(), styles.end(), 0u);
  for (std::size_t i = styles.size(); i > 1; --i) std::swap(styles[i - 1], styles[rng.uniform_index(i)]);
  scene.spec.style_map.assign(styles.begin(), styles.begin() + static_cast<std::ptrdiff_t>(n_characters));

  for (std::size_t i = 0; i < c.scene_text_len; ++i) {
    const auto who = rng.uniform_index(n_characters);
    scene.spec.scene_text.push_back(
        sample_instruction(m, scene.spec.style_map[who], 1, rng).front());
  }
  for (std::size_t k = 0; k < n_characters; ++k)
    scene.spec.profiles.push_back(
        sample_instruction(m, scene.spec.style_map[k], std::max<std::size_t>(1, c.profile_len), rng));

  for (std::size_t j = 0; j < n_turns; ++j) {
    DialogueTurn turn;
    turn.speaker = static_cast<std::uint32_t>(rng.uniform_index(n_characters));
    const std::uint32_t style = scene.spec.style_map[turn.speaker];
    turn.instruction = sample_instruction(m, style, c.instruction_len, rng);
    const std::size_t len =
        c.min_transcript_len + rng.uniform_index(c.max_transcript_len - c.min_transcript_len + 1);
    for (std::size_t i = 0; i < len; ++i)
      turn.transcript.text_ids.push_back(static_cast<std::uint32_t>(rng.uniform_index(c.vocab.text)));
    turn.target = sample_utterance(m, style, turn.transcript, rng);
    scene.turns.push_back(std::move(turn));
  }
  return scene;
}

struct CorpusConfig {
  std::uint32_t n_scenes = 200;
  std::uint32_t min_turns = 1;
  std::uint32_t max_turns = 6;
  std::uint32_t n_characters = 2;
  std::uint32_t scenes_per_source = 10;

  friend bool operator==(const CorpusConfig&, const CorpusConfig&) = default;
};

/// Scene i gets id "scene-<i>" and source "src-<i / scenes_per_source>".
inline std::vector<DialogueScene> sample_corpus(const StyleWorld& world, const CorpusConfig& cc,
                                                std::uint64_t seed) {
  if (cc.min_turns < 1 || cc.max_turns < cc.min_turns || cc.scenes_per_source < 1)
    throw Error(ErrorCode::kConfigInvalid, "bad corpus configuration");
  std::vector<DialogueScene> out;
  out.reserve(cc.n_scenes);
  Rng rng(derive_seed(seed, {0x5ce7e}));
  const std::size_t chars = std::min<std::size_t>(cc.n_characters, world.oracle.n_styles());
  for (std::uint32_t i = 0; i < cc.n_scenes; ++i) {
    const std::size_t turns = cc.min_turns + rng.uniform_index(cc.max_turns - cc.min_turns + 1);
    auto scene = sample_scene(world, turns, chars, derive_seed(seed, {i}));
    scene.scene_id = "scene-" + std::to_string(i);
    scene.source_id = "src-" + std::to_string(i / cc.scenes_per_source);
    out.push_back(std::move(scene));
  }
  return out;
}

/// Posterior mass on the speaker's true style after observing only the
/// candidate's audio. Stands in for a stylistic-consistency opinion score.
inline double oracle_style_similarity(const OracleModel& model, const DialogueScene& scene,
                                      std::size_t turn_index, const TA4Sequence& candidate) {
  const DialogueTurn& turn = scene.turns.at(turn_index);
  if (candidate.transcript() != turn.transcript)
    throw Error(ErrorCode::kTranscriptMismatch, "candidate transcript differs from the turn's");
  StyleBelief belief(model);
  belief.observe_audio(candidate);
  return belief.posterior()[scene.style_of_turn(turn_index)];
}

}  // namespace mclp
