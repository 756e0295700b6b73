#pragma once

// Shared fixtures and independent reference computations for the unit tests.

#include <cmath>
#include <vector>

#include "mclp/style_world.hpp"

namespace testing_helpers {

using namespace mclp;

inline StyleWorld small_world(std::uint32_t styles, std::uint32_t text, std::uint32_t audio,
                              double alpha, std::uint64_t seed, double floor = 0.2) {
  WorldConfig c;
  c.n_styles = styles;
  c.vocab = {text, audio};
  c.emission_concentration = alpha;
  c.separation_floor = floor;
  return generate_world(c, seed);
}

// Product over the tokens, walking the raw token list rather than the
// audio index. Every group restarts from the start state.
inline double brute_likelihood(const OracleModel& m, std::size_t style, const TA4Sequence& seq) {
  const EmissionTable& e = m.emitter(style);
  double p = 1.0;
  std::uint32_t text = 0, prev = e.start_state();
  for (const Token& t : seq.tokens()) {
    if (t.kind == TokenKind::kText) {
      text = t.id;
      prev = e.start_state();
    } else if (t.kind == TokenKind::kAudio) {
      p *= e.prob(text, prev, t.id);
      prev = t.id;
    }
  }
  return p;
}

inline double brute_instruction(const OracleModel& m, std::size_t style,
                                const std::vector<std::uint32_t>& ids) {
  double p = 1.0;
  for (auto i : ids) p *= m.instruction_table(style)[i];
  return p;
}

/// P(s | audio context, instruction context) by direct Bayes.
inline std::vector<double> brute_posterior(const OracleModel& m, const std::vector<TA4Sequence>& audio,
                                           const std::vector<std::uint32_t>& instr = {}) {
  std::vector<double> w(m.n_styles());
  double z = 0.0;
  for (std::size_t s = 0; s < w.size(); ++s) {
    w[s] = m.prior()[s] * brute_instruction(m, s, instr);
    for (const auto& a : audio) w[s] *= brute_likelihood(m, s, a);
    z += w[s];
  }
  for (double& x : w) x /= z;
  return w;
}

/// One-hot rows: every (text, prev) row puts all mass on `token_of(text, prev)`.
template <class Fn>
EmissionTable deterministic_table(Vocab v, Fn token_of, double eps = 0.0) {
  std::vector<double> p(std::size_t{v.text} * (v.audio + 1) * v.audio, 0.0);
  for (std::uint32_t t = 0; t < v.text; ++t)
    for (std::uint32_t prev = 0; prev <= v.audio; ++prev) {
      double* row = p.data() + (std::size_t{t} * (v.audio + 1) + prev) * v.audio;
      for (std::uint32_t a = 0; a < v.audio; ++a) row[a] = eps;
      row[token_of(t, prev)] = 1.0 - eps * (v.audio - 1);
    }
  return EmissionTable(v, std::move(p));
}

inline std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / double(n)); }

}  // namespace testing_helpers
