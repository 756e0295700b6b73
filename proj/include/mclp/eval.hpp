#pragma once

// Evaluation: per-scene metric records under both history regimes, the
// win-rate vs MCLP-difference consistency analysis, and the reward ablation
// grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mclp/error.hpp"
#include "mclp/fidelity.hpp"
#include "mclp/grpo.hpp"
#include "mclp/mclp_scorer.hpp"
#include "mclp/parallel.hpp"
#include "mclp/policy.hpp"
#include "mclp/sft.hpp"
#include "mclp/style_world.hpp"

namespace mclp {

struct EvalRecord {
  std::string scene_id;
  std::string system;
  HistoryRegime regime = HistoryRegime::kWithHistory;
  double mclp = 0.0;
  double cer = 0.0;
  double wer = 0.0;
  double oracle_similarity = 0.0;
  TA4Sequence candidate;
};

/// A system proposes final-turn audio for a scene under a regime.
template <class S>
concept EvalSystem = requires(const S& s, const DialogueScene& sc, HistoryRegime r, Rng& rng) {
  { s.generate(sc, r, rng) } -> std::convertible_to<TA4Sequence>;
};

struct PolicySystem {
  const PolicyParams* params;
  double temperature = 1.0;
  TA4Sequence generate(const DialogueScene& sc, HistoryRegime regime, Rng& rng) const {
    const std::size_t j = sc.turn_count() - 1;
    const Prompt p = apply_regime(prompt_for_turn(sc, j), regime);
    return sample(*params, p, sc.turns[j].transcript, temperature, rng).sequence;
  }
};

struct GroundTruthSystem {
  TA4Sequence generate(const DialogueScene& sc, HistoryRegime, Rng&) const {
    return sc.turns.back().target;
  }
};

struct UniformSystem {
  std::uint32_t audio_vocab;
  TA4Sequence generate(const DialogueScene& sc, HistoryRegime, Rng& rng) const {
    const Transcript& w = sc.turns.back().transcript;
    std::vector<std::uint32_t> audio(w.size() * kAudioPerText);
    for (auto& a : audio) a = static_cast<std::uint32_t>(rng.uniform_index(audio_vocab));
    return interleave(w, audio);
  }
};

/// Scene i draws from substream (seed, i, 0) and decodes with (seed, i, 1),
/// so the two regimes share random numbers scene by scene.
template <EvalSystem S>
std::vector<EvalRecord> evaluate_system(const S& system, const std::string& name,
                                        const std::vector<DialogueScene>& test_set,
                                        HistoryRegime regime, const OracleModel& scorer,
                                        const DecodeTable& table, std::uint64_t seed,
                                        unsigned threads = 1) {
  std::vector<EvalRecord> out(test_set.size());
  parallel_for(test_set.size(), threads, [&](std::size_t i) {
    const DialogueScene& sc = test_set[i];
    if (sc.turns.empty()) throw Error(ErrorCode::kEmptyTarget, sc.scene_id + " has no turns");
    const std::size_t j = sc.turn_count() - 1;
    const DialogueTurn& turn = sc.turns[j];
    Rng gen = substream(seed, {i, 0});
    Rng dec = substream(seed, {i, 1});
    EvalRecord r;
    r.scene_id = sc.scene_id;
    r.system = name;
    r.regime = regime;
    r.candidate = system.generate(sc, regime, gen);
    r.mclp = mclp(scorer, r.candidate, turn.target, turn.transcript).value;
    const Transcript hyp = decode(table, r.candidate, dec);
    r.cer = cer(hyp, turn.transcript).value;
    r.wer = token_wer(hyp, turn.transcript).value;
    r.oracle_similarity = oracle_style_similarity(scorer, sc, j, r.candidate);
    out[i] = std::move(r);
  });
  return out;
}

struct MetricMeans {
  double mclp = 0.0;
  double cer = 0.0;
  double wer = 0.0;
  double oracle_similarity = 0.0;
  std::size_t n = 0;
};

inline MetricMeans summarize(const std::vector<EvalRecord>& records) {
  MetricMeans m;
  for (const auto& r : records) {
    m.mclp += r.mclp;
    m.cer += r.cer;
    m.wer += r.wer;
    m.oracle_similarity += r.oracle_similarity;
  }
  m.n = records.size();
  if (m.n) {
    const double n = static_cast<double>(m.n);
    m.mclp /= n;
    m.cer /= n;
    m.wer /= n;
    m.oracle_similarity /= n;
  }
  return m;
}

// ---------------------------------------------------------------------------
// win rate vs |delta MCLP|

struct QualityPoint {
  double mclp = 0.0;
  double quality = 0.0;
  std::string group;  // system name; used by the cross-group restriction
};

struct WinRateBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n_pairs = 0;
  double wins = 0.0;  // ties in quality count one half
  double win_rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct WinRateReport {
  std::vector<WinRateBin> bins;
  std::size_t n_pairs = 0;
  double pooled_win_rate = 0.0;
};

inline void set_rate(WinRateBin& b) {
  if (b.n_pairs == 0) return;
  const double n = static_cast<double>(b.n_pairs);
  b.win_rate = b.wins / n;
  const double half = 1.96 * std::sqrt(b.win_rate * (1.0 - b.win_rate) / n);
  b.ci_low = std::max(0.0, b.win_rate - half);
  b.ci_high = std::min(1.0, b.win_rate + half);
}

/// All unordered pairs with nonzero MCLP difference, binned by |delta| into
/// `n_bins` equal-width intervals over the observed range. The last bin is
/// closed on the right.
inline WinRateReport winrate_analysis(const std::vector<QualityPoint>& points,
                                      bool cross_group_only = false, std::size_t n_bins = 10) {
  if (points.size() < 2) throw Error(ErrorCode::kTooFewRecords, "need at least 2 records");
  if (n_bins < 1) throw Error(ErrorCode::kConfigInvalid, "need at least one bin");
  // two passes over the pairs: range first, then counts, so memory stays O(n)
  auto for_each_pair = [&](auto&& fn) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      for (std::size_t j = i + 1; j < points.size(); ++j) {
        if (cross_group_only && points[i].group == points[j].group) continue;
        const double dm = points[j].mclp - points[i].mclp;
        if (dm == 0.0) continue;
        const double dq = points[j].quality - points[i].quality;
        double s = 0.5;
        if (dq != 0.0) s = (dm > 0.0) == (dq > 0.0) ? 1.0 : 0.0;
        fn(std::fabs(dm), s);
      }
    }
  };
  WinRateReport rep;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for_each_pair([&](double d, double) {
    lo = std::min(lo, d);
    hi = std::max(hi, d);
    ++rep.n_pairs;
  });
  if (rep.n_pairs == 0) return rep;
  const double width = (hi - lo) / static_cast<double>(n_bins);
  rep.bins.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    rep.bins[b].lo = lo + width * static_cast<double>(b);
    rep.bins[b].hi = b + 1 == n_bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  double total = 0.0;
  for_each_pair([&](double d, double s) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>((d - lo) / width) : 0;
    b = std::min(b, n_bins - 1);
    rep.bins[b].n_pairs += 1;
    rep.bins[b].wins += s;
    total += s;
  });
  for (auto& b : rep.bins) set_rate(b);
  rep.pooled_win_rate = total / static_cast<double>(rep.n_pairs);
  return rep;
}

/// Weighted pool-adjacent-violators: nondecreasing fit minimizing
/// sum w_i (y_i - f_i)^2.
inline std::vector<double> isotonic_fit(const std::vector<double>& y, const std::vector<double>& w) {
  struct Block {
    double sum_wy, sum_w;
    std::size_t len;
  };
  std::vector<Block> st;
  for (std::size_t i = 0; i < y.size(); ++i) {
    st.push_back({w[i] * y[i], w[i], 1});
    while (st.size() > 1) {
      const Block& b = st.back();
      const Block& a = st[st.size() - 2];
      // compare means without dividing by zero weights
      if (a.sum_wy * b.sum_w <= b.sum_wy * a.sum_w) break;
      Block m{a.sum_wy + b.sum_wy, a.sum_w + b.sum_w, a.len + b.len};
      st.pop_back();
      st.back() = m;
    }
  }
  std::vector<double> f;
  for (const auto& b : st) {
    const double v = b.sum_w > 0.0 ? b.sum_wy / b.sum_w : 0.0;
    f.insert(f.end(), b.len, v);
  }
  return f;
}

struct TrendTest {
  double lr_constant_vs_monotone = 0.0;
  double lr_monotone_vs_free = 0.0;
  double p_trend = 1.0;      // small: increasing trend over constant
  double p_departure = 1.0;  // small: evidence against monotonicity
  std::size_t bins_used = 0;

  bool nondecreasing(double alpha) const { return p_trend < alpha && p_departure >= alpha; }
};

namespace detail {

inline double binom_loglik(const std::vector<double>& k, const std::vector<double>& n,
                           const std::vector<double>& p) {
  double ll = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double q = std::clamp(p[i], 1e-12, 1.0 - 1e-12);
    ll += k[i] * std::log(q) + (n[i] - k[i]) * std::log1p(-q);
  }
  return ll;
}

struct TrendStats {
  double lr01, lr12;
  std::vector<double> mono;
  double pooled;
};

inline TrendStats trend_stats(const std::vector<double>& k, const std::vector<double>& n) {
  std::vector<double> raw(k.size());
  double ks = 0.0, ns = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    raw[i] = k[i] / n[i];
    ks += k[i];
    ns += n[i];
  }
  TrendStats t;
  t.pooled = ks / ns;
  t.mono = isotonic_fit(raw, n);
  const std::vector<double> flat(k.size(), t.pooled);
  const double l0 = binom_loglik(k, n, flat);
  const double l1 = binom_loglik(k, n, t.mono);
  const double l2 = binom_loglik(k, n, raw);
  t.lr01 = 2.0 * (l1 - l0);
  t.lr12 = 2.0 * (l2 - l1);
  return t;
}

}  // namespace detail

/// Likelihood-ratio tests on the non-empty bins treated as independent
/// binomials: constant vs nondecreasing, and nondecreasing vs unrestricted.
/// Null distributions come from a parametric bootstrap.
inline TrendTest isotonic_trend_test(const std::vector<WinRateBin>& bins, std::uint64_t seed,
                                     std::size_t resamples = 2000) {
  std::vector<double> k, n;
  for (const auto& b : bins) {
    if (b.n_pairs == 0) continue;
    k.push_back(b.wins);
    n.push_back(static_cast<double>(b.n_pairs));
  }
  TrendTest out;
  out.bins_used = k.size();
  if (k.size() < 2) return out;
  const auto obs = detail::trend_stats(k, n);
  out.lr_constant_vs_monotone = obs.lr01;
  out.lr_monotone_vs_free = obs.lr12;

  auto draw = [&](Rng& rng, const std::vector<double>& p) {
    std::vector<double> kk(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
      std::binomial_distribution<std::int64_t> bin(static_cast<std::int64_t>(n[i]),
                                                   std::clamp(p[i], 0.0, 1.0));
      kk[i] = static_cast<double>(bin(rng.engine()));
    }
    return kk;
  };
  const std::vector<double> flat(k.size(), obs.pooled);
  std::size_t ge01 = 0, ge12 = 0;
  for (std::size_t r = 0; r < resamples; ++r) {
    Rng rng0 = substream(seed, {0, r});
    if (detail::trend_stats(draw(rng0, flat), n).lr01 >= obs.lr01 - 1e-12) ++ge01;
    Rng rng1 = substream(seed, {1, r});
    if (detail::trend_stats(draw(rng1, obs.mono), n).lr12 >= obs.lr12 - 1e-12) ++ge12;
  }
  out.p_trend = (1.0 + static_cast<double>(ge01)) / (1.0 + static_cast<double>(resamples));
  out.p_departure = (1.0 + static_cast<double>(ge12)) / (1.0 + static_cast<double>(resamples));
  return out;
}

// ---------------------------------------------------------------------------
// ablation grid

struct AblationRow {
  std::string system;
  HistoryRegime regime;
  MetricMeans means;
};

struct AblationReport {
  std::vector<AblationRow> rows;
  std::map<std::string, PolicyParams> policies;
  std::map<std::string, std::vector<GrpoLogRow>> logs;
  std::vector<EvalRecord> records;

  const AblationRow& at(const std::string& system, HistoryRegime regime) const {
    for (const auto& r : rows)
      if (r.system == system && r.regime == regime) return r;
    throw Error(ErrorCode::kMissingInput, "no ablation row for " + system);
  }
};

inline const std::vector<std::pair<std::string, RewardConfig>>& ablation_variants() {
  static const std::vector<std::pair<std::string, RewardConfig>> v = {
      {"hybrid", RewardConfig{}},
      {"style_only", RewardConfig::style_only()},
      {"content_only", RewardConfig::content_only()},
  };
  return v;
}

/// Three GRPO runs from the same SFT snapshot and seed, differing only in
/// reward, then every system evaluated in both regimes.
inline AblationReport ablation_grid(const PolicyParams& sft_policy, const std::vector<RlQuery>& queries,
                                    const std::vector<DialogueScene>& test_set,
                                    const GrpoConfig& base, const OracleModel& scorer,
                                    const DecodeTable& table, std::uint64_t eval_seed,
                                    unsigned threads = 1) {
  AblationReport rep;
  rep.policies.emplace("sft", sft_policy);
  for (const auto& [name, reward] : ablation_variants()) {
    GrpoConfig cfg = base;
    // keep the base's constants, switch only the structure of the reward
    cfg.reward.kind = reward.kind;
    if (reward.cer_penalty == 0.0) cfg.reward.cer_penalty = 0.0;
    if (std::isinf(reward.gate_threshold)) cfg.reward.gate_threshold = reward.gate_threshold;
    auto res = grpo_train(sft_policy, queries, cfg, scorer, table, threads);
    rep.logs.emplace(name, std::move(res.log));
    rep.policies.emplace(name, std::move(res.params));
  }
  for (const std::string name : {"sft", "hybrid", "style_only", "content_only"}) {
    const PolicySystem sys{&rep.policies.at(name)};
    for (auto regime : {HistoryRegime::kWithHistory, HistoryRegime::kWithoutHistory}) {
      auto recs = evaluate_system(sys, name, test_set, regime, scorer, table, eval_seed, threads);
      rep.rows.push_back({name, regime, summarize(recs)});
      rep.records.insert(rep.records.end(), recs.begin(), recs.end());
    }
  }
  return rep;
}

}  // namespace mclp
