// Acceptance report: one PASS/FAIL line per criterion. Exit status is
// 1 if any criterion failed. Tolerances and runtime limits are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <set>

#include "mclp/commands.hpp"
#include "mclp/pipeline.hpp"

using namespace mclp;
namespace fs = std::filesystem;

namespace {

constexpr double kEq3Tol = 1e-9;
constexpr double kAdvTol = 1e-9;
constexpr double kGradTol = 1e-5;
constexpr double kDiscriminationSe = 5.0;
constexpr double kTrendAlpha = 0.05;
const std::vector<std::uint64_t> kSeeds = {1, 2, 3};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... xs) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, xs...);
  return buf;
}

// ---------------------------------------------------------------------------
// shared seeded runs on the smoke config

struct SeedRun {
  RunConfig config;
  StyleWorld world;
  CuratedSplits splits;
  PolicyParams sft;
  std::vector<RlQuery> queries;
  AblationReport ablation;
};

const SeedRun& seed_run(std::uint64_t seed) {
  static std::map<std::uint64_t, SeedRun> cache;
  auto it = cache.find(seed);
  if (it != cache.end()) return it->second;
  RunConfig c = smoke_config();
  c.seed = seed;
  StyleWorld world = build_world(c);
  auto splits = curate_splits(build_corpus(world, c), world, c);
  auto sft = run_sft(splits.sft, c).params;
  auto queries = rl_queries(splits.rl, c);
  auto rep = run_ablation(sft, queries, splits.test, world, c);
  return cache.emplace(seed, SeedRun{c, std::move(world), std::move(splits), std::move(sft), std::move(queries),
                                     std::move(rep)})
      .first->second;
}

// ---------------------------------------------------------------------------
// 1

// Likelihood by walking the raw tokens; shares nothing with the scorer.
double walk_likelihood(const EmissionTable& e, const TA4Sequence& seq) {
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

double brute_conditional_entropy(const OracleModel& m, std::size_t len) {
  const Vocab v = m.vocab();
  const std::size_t n_audio = len * kAudioPerText;
  std::size_t n_seq = 1, n_w = 1;
  for (std::size_t i = 0; i < n_audio; ++i) n_seq *= v.audio;
  for (std::size_t i = 0; i < len; ++i) n_w *= v.text;
  double h = 0.0;
  for (std::size_t wi = 0; wi < n_w; ++wi) {
    Transcript w;
    for (std::size_t i = 0, x = wi; i < len; ++i, x /= v.text) w.text_ids.push_back(std::uint32_t(x % v.text));
    std::vector<std::vector<double>> lik(n_seq, std::vector<double>(m.n_styles()));
    for (std::size_t z = 0; z < n_seq; ++z) {
      std::vector<std::uint32_t> audio(n_audio);
      for (std::size_t i = 0, x = z; i < n_audio; ++i, x /= v.audio) audio[i] = std::uint32_t(x % v.audio);
      const auto seq = interleave(w, audio);
      for (std::size_t s = 0; s < m.n_styles(); ++s) lik[z][s] = walk_likelihood(m.emitter(s), seq);
    }
    for (std::size_t ze = 0; ze < n_seq; ++ze) {
      double pe = 0.0;
      for (std::size_t s = 0; s < m.n_styles(); ++s) pe += m.prior()[s] * lik[ze][s];
      for (std::size_t zg = 0; zg < n_seq; ++zg) {
        double joint = 0.0;
        for (std::size_t s = 0; s < m.n_styles(); ++s) joint += m.prior()[s] * lik[ze][s] * lik[zg][s];
        if (joint > 0.0) h -= joint * std::log(joint / pe) / double(n_w);
      }
    }
  }
  return h / double(n_audio);
}

Outcome criterion_eq3() {
  double worst = 0.0;
  int instances = 0;
  for (std::uint64_t seed : kSeeds) {
    // (audio vocab, transcript length): 4 and 8 audio-token targets
    for (auto [audio, len] : {std::pair{3u, std::size_t{1}}, std::pair{2u, std::size_t{2}}}) {
      WorldConfig wc;
      wc.n_styles = 3;
      wc.vocab = {2, audio};
      wc.emission_concentration = 0.5;
      wc.separation_floor = 0.05;
      const auto world = generate_world(wc, seed);
      const auto rep = conditional_entropy_oracle(world.oracle, len, TrueGenerator{&world.oracle});
      const double h = brute_conditional_entropy(world.oracle, len);
      worst = std::max({worst, std::fabs(rep.expected_mclp + h), std::fabs(rep.expected_mclp + rep.conditional_entropy)});
      ++instances;
    }
  }
  return {worst <= kEq3Tol, fmt("max |E[MCLP] + H| = %.2e over %d worlds (tol %.0e)", worst, instances, kEq3Tol)};
}

// ---------------------------------------------------------------------------
// 2

Outcome criterion_discrimination() {
  const RunConfig c = smoke_config();
  const auto world = build_world(c);
  // mean total variation over every (text, state) row
  const auto& e0 = world.oracle.emitter(0).probs();
  const auto& e1 = world.oracle.emitter(1).probs();
  const std::size_t A = c.world.vocab.audio;
  double sep = 0.0;
  for (std::size_t i = 0; i < e0.size(); ++i) sep += 0.5 * std::fabs(e0[i] - e1[i]);
  sep /= double(e0.size() / A);
  Rng rng(derive_seed(c.seed, {0xd15c}));
  std::vector<double> d;
  for (int i = 0; i < 500; ++i) {
    const std::size_t s = rng.uniform_index(2);
    Transcript w;
    const std::size_t len = 4 + rng.uniform_index(9);
    for (std::size_t k = 0; k < len; ++k) w.text_ids.push_back(std::uint32_t(rng.uniform_index(c.world.vocab.text)));
    const auto gt = sample_utterance(world.oracle, s, w, rng);
    const auto same = sample_utterance(world.oracle, s, w, rng);
    const auto other = sample_utterance(world.oracle, 1 - s, w, rng);
    d.push_back(mclp::mclp(world.oracle, same, gt, w).value - mclp::mclp(world.oracle, other, gt, w).value);
  }
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / double(d.size());
  double var = 0.0;
  for (double x : d) var += (x - mean) * (x - mean);
  const double se = std::sqrt(var / double(d.size() - 1) / double(d.size()));
  return {sep >= 0.2 && mean >= kDiscriminationSe * se,
          fmt("separation %.3f, matched - mismatched = %.4f = %.1f SE over 500 triples", sep, mean, mean / se)};
}

// ---------------------------------------------------------------------------
// 3 and 4 share one logged GRPO run

struct LoggedRun {
  std::vector<GroupBatch> groups;
  RewardConfig reward;
};

const LoggedRun& logged_run() {
  static std::optional<LoggedRun> run;
  if (run) return *run;
  const SeedRun& s = seed_run(1);
  LoggedRun out;
  out.reward = s.config.grpo.reward;
  run_grpo(s.sft, s.queries, s.world, s.config,
           [&](std::uint32_t, std::size_t, const GroupBatch& g) { out.groups.push_back(g); });
  run = std::move(out);
  return *run;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

Outcome criterion_advantages() {
  const auto& run = logged_run();
  double worst_mean = 0.0, worst_std = 0.0, worst_shift = 0.0, worst_bias = 0.0;
  std::size_t degenerate = 0, ungated = 0;
  for (const auto& g : run.groups) {
    const auto& a = g.advantages;
    const double m = mean_of(a);
    double var = 0.0;
    for (double x : a) var += (x - m) * (x - m);
    const double sd = std::sqrt(var / double(a.size()));
    worst_mean = std::max(worst_mean, std::fabs(m));
    if (std::all_of(a.begin(), a.end(), [](double x) { return x == 0.0; }))
      ++degenerate;
    else
      worst_std = std::max(worst_std, std::fabs(sd - 1.0));

    std::vector<double> r, shifted, scaled;
    for (const auto& b : g.rewards) r.push_back(b.reward);
    for (double x : r) {
      shifted.push_back(x - 123.25);
      scaled.push_back(3.5 * x);
    }
    const auto as = normalize_advantages(shifted), ak = normalize_advantages(scaled);
    for (std::size_t i = 0; i < a.size(); ++i)
      worst_shift = std::max({worst_shift, std::fabs(as[i] - a[i]), std::fabs(ak[i] - a[i])});

    if (std::none_of(g.rewards.begin(), g.rewards.end(), [](const auto& b) { return b.gated; })) {
      ++ungated;
      RewardConfig other = run.reward;
      other.bias = 0.0;
      std::vector<double> rb;
      for (const auto& b : g.rewards) rb.push_back(assemble_reward(other, b.mclp, b.cer).reward);
      const auto ab = normalize_advantages(rb);
      for (std::size_t i = 0; i < a.size(); ++i) worst_bias = std::max(worst_bias, std::fabs(ab[i] - a[i]));
    }
  }
  const double worst = std::max({worst_mean, worst_std, worst_shift, worst_bias});
  return {worst <= kAdvTol && ungated > 0,
          fmt("%zu groups (%zu degenerate, %zu ungated): |mean| %.1e, |std-1| %.1e, shift/scale %.1e, bias %.1e",
              run.groups.size(), degenerate, ungated, worst_mean, worst_std, worst_shift, worst_bias)};
}

Outcome criterion_gate() {
  const auto& run = logged_run();
  const RewardConfig d{};
  const bool defaults = d.bias == 15.0 && d.cer_penalty == 10.0 && d.gate_threshold == 0.2 &&
                        run.reward.bias == 15.0 && run.reward.cer_penalty == 10.0 && run.reward.gate_threshold == 0.2;
  std::size_t n = 0, gated = 0, bad = 0;
  for (const auto& g : run.groups)
    for (const auto& b : g.rewards) {
      ++n;
      gated += b.gated;
      if (b.gated != (b.cer > 0.2)) ++bad;
      if (b.gated && b.reward != 0.0) ++bad;
      if (!b.gated && b.reward != b.mclp + 15.0 - 10.0 * b.cer) ++bad;
    }
  return {defaults && n >= 10000 && bad == 0 && gated > 0,
          fmt("%zu rollouts, %zu gated, %zu violations, defaults C=%.1f lambda=%.1f tau=%.1f", n, gated, bad,
              run.reward.bias, run.reward.cer_penalty, run.reward.gate_threshold)};
}

// ---------------------------------------------------------------------------
// 5

PolicyParams random_params(const FeatureConfig& fc, Rng& rng, double scale) {
  PolicyParams p(fc);
  for (double& x : p.theta()) x = scale * (2.0 * rng.uniform() - 1.0);
  return p;
}

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double err = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    err += (a[i] - b[i]) * (a[i] - b[i]);
    norm += b[i] * b[i];
  }
  return std::sqrt(err) / std::max(std::sqrt(norm), 1e-12);
}

Outcome criterion_gradients() {
  // small exact feature space so every coordinate is probed
  WorldConfig wc;
  wc.n_styles = 2;
  wc.vocab = {4, 3};
  wc.emission_concentration = 0.3;
  wc.separation_floor = 0.05;
  const auto world = generate_world(wc, 11);
  const FeatureConfig fc{wc.vocab, 4, 64};
  CorpusConfig cc;
  cc.n_scenes = 20;
  cc.min_turns = 2;
  cc.max_turns = 3;
  std::vector<RlQuery> queries;
  for (const auto& sc : sample_corpus(world, cc, 12)) queries.push_back(final_turn_query(sc, HistoryRegime::kWithHistory));

  Rng rng(13);
  double worst_policy = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto p = random_params(fc, rng, 2.0);
    const auto& q = queries[rng.uniform_index(queries.size())];
    std::vector<std::uint32_t> audio(q.transcript.size() * kAudioPerText);
    for (auto& a : audio) a = std::uint32_t(rng.uniform_index(3));
    const auto z = interleave(q.transcript, audio);
    const auto g = logprob_grad(p, q.prompt, z);
    std::vector<double> fd(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double keep = p.theta()[i], h = 1e-4;
      p.theta()[i] = keep + h;
      const double up = logprob(p, q.prompt, z).total;
      p.theta()[i] = keep - h;
      const double down = logprob(p, q.prompt, z).total;
      p.theta()[i] = keep;
      fd[i] = (up - down) / (2 * h);
    }
    worst_policy = std::max(worst_policy, rel_error(g, fd));
  }

  double worst_surrogate = 0.0;
  int clipped = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto old = random_params(fc, rng, 1.0);
    auto cur = old;
    for (double& x : cur.theta()) x += 0.4 * (2.0 * rng.uniform() - 1.0);
    const auto ref = random_params(fc, rng, 1.0);
    GrpoConfig c;
    c.group_size = 4;
    c.kl_coeff = 0.05;
    c.kl_mode = trial % 2 ? KlMode::kSampled : KlMode::kExact;
    std::vector<GroupBatch> batches;
    for (int b = 0; b < 2; ++b) {
      auto g = collect_group(old, queries[rng.uniform_index(queries.size())], c, world.oracle, world.decoder,
                             rng.next_u64());
      std::vector<double> r(4);
      for (auto& x : r) x = rng.uniform();
      g.advantages = normalize_advantages(r);
      batches.push_back(std::move(g));
    }
    const auto sr = surrogate_loss(cur, batches, ref, c);
    clipped += sr.clipped_tokens > 0;
    std::vector<double> fd(sr.gradient.size());
    for (std::size_t i = 0; i < fd.size(); ++i) {
      const double keep = cur.theta()[i], h = 1e-6;
      cur.theta()[i] = keep + h;
      const double up = surrogate_loss(cur, batches, ref, c).loss;
      cur.theta()[i] = keep - h;
      const double down = surrogate_loss(cur, batches, ref, c).loss;
      cur.theta()[i] = keep;
      fd[i] = (up - down) / (2 * h);
    }
    worst_surrogate = std::max(worst_surrogate, rel_error(sr.gradient, fd));
  }
  return {worst_policy < kGradTol && worst_surrogate < kGradTol && clipped > 0,
          fmt("max rel error: log-likelihood %.1e, surrogate %.1e (%d/100 with clipped tokens)", worst_policy,
              worst_surrogate, clipped)};
}

// ---------------------------------------------------------------------------
// 6

std::size_t brute_distance(const std::vector<int>& a, std::size_t i, const std::vector<int>& b, std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  if (a[i] == b[j]) return brute_distance(a, i + 1, b, j + 1);
  return 1 + std::min({brute_distance(a, i + 1, b, j + 1), brute_distance(a, i + 1, b, j),
                       brute_distance(a, i, b, j + 1)});
}

Outcome criterion_edit_distance() {
  Rng rng(6);
  std::size_t cases = 0, bad = 0;
  auto draw = [&] {
    std::vector<int> v(rng.uniform_index(13));
    for (auto& x : v) x = int(rng.uniform_index(4));
    return v;
  };
  for (; cases < 1200; ++cases) {
    const auto a = draw(), b = draw(), c = draw();
    const auto ab = edit_distance(a, b).distance;
    bad += ab != brute_distance(a, 0, b, 0);
    bad += ab != edit_distance(b, a).distance;
    bad += (ab == 0) != (a == b);
    bad += edit_distance(a, c).distance > ab + edit_distance(b, c).distance;
  }
  return {bad == 0, fmt("%zu pairs up to length 12, %zu violations", cases, bad)};
}

// ---------------------------------------------------------------------------
// 7, 9

Outcome criterion_ablation() {
  int a = 0, b = 0, c = 0;
  std::string detail;
  for (std::uint64_t seed : kSeeds) {
    const auto& rep = seed_run(seed).ablation;
    const auto W = HistoryRegime::kWithHistory;
    const auto S = rep.at("sft", W).means, H = rep.at("hybrid", W).means, T = rep.at("style_only", W).means,
               C = rep.at("content_only", W).means;
    const bool da = H.mclp > S.mclp && H.cer < S.cer;
    const bool db = T.mclp > H.mclp && T.mclp > C.mclp && T.cer >= 2.0 * H.cer;
    const bool dc = C.cer < H.cer && C.cer < T.cer && C.mclp < H.mclp;
    a += da;
    b += db;
    c += dc;
    detail += fmt(" [seed %d: a%d b%d c%d]", int(seed), int(da), int(db), int(dc));
  }
  return {a >= 2 && b >= 2 && c >= 2, fmt("directions held a %d/3, b %d/3, c %d/3;", a, b, c) + detail};
}

Outcome criterion_history() {
  int held = 0;
  std::string detail;
  for (std::uint64_t seed : kSeeds) {
    const auto& rep = seed_run(seed).ablation;
    const double w = rep.at("hybrid", HistoryRegime::kWithHistory).means.mclp;
    const double wo = rep.at("hybrid", HistoryRegime::kWithoutHistory).means.mclp;
    held += w >= wo;
    detail += fmt(" [seed %d: %.3f vs %.3f]", int(seed), w, wo);
  }
  return {held == int(kSeeds.size()), fmt("with >= without history on %d/3 seeds;", held) + detail};
}

// ---------------------------------------------------------------------------
// 8

Outcome criterion_winrate() {
  const SeedRun& s = seed_run(1);
  const auto records = winrate_records(
      run_eval(s.sft, s.ablation.policies.at("hybrid"), s.splits.test, s.world, s.config));
  const auto w = run_winrate(records, s.config);
  const auto& bins = w.report.bins;
  if (bins.empty()) return {false, "no pairs"};
  const double first = bins.front().win_rate, last = bins.back().win_rate;
  const bool ok = records.size() >= 200 && w.trend.nondecreasing(kTrendAlpha) && first >= 0.4 && first <= 0.6 &&
                  last >= 0.8;
  return {ok, fmt("%zu utterances, %zu pairs, smallest bin %.3f, largest bin %.3f, p_trend %.4f, p_departure %.3f",
                  records.size(), w.report.n_pairs, first, last, w.trend.p_trend, w.trend.p_departure)};
}

// ---------------------------------------------------------------------------
// 10

DialogueScene fixture_scene(const std::string& id, const std::string& src, std::size_t turns, std::size_t final_len) {
  DialogueScene sc;
  sc.scene_id = id;
  sc.source_id = src;
  sc.spec.style_map = {0};
  for (std::size_t j = 0; j < turns; ++j) {
    DialogueTurn t;
    t.transcript.text_ids.assign(j + 1 == turns ? final_len : 3, 1);
    t.target = interleave(t.transcript, std::vector<std::uint32_t>(t.transcript.size() * kAudioPerText, 0));
    sc.turns.push_back(t);
  }
  return sc;
}

Outcome criterion_curation() {
  std::vector<std::string> problems;
  // golden segmentation corpus
  const Json doc = Json::parse(read_text_file(std::string(MCLP_TEST_DATA_DIR) + "/scene_golden.json"));
  std::size_t golden = 0, boundary = 0;
  for (const auto& c : doc.at("cases")) {
    std::vector<TranscriptSegment> segs;
    for (const auto& s : c.at("segments")) segs.push_back({"x", s[0].get<double>(), s[1].get<double>(), {}});
    std::vector<std::vector<std::size_t>> got;
    std::size_t k = 0;
    for (const auto& sc : segment_scenes(segs)) {
      got.emplace_back();
      for (std::size_t i = 0; i < sc.segments.size(); ++i) got.back().push_back(k++);
    }
    const auto expect = c.at("scenes").get<std::vector<std::vector<std::size_t>>>();
    if (got != expect) problems.push_back("golden " + c.at("name").get<std::string>());
    const std::string name = c.at("name").get<std::string>();
    boundary += name == "gap_exactly_five" || name == "span_exactly_thirty";
    ++golden;
  }
  if (golden != 50 || boundary != 2) problems.push_back("golden corpus incomplete");

  // RL filter on a labeled fixture: (turns, final length, label, kept)
  struct Row {
    std::size_t turns, len;
    StyleLabel label;
    bool keep;
  };
  const std::vector<Row> rows = {
      {1, 12, StyleLabel::kNotNeutral, false}, {2, 12, StyleLabel::kNotNeutral, true},
      {6, 12, StyleLabel::kNotNeutral, true},  {7, 12, StyleLabel::kNotNeutral, false},
      {4, 10, StyleLabel::kNotNeutral, false}, {4, 11, StyleLabel::kNotNeutral, true},
      {4, 12, StyleLabel::kNeutral, false},    {3, 30, StyleLabel::kNeutral, false},
  };
  std::vector<DialogueScene> pool;
  std::map<std::string, StyleLabel> labels;
  std::vector<std::string> expect_kept;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string id = "rl-" + std::to_string(i);
    pool.push_back(fixture_scene(id, "src", rows[i].turns, rows[i].len));
    labels[id] = rows[i].label;
    if (rows[i].keep) expect_kept.push_back(id);
  }
  std::vector<std::string> kept;
  for (const auto& sc : filter_rl(pool, table_classifier(labels))) kept.push_back(sc.scene_id);
  if (kept != expect_kept) problems.push_back("rl filter");

  // stratification at 100 per bucket over 2..10 turns
  std::vector<DialogueScene> test_pool;
  std::set<std::string> train;
  for (std::size_t i = 0; i < 3000; ++i) {
    const std::string src = "src-" + std::to_string(i / 10);
    test_pool.push_back(fixture_scene("t-" + std::to_string(i), src, 1 + i % 10, 12));
    if (i / 10 < 60) train.insert(src);
  }
  const auto test = stratify_test(test_pool, 100, 2, 10, 5, train);
  std::map<std::size_t, std::size_t> per;
  std::size_t leaked = 0;
  for (const auto& sc : test) {
    ++per[sc.turn_count()];
    leaked += train.count(sc.source_id);
  }
  bool buckets_ok = per.size() == 9;
  for (const auto& [t, n] : per) buckets_ok = buckets_ok && n == 100 && t >= 2 && t <= 10;
  if (test.size() != 900 || !buckets_ok || leaked) problems.push_back("stratification");

  // partition property on random inputs, rules checked independently
  Rng rng(10);
  std::size_t partition_bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<TranscriptSegment> segs;
    double t = 0.0;
    const std::size_t n = rng.uniform_index(30);
    for (std::size_t i = 0; i < n; ++i) {
      t += 12.0 * rng.uniform() * rng.uniform();
      const double d = 0.05 + 40.0 * std::pow(rng.uniform(), 3.0);
      segs.push_back({std::to_string(i), t, t + d, {}});
      t += d;
    }
    std::vector<TranscriptSegment> flat;
    for (const auto& sc : segment_scenes(segs)) {
      const auto& s = sc.segments;
      for (std::size_t i = 1; i < s.size(); ++i)
        if (s[i].start - s[i - 1].end > 5.0 || s[i].end - s[0].start > 30.0) ++partition_bad;
      flat.insert(flat.end(), s.begin(), s.end());
    }
    partition_bad += flat != segs;
  }
  if (partition_bad) problems.push_back("partition");

  std::string detail = fmt("golden %zu/50 (2 boundary), rl filter kept %zu/%zu, test %zu scenes, %zu leaked, partition violations %zu",
                           golden, kept.size(), rows.size(), test.size(), leaked, partition_bad);
  for (const auto& p : problems) detail += "; failed: " + p;
  return {problems.empty(), detail};
}

// ---------------------------------------------------------------------------
// 11

Outcome criterion_reproducibility() {
  const fs::path base = fs::temp_directory_path() / "mclp_acceptance_repro";
  fs::remove_all(base);
  auto run_in = [&](const std::string& name, unsigned threads) {
    RunConfig c = smoke_config();
    c.threads = threads;
    c.paths.output_root = (base / name).string();
    RunDir dir = open_run(c);
    run_all(c, dir);
    return dir.manifest();
  };
  const Manifest a = run_in("a", 1);
  const Manifest b = run_in("b", 2);
  const Manifest again = run_in("a", 1);  // re-run over existing artifacts
  // config.json records the worker count; everything else must match
  std::size_t compared = 0, differ = 0;
  for (const auto& [rel, sum] : a.artifacts) {
    if (rel == "config.json") continue;
    ++compared;
    const auto it = b.artifacts.find(rel);
    if (it == b.artifacts.end() || it->second != sum) ++differ;
  }
  const bool same_set = a.artifacts.size() == b.artifacts.size();
  const bool idempotent = again.artifacts == a.artifacts;
  fs::remove_all(base);
  return {same_set && differ == 0 && idempotent && compared > 20,
          fmt("%zu artifacts compared across 1 and 2 threads, %zu differ; rerun identical: %s", compared, differ,
              idempotent ? "yes" : "no")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;  // 0: none stated
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "expected MCLP equals negative conditional entropy", 10, criterion_eq3},
      {2, "MCLP separates matched from mismatched style", 30, criterion_discrimination},
      {3, "group advantage identities and invariances", 0, criterion_advantages},
      {4, "CER gate with default reward constants", 0, criterion_gate},
      {5, "analytic gradients match finite differences", 60, criterion_gradients},
      {6, "edit distance matches brute-force recursion", 0, criterion_edit_distance},
      {7, "reward ablation directions", 900, criterion_ablation},
      {8, "win rate rises with MCLP difference", 300, criterion_winrate},
      {9, "history regime gain", 0, criterion_history},
      {10, "curation rules", 0, criterion_curation},
      {11, "bit-identical reruns across thread counts", 0, criterion_reproducibility},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_seconds > 0 && dt > c.limit_seconds) {
      o.pass = false;
      o.detail += fmt("; exceeded %.0f s limit", c.limit_seconds);
    }
    failures += !o.pass;
    std::printf("%s %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), dt);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
