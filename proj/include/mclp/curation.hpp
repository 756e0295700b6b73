#pragma once

// Dialogue curation at the format level: RTTM parsing, speaker alignment,
// scene segmentation, RL filtering, test stratification and corpus stats.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mclp/error.hpp"
#include "mclp/rng.hpp"
#include "mclp/style_world.hpp"

namespace mclp {

struct RttmSegment {
  std::string file_id;
  std::int64_t channel = 1;
  double onset = 0.0;
  double duration = 0.0;
  std::string speaker;
  // pass-through columns, usually "<NA>"
  std::string ortho = "<NA>";
  std::string stype = "<NA>";
  std::string conf = "<NA>";
  std::string slat = "<NA>";

  double end() const { return onset + duration; }
  friend bool operator==(const RttmSegment&, const RttmSegment&) = default;
};

namespace detail {

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace detail

/// SPEAKER <file> <chan> <tbeg> <tdur> <ortho> <stype> <name> <conf> <slat>
inline std::vector<RttmSegment> parse_rttm(const std::vector<std::string>& lines) {
  std::vector<RttmSegment> out;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    std::istringstream is(lines[ln]);
    std::vector<std::string> f;
    for (std::string tok; is >> tok;) f.push_back(tok);
    if (f.empty() || f[0] != "SPEAKER") continue;
    const std::string where = "line " + std::to_string(ln + 1);
    if (f.size() != 10)
      throw Error(ErrorCode::kMalformedLine, where + ": expected 10 fields, got " + std::to_string(f.size()));
    RttmSegment s;
    s.file_id = f[1];
    std::int64_t chan = 0;
    auto [p, ec] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), chan);
    if (ec != std::errc() || p != f[2].data() + f[2].size())
      throw Error(ErrorCode::kMalformedLine, where + ": non-integer channel");
    s.channel = chan;
    auto onset = detail::parse_double(f[3]);
    auto dur = detail::parse_double(f[4]);
    if (!onset || !dur) throw Error(ErrorCode::kMalformedLine, where + ": non-numeric tbeg/tdur");
    if (*onset < 0.0 || !(*dur > 0.0))
      throw Error(ErrorCode::kMalformedLine, where + ": need tbeg >= 0 and tdur > 0");
    s.onset = *onset;
    s.duration = *dur;
    s.ortho = f[5];
    s.stype = f[6];
    s.speaker = f[7];
    s.conf = f[8];
    s.slat = f[9];
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<RttmSegment> parse_rttm(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream is{std::string(text)};
  for (std::string l; std::getline(is, l);) lines.push_back(l);
  return parse_rttm(lines);
}

inline std::string format_rttm(const RttmSegment& s) {
  return "SPEAKER " + s.file_id + " " + std::to_string(s.channel) + " " +
         detail::format_double(s.onset) + " " + detail::format_double(s.duration) + " " + s.ortho +
         " " + s.stype + " " + s.speaker + " " + s.conf + " " + s.slat;
}

struct TranscriptSegment {
  std::string text;
  double start = 0.0;
  double end = 0.0;
  std::optional<std::string> speaker;

  friend bool operator==(const TranscriptSegment&, const TranscriptSegment&) = default;
};

inline const std::string kUnknownSpeaker = "UNK";

/// Speaker with the largest total overlap; ties go to the speaker whose
/// earliest RTTM onset comes first. No overlap at all gives "UNK".
inline std::vector<TranscriptSegment> assign_speakers(std::vector<TranscriptSegment> segments,
                                                      const std::vector<RttmSegment>& rttm) {
  for (auto& seg : segments) {
    std::map<std::string, std::pair<double, double>> acc;  // speaker -> (overlap, first onset)
    for (const auto& r : rttm) {
      const double ov = std::min(seg.end, r.end()) - std::max(seg.start, r.onset);
      auto [it, fresh] = acc.try_emplace(r.speaker, 0.0, r.onset);
      if (!fresh) it->second.second = std::min(it->second.second, r.onset);
      if (ov > 0.0) it->second.first += ov;
    }
    const std::string* best = nullptr;
    double best_ov = 0.0, best_onset = 0.0;
    for (const auto& [spk, v] : acc) {
      if (!(v.first > 0.0)) continue;
      if (!best || v.first > best_ov || (v.first == best_ov && v.second < best_onset)) {
        best = &spk;
        best_ov = v.first;
        best_onset = v.second;
      }
    }
    seg.speaker = best ? *best : kUnknownSpeaker;
  }
  return segments;
}

struct SceneRules {
  double max_gap = 5.0;
  double max_span = 30.0;
};

struct Scene {
  std::string scene_id;
  std::vector<TranscriptSegment> segments;
  // a single segment longer than the span cap; exempt from the span rule
  bool oversized = false;

  double span() const { return segments.empty() ? 0.0 : segments.back().end - segments.front().start; }
  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Greedy left to right. A new scene starts when the silence before the next
/// segment exceeds max_gap or admitting it would stretch the span past
/// max_span. Both comparisons are strict.
inline std::vector<Scene> segment_scenes(const std::vector<TranscriptSegment>& segments,
                                         const std::string& prefix = "scene",
                                         SceneRules rules = {}) {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (!(segments[i].start < segments[i].end))
      throw Error(ErrorCode::kUnsortedInput, "segment " + std::to_string(i) + " has start >= end");
    if (i > 0 && segments[i].start < segments[i - 1].start)
      throw Error(ErrorCode::kUnsortedInput, "segment " + std::to_string(i) + " starts before its predecessor");
  }
  std::vector<Scene> out;
  auto open = [&](const TranscriptSegment& s) {
    Scene sc;
    sc.scene_id = prefix + "-" + std::to_string(out.size());
    sc.segments.push_back(s);
    sc.oversized = s.end - s.start > rules.max_span;
    out.push_back(std::move(sc));
  };
  for (const auto& s : segments) {
    if (out.empty()) {
      open(s);
      continue;
    }
    Scene& cur = out.back();
    const double gap = s.start - cur.segments.back().end;
    const double span = s.end - cur.segments.front().start;
    if (gap > rules.max_gap || span > rules.max_span) {
      open(s);
    } else {
      cur.segments.push_back(s);
    }
  }
  return out;
}

/// Independent check of the gap and span rules.
inline bool scene_satisfies_rules(const Scene& sc, SceneRules rules = {}) {
  for (std::size_t i = 1; i < sc.segments.size(); ++i)
    if (sc.segments[i].start - sc.segments[i - 1].end > rules.max_gap) return false;
  if (sc.oversized) return sc.segments.size() == 1;
  return sc.span() <= rules.max_span;
}

// ---------------------------------------------------------------------------
// RL filter and test split

struct RlFilterRules {
  std::size_t min_turns = 2;
  std::size_t max_turns = 6;
  // final-turn transcript must be strictly longer than this
  std::size_t min_final_length = 10;
};

/// Final-turn style label for a scene; nullopt when unknown.
using StyleClassifier = std::function<std::optional<StyleLabel>(const DialogueScene&)>;

/// Labels from the world's latent style of the final speaker.
inline StyleClassifier oracle_classifier(const StyleWorld& world) {
  return [&world](const DialogueScene& sc) -> std::optional<StyleLabel> {
    if (sc.turns.empty()) return std::nullopt;
    const auto s = sc.style_of_turn(sc.turn_count() - 1);
    if (s >= world.labels.size()) return std::nullopt;
    return world.labels[s];
  };
}

inline StyleClassifier table_classifier(std::map<std::string, StyleLabel> by_scene_id) {
  return [t = std::move(by_scene_id)](const DialogueScene& sc) -> std::optional<StyleLabel> {
    auto it = t.find(sc.scene_id);
    if (it == t.end()) return std::nullopt;
    return it->second;
  };
}

inline std::vector<DialogueScene> filter_rl(const std::vector<DialogueScene>& scenes,
                                            const StyleClassifier& classify,
                                            RlFilterRules rules = {}) {
  std::vector<DialogueScene> out;
  for (const auto& sc : scenes) {
    const auto label = classify(sc);
    if (!label) throw Error(ErrorCode::kMissingLabel, "no style label for " + sc.scene_id);
    const std::size_t n = sc.turn_count();
    if (n < rules.min_turns || n > rules.max_turns) continue;
    if (sc.turns.back().transcript.size() <= rules.min_final_length) continue;
    if (*label == StyleLabel::kNeutral) continue;
    out.push_back(sc);
  }
  return out;
}

/// Exactly per_bucket scenes for every turn count in [lo, hi], drawn without
/// replacement from scenes whose source is not in `train_sources`.
/// Output is grouped by turn count, ascending.
inline std::vector<DialogueScene> stratify_test(const std::vector<DialogueScene>& scenes,
                                                std::size_t per_bucket, std::size_t lo,
                                                std::size_t hi, std::uint64_t seed,
                                                const std::set<std::string>& train_sources = {}) {
  if (lo > hi) throw Error(ErrorCode::kConfigInvalid, "turn range is empty");
  std::map<std::size_t, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    if (train_sources.count(scenes[i].source_id)) continue;
    buckets[scenes[i].turn_count()].push_back(i);
  }
  std::vector<DialogueScene> out;
  for (std::size_t t = lo; t <= hi; ++t) {
    auto& b = buckets[t];
    if (b.size() < per_bucket)
      throw Error(ErrorCode::kInsufficientScenes,
                  "turn count " + std::to_string(t) + ": have " + std::to_string(b.size()) +
                      ", need " + std::to_string(per_bucket));
    Rng rng = substream(seed, {t});
    // partial Fisher-Yates
    for (std::size_t k = 0; k < per_bucket; ++k) {
      std::swap(b[k], b[k + rng.uniform_index(b.size() - k)]);
      out.push_back(scenes[b[k]]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// statistics

struct CuratedAudio {
  std::string audio_id;
  std::vector<Scene> scenes;
};

struct DatasetStats {
  std::size_t n_audio = 0;
  double total_hours = 0.0;
  std::size_t n_sentences = 0;
  std::size_t n_scenes = 0;
  double avg_scenes_per_audio = 0.0;
  double avg_sentences_per_scene = 0.0;
  double avg_speakers_per_scene = 0.0;
};

/// Unlabeled and UNK segments do not count as a speaker. Averages are 0 when the
/// denominator is 0.
inline DatasetStats compute_stats(const std::vector<CuratedAudio>& corpus) {
  DatasetStats st;
  st.n_audio = corpus.size();
  double seconds = 0.0;
  std::size_t speaker_sum = 0;
  for (const auto& a : corpus) {
    st.n_scenes += a.scenes.size();
    for (const auto& sc : a.scenes) {
      st.n_sentences += sc.segments.size();
      std::set<std::string> spk;
      for (const auto& s : sc.segments) {
        seconds += s.end - s.start;
        if (s.speaker && *s.speaker != kUnknownSpeaker) spk.insert(*s.speaker);
      }
      speaker_sum += spk.size();
    }
  }
  st.total_hours = seconds / 3600.0;
  if (st.n_audio) st.avg_scenes_per_audio = double(st.n_scenes) / double(st.n_audio);
  if (st.n_scenes) {
    st.avg_sentences_per_scene = double(st.n_sentences) / double(st.n_scenes);
    st.avg_speakers_per_scene = double(speaker_sum) / double(st.n_scenes);
  }
  return st;
}

}  // namespace mclp
