#pragma once

// Content fidelity: an oracle audio-to-text decoder standing in for the
// vocoder + ASR cascade, and Levenshtein-based error rates.

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mclp/error.hpp"
#include "mclp/rng.hpp"
#include "mclp/ta4.hpp"

namespace mclp {

/// Total map from every audio 4-tuple to a text id, plus a per-token
/// substitution noise rate that simulates recognition errors.
class DecodeTable {
 public:
  DecodeTable() = default;
  DecodeTable(Vocab vocab, std::vector<std::uint32_t> mapping, double noise_rate = 0.0)
      : vocab_(vocab), mapping_(std::move(mapping)), noise_rate_(noise_rate) {
    if (mapping_.size() != tuple_count(vocab_.audio)) {
      throw Error(ErrorCode::kConfigInvalid, "decode table must cover every audio 4-tuple");
    }
    for (std::uint32_t t : mapping_)
      if (t >= vocab_.text) throw Error(ErrorCode::kConfigInvalid, "decode target out of range");
    set_noise_rate(noise_rate);
  }

  static std::size_t tuple_count(std::uint32_t audio_vocab) {
    std::size_t n = 1;
    for (std::size_t i = 0; i < kAudioPerText; ++i) n *= audio_vocab;
    return n;
  }

  static std::size_t tuple_index(std::span<const std::uint32_t> tuple, std::uint32_t audio_vocab) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < kAudioPerText; ++i) idx = idx * audio_vocab + tuple[i];
    return idx;
  }

  static std::array<std::uint32_t, kAudioPerText> tuple_at(std::size_t index,
                                                            std::uint32_t audio_vocab) {
    std::array<std::uint32_t, kAudioPerText> out{};
    for (std::size_t i = kAudioPerText; i-- > 0;) {
      out[i] = static_cast<std::uint32_t>(index % audio_vocab);
      index /= audio_vocab;
    }
    return out;
  }

  std::uint32_t lookup(std::span<const std::uint32_t> tuple) const {
    return mapping_[tuple_index(tuple, vocab_.audio)];
  }

  void set_noise_rate(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0))
      throw Error(ErrorCode::kConfigInvalid, "noise rate must lie in [0, 1]");
    noise_rate_ = eta;
  }

  double noise_rate() const { return noise_rate_; }
  const Vocab& vocab() const { return vocab_; }
  const std::vector<std::uint32_t>& mapping() const { return mapping_; }

 private:
  Vocab vocab_;
  std::vector<std::uint32_t> mapping_;
  double noise_rate_ = 0.0;
};

/// Maps each audio 4-tuple through the table. With noise rate 0 the rng is
/// never touched, so decoding is a pure function of (table, seq).
inline Transcript decode(const DecodeTable& table, const TA4Sequence& seq, Rng& rng) {
  Transcript out;
  out.text_ids.reserve(seq.text_count());
  std::array<std::uint32_t, kAudioPerText> tuple{};
  for (std::size_t i = 0; i < seq.text_count(); ++i) {
    for (std::size_t j = 0; j < kAudioPerText; ++j) tuple[j] = seq.audio_at(i * kAudioPerText + j);
    std::uint32_t tok = table.lookup(tuple);
    if (table.noise_rate() > 0.0 && rng.uniform() < table.noise_rate())
      tok = static_cast<std::uint32_t>(rng.uniform_index(table.vocab().text));
    out.text_ids.push_back(tok);
  }
  return out;
}

struct EditCounts {
  std::size_t distance = 0;
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;

  friend bool operator==(const EditCounts&, const EditCounts&) = default;
};

/// Unit-cost Levenshtein distance turning `source` into `target`. Insertions
/// are target tokens absent from the source. The (S, I, D) split follows the
/// backtrace with ties resolved as substitution, then deletion, then insertion.
template <class T>
EditCounts edit_distance(std::span<const T> source, std::span<const T> target) {
  const std::size_t n = source.size();
  const std::size_t m = target.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (source[i - 1] == target[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  EditCounts counts;
  counts.distance = at(n, m);
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = source[i - 1] == target[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        if (!same) ++counts.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++counts.deletions;
      --i;
    } else {
      ++counts.insertions;
      --j;
    }
  }
  return counts;
}

template <class T>
EditCounts edit_distance(const std::vector<T>& source, const std::vector<T>& target) {
  return edit_distance(std::span<const T>(source), std::span<const T>(target));
}

struct ErrorRate {
  double value = 0.0;
  EditCounts edits;
  std::size_t ref_len = 0;
};

/// Token error rate of `hyp` against `ref`; uncapped, so it may exceed 1.
inline ErrorRate cer(const Transcript& hyp, const Transcript& ref) {
  if (ref.empty()) throw Error(ErrorCode::kEmptyReference, "reference transcript is empty");
  ErrorRate r;
  r.edits = edit_distance(std::span<const std::uint32_t>(ref.text_ids),
                          std::span<const std::uint32_t>(hyp.text_ids));
  r.ref_len = ref.size();
  r.value = static_cast<double>(r.edits.distance) / static_cast<double>(r.ref_len);
  return r;
}

// In the synthetic world a text token is both the character and the word
// unit, so the word error rate is computed over the same token lists.
inline ErrorRate token_wer(const Transcript& hyp, const Transcript& ref) { return cer(hyp, ref); }

}  // namespace mclp
