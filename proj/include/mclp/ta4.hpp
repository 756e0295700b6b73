#pragma once

// Token alphabet and the interleaved text/audio (TA4) sequence: every text
// token is followed by exactly four audio tokens, framed by BOS ... EOT.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mclp/error.hpp"

namespace mclp {

inline constexpr std::size_t kAudioPerText = 4;

enum class TokenKind : std::uint8_t { kText, kAudio, kMarker };

enum class Marker : std::uint32_t { kBos = 0, kEot = 1, kSep = 2 };

struct Token {
  TokenKind kind = TokenKind::kMarker;
  std::uint32_t id = 0;

  static constexpr Token text(std::uint32_t id) { return {TokenKind::kText, id}; }
  static constexpr Token audio(std::uint32_t id) { return {TokenKind::kAudio, id}; }
  static constexpr Token marker(Marker m) {
    return {TokenKind::kMarker, static_cast<std::uint32_t>(m)};
  }

  friend bool operator==(const Token&, const Token&) = default;
};

struct Vocab {
  std::uint32_t text = 16;
  std::uint32_t audio = 8;

  friend bool operator==(const Vocab&, const Vocab&) = default;
};

struct Transcript {
  std::vector<std::uint32_t> text_ids;

  std::size_t size() const { return text_ids.size(); }
  bool empty() const { return text_ids.empty(); }

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

class TA4Sequence {
 public:
  TA4Sequence() = default;

  /// Validates the BOS (T A A A A)+ EOT grammar and builds the audio index.
  static TA4Sequence from_tokens(std::vector<Token> tokens) {
    if (tokens.size() < 2 || tokens.front() != Token::marker(Marker::kBos) ||
        tokens.back() != Token::marker(Marker::kEot)) {
      throw Error(ErrorCode::kGrammarViolation, "sequence must be framed by BOS ... EOT");
    }
    const std::size_t body = tokens.size() - 2;
    if (body == 0) throw Error(ErrorCode::kGrammarViolation, "empty body");
    if (body % (kAudioPerText + 1) != 0) {
      throw Error(ErrorCode::kGrammarViolation,
                  "body length " + std::to_string(body) + " is not a multiple of 5");
    }
    TA4Sequence seq;
    seq.audio_positions_.reserve(body / (kAudioPerText + 1) * kAudioPerText);
    for (std::size_t i = 1; i + 1 < tokens.size(); ++i) {
      const bool text_slot = (i - 1) % (kAudioPerText + 1) == 0;
      const TokenKind want = text_slot ? TokenKind::kText : TokenKind::kAudio;
      if (tokens[i].kind != want) {
        throw Error(ErrorCode::kGrammarViolation,
                    "unexpected token kind at position " + std::to_string(i));
      }
      if (!text_slot) seq.audio_positions_.push_back(i);
    }
    seq.tokens_ = std::move(tokens);
    return seq;
  }

  const std::vector<Token>& tokens() const { return tokens_; }
  const std::vector<std::size_t>& audio_positions() const { return audio_positions_; }

  std::size_t text_count() const { return audio_positions_.size() / kAudioPerText; }
  std::size_t audio_count() const { return audio_positions_.size(); }
  bool empty() const { return audio_positions_.empty(); }

  /// Text id of the i-th text slot.
  std::uint32_t text_at(std::size_t i) const {
    return tokens_[1 + i * (kAudioPerText + 1)].id;
  }
  /// Id of the k-th audio token.
  std::uint32_t audio_at(std::size_t k) const { return tokens_[audio_positions_[k]].id; }
  /// Text id that the k-th audio token is paired with.
  std::uint32_t text_of_audio(std::size_t k) const { return text_at(k / kAudioPerText); }

  Transcript transcript() const {
    Transcript t;
    t.text_ids.reserve(text_count());
    for (std::size_t i = 0; i < text_count(); ++i) t.text_ids.push_back(text_at(i));
    return t;
  }

  std::vector<std::uint32_t> audio_ids() const {
    std::vector<std::uint32_t> out;
    out.reserve(audio_count());
    for (std::size_t p : audio_positions_) out.push_back(tokens_[p].id);
    return out;
  }

  friend bool operator==(const TA4Sequence& a, const TA4Sequence& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<Token> tokens_;
  std::vector<std::size_t> audio_positions_;
};

/// BOS t1 a1 a2 a3 a4 t2 a5 ... EOT. No implicit padding.
inline TA4Sequence interleave(const Transcript& transcript,
                              std::span<const std::uint32_t> audio) {
  if (audio.size() != kAudioPerText * transcript.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "expected " + std::to_string(kAudioPerText * transcript.size()) +
                    " audio tokens, got " + std::to_string(audio.size()));
  }
  std::vector<Token> tokens;
  tokens.reserve(2 + transcript.size() * (kAudioPerText + 1));
  tokens.push_back(Token::marker(Marker::kBos));
  for (std::size_t i = 0; i < transcript.size(); ++i) {
    tokens.push_back(Token::text(transcript.text_ids[i]));
    for (std::size_t j = 0; j < kAudioPerText; ++j)
      tokens.push_back(Token::audio(audio[i * kAudioPerText + j]));
  }
  tokens.push_back(Token::marker(Marker::kEot));
  return TA4Sequence::from_tokens(std::move(tokens));
}

inline std::pair<Transcript, std::vector<std::uint32_t>> deinterleave(const TA4Sequence& seq) {
  return {seq.transcript(), seq.audio_ids()};
}

inline std::size_t audio_token_count(const TA4Sequence& seq) { return seq.audio_count(); }

/// Throws GrammarViolation when a token id is outside its vocabulary.
inline void check_vocab(const TA4Sequence& seq, const Vocab& vocab) {
  for (const Token& tok : seq.tokens()) {
    if ((tok.kind == TokenKind::kText && tok.id >= vocab.text) ||
        (tok.kind == TokenKind::kAudio && tok.id >= vocab.audio) ||
        (tok.kind == TokenKind::kMarker && tok.id > static_cast<std::uint32_t>(Marker::kSep))) {
      throw Error(ErrorCode::kGrammarViolation, "token id out of vocabulary");
    }
  }
}

}  // namespace mclp
