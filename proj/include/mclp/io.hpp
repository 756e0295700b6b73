#pragma once

// On-disk formats: world and policy checkpoints, scene and sequence JSONL,
// reward logs, CSV reports, SHA-256 checksums and run manifests.
// Probabilities and weights are written as shortest round-trip decimal
// strings so a reload reproduces every bit.

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mclp/curation.hpp"
#include "mclp/error.hpp"
#include "mclp/eval.hpp"
#include "mclp/grpo.hpp"
#include "mclp/policy.hpp"
#include "mclp/sft.hpp"
#include "mclp/style_world.hpp"

namespace mclp {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// numbers

inline std::string dstr(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return detail::format_double(v);
}

inline double parse_dstr(std::string_view s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  auto v = detail::parse_double(s);
  if (!v) throw Error(ErrorCode::kParseError, "not a number: '" + std::string(s) + "'");
  return *v;
}

// Config scalars: plain JSON numbers, except infinities which JSON cannot hold.
inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(dstr(v)); }

inline double get_num(const Json& j) {
  if (j.is_string()) return parse_dstr(j.get<std::string>());
  if (!j.is_number()) throw Error(ErrorCode::kParseError, "expected a number, got " + j.dump());
  return j.get<double>();
}

inline Json dstr_array(std::span<const double> xs) {
  Json a = Json::array();
  for (double x : xs) a.push_back(dstr(x));
  return a;
}

inline std::vector<double> parse_dstr_array(const Json& a) {
  std::vector<double> out;
  out.reserve(a.size());
  for (const auto& x : a) out.push_back(parse_dstr(x.get<std::string>()));
  return out;
}

template <class T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::kParseError, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("field '") + key + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// files and checksums

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingInput, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kMissingInput, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::kMissingInput, "short write on " + path.string());
}

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.emplace_back(line);
    pos = nl + 1;
  }
  return out;
}

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::kChecksumMismatch, "SHA-256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

inline std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(read_text_file(path));
}

// ---------------------------------------------------------------------------
// config structs

inline Json to_json(const Vocab& v) { return {{"text", v.text}, {"audio", v.audio}}; }
inline Vocab vocab_from_json(const Json& j) {
  return {field<std::uint32_t>(j, "text"), field<std::uint32_t>(j, "audio")};
}

inline Json to_json(const WorldConfig& c) {
  return {{"n_styles", c.n_styles},
          {"vocab", to_json(c.vocab)},
          {"instruction_vocab", c.instruction_vocab},
          {"emission_concentration", num(c.emission_concentration)},
          {"instruction_concentration", num(c.instruction_concentration)},
          {"separation_floor", num(c.separation_floor)},
          {"smoothing", num(c.smoothing)},
          {"scene_text_len", c.scene_text_len},
          {"profile_len", c.profile_len},
          {"instruction_len", c.instruction_len},
          {"min_transcript_len", c.min_transcript_len},
          {"max_transcript_len", c.max_transcript_len},
          {"max_turns", c.max_turns},
          {"neutral_styles", c.neutral_styles},
          {"decode_noise", num(c.decode_noise)},
          {"max_regenerations", c.max_regenerations}};
}

inline WorldConfig world_config_from_json(const Json& j) {
  WorldConfig c;
  c.n_styles = field<std::uint32_t>(j, "n_styles");
  c.vocab = vocab_from_json(j.at("vocab"));
  c.instruction_vocab = field<std::uint32_t>(j, "instruction_vocab");
  c.emission_concentration = get_num(j.at("emission_concentration"));
  c.instruction_concentration = get_num(j.at("instruction_concentration"));
  c.separation_floor = get_num(j.at("separation_floor"));
  c.smoothing = get_num(j.at("smoothing"));
  c.scene_text_len = field<std::uint32_t>(j, "scene_text_len");
  c.profile_len = field<std::uint32_t>(j, "profile_len");
  c.instruction_len = field<std::uint32_t>(j, "instruction_len");
  c.min_transcript_len = field<std::uint32_t>(j, "min_transcript_len");
  c.max_transcript_len = field<std::uint32_t>(j, "max_transcript_len");
  c.max_turns = field<std::uint32_t>(j, "max_turns");
  c.neutral_styles = field<std::vector<std::uint32_t>>(j, "neutral_styles");
  c.decode_noise = get_num(j.at("decode_noise"));
  c.max_regenerations = field<std::uint32_t>(j, "max_regenerations");
  return c;
}

inline Json to_json(const CorpusConfig& c) {
  return {{"n_scenes", c.n_scenes},
          {"min_turns", c.min_turns},
          {"max_turns", c.max_turns},
          {"n_characters", c.n_characters},
          {"scenes_per_source", c.scenes_per_source}};
}

inline CorpusConfig corpus_config_from_json(const Json& j) {
  CorpusConfig c;
  c.n_scenes = field<std::uint32_t>(j, "n_scenes");
  c.min_turns = field<std::uint32_t>(j, "min_turns");
  c.max_turns = field<std::uint32_t>(j, "max_turns");
  c.n_characters = field<std::uint32_t>(j, "n_characters");
  c.scenes_per_source = field<std::uint32_t>(j, "scenes_per_source");
  return c;
}

inline Json to_json(const FeatureConfig& c) {
  return {{"vocab", to_json(c.vocab)},
          {"instruction_vocab", c.instruction_vocab},
          {"bucket_count", c.bucket_count}};
}

inline FeatureConfig feature_config_from_json(const Json& j) {
  FeatureConfig c;
  c.vocab = vocab_from_json(j.at("vocab"));
  c.instruction_vocab = field<std::uint32_t>(j, "instruction_vocab");
  c.bucket_count = field<std::uint32_t>(j, "bucket_count");
  return c;
}

inline std::string to_string(RewardKind k) {
  return k == RewardKind::kHybrid ? "hybrid" : "content_only";
}

inline RewardKind reward_kind_from_string(const std::string& s) {
  if (s == "hybrid") return RewardKind::kHybrid;
  if (s == "content_only") return RewardKind::kContentOnly;
  throw Error(ErrorCode::kConfigInvalid, "unknown reward kind '" + s + "'");
}

inline Json to_json(const RewardConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"bias", num(c.bias)},
          {"cer_penalty", num(c.cer_penalty)},
          {"gate_threshold", num(c.gate_threshold)}};
}

inline RewardConfig reward_config_from_json(const Json& j) {
  RewardConfig c;
  c.kind = reward_kind_from_string(field<std::string>(j, "kind"));
  c.bias = get_num(j.at("bias"));
  c.cer_penalty = get_num(j.at("cer_penalty"));
  c.gate_threshold = get_num(j.at("gate_threshold"));
  return c;
}

inline Json to_json(const SftConfig& c) {
  return {{"learning_rate", num(c.learning_rate)},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"include_audio_history", c.include_audio_history}};
}

// seed is not part of the document; the run config derives it
inline SftConfig sft_config_from_json(const Json& j) {
  SftConfig c;
  c.learning_rate = get_num(j.at("learning_rate"));
  c.epochs = field<std::uint32_t>(j, "epochs");
  c.batch_size = field<std::uint32_t>(j, "batch_size");
  c.include_audio_history = field<bool>(j, "include_audio_history");
  return c;
}

inline Json to_json(const GrpoConfig& c) {
  return {{"group_size", c.group_size},
          {"clip_eps", num(c.clip_eps)},
          {"kl_coeff", num(c.kl_coeff)},
          {"kl_mode", c.kl_mode == KlMode::kExact ? "exact" : "sampled"},
          {"temperature", num(c.temperature)},
          {"learning_rate", num(c.learning_rate)},
          {"iterations", c.iterations},
          {"queries_per_iter", c.queries_per_iter},
          {"checkpoint_every", c.checkpoint_every},
          {"include_audio_history", c.include_audio_history},
          {"reward", to_json(c.reward)}};
}

inline GrpoConfig grpo_config_from_json(const Json& j) {
  GrpoConfig c;
  c.group_size = field<std::uint32_t>(j, "group_size");
  c.clip_eps = get_num(j.at("clip_eps"));
  c.kl_coeff = get_num(j.at("kl_coeff"));
  const auto mode = field<std::string>(j, "kl_mode");
  if (mode == "exact") c.kl_mode = KlMode::kExact;
  else if (mode == "sampled") c.kl_mode = KlMode::kSampled;
  else throw Error(ErrorCode::kConfigInvalid, "unknown kl_mode '" + mode + "'");
  c.temperature = get_num(j.at("temperature"));
  c.learning_rate = get_num(j.at("learning_rate"));
  c.iterations = field<std::uint32_t>(j, "iterations");
  c.queries_per_iter = field<std::uint32_t>(j, "queries_per_iter");
  c.checkpoint_every = field<std::uint32_t>(j, "checkpoint_every");
  c.include_audio_history = field<bool>(j, "include_audio_history");
  c.reward = reward_config_from_json(j.at("reward"));
  return c;
}

// ---------------------------------------------------------------------------
// world checkpoint

inline Json world_to_json(const StyleWorld& w) {
  Json emitters = Json::array();
  for (const auto& e : w.oracle.emitters()) emitters.push_back(dstr_array(e.probs()));
  Json instr = Json::array();
  for (const auto& t : w.oracle.instruction_tables()) instr.push_back(dstr_array(t));
  return {{"version", kFormatVersion},
          {"config", to_json(w.config)},
          {"prior", dstr_array(w.oracle.prior())},
          {"emitters", std::move(emitters)},
          {"instruction_tables", std::move(instr)}};
}

/// The decoder is rebuilt from the stored tables; it is a pure function of them.
inline StyleWorld world_from_json(const Json& j) {
  if (field<int>(j, "version") != kFormatVersion)
    throw Error(ErrorCode::kParseError, "unsupported world checkpoint version");
  StyleWorld w;
  w.config = world_config_from_json(j.at("config"));
  std::vector<EmissionTable> emitters;
  for (const auto& e : j.at("emitters")) emitters.emplace_back(w.config.vocab, parse_dstr_array(e));
  std::vector<std::vector<double>> instr;
  for (const auto& t : j.at("instruction_tables")) instr.push_back(parse_dstr_array(t));
  w.oracle = OracleModel(parse_dstr_array(j.at("prior")), std::move(emitters), std::move(instr));
  std::size_t cs = 0;
  std::uint32_t ct = 0;
  if (!build_decode_table(w.oracle, w.config.decode_noise, w.decoder, cs, ct))
    throw Error(ErrorCode::kParseError, "stored world has clashing modal tuples");
  w.labels.assign(w.oracle.n_styles(), StyleLabel::kNotNeutral);
  for (auto s : w.config.neutral_styles) w.labels.at(s) = StyleLabel::kNeutral;
  return w;
}

// ---------------------------------------------------------------------------
// sequences and scenes

inline Json to_json(const TA4Sequence& seq) {
  return {{"text", seq.transcript().text_ids}, {"audio", seq.audio_ids()}};
}

inline TA4Sequence ta4_from_json(const Json& j) {
  Transcript w{field<std::vector<std::uint32_t>>(j, "text")};
  const auto audio = field<std::vector<std::uint32_t>>(j, "audio");
  return interleave(w, audio);
}

inline Json scene_to_json(const DialogueScene& sc, bool include_private = true) {
  Json turns = Json::array();
  for (const auto& t : sc.turns) {
    turns.push_back({{"speaker", t.speaker},
                     {"instruction", t.instruction},
                     {"text", t.transcript.text_ids},
                     {"audio", t.target.audio_ids()}});
  }
  Json j = {{"scene_id", sc.scene_id},
            {"source_id", sc.source_id},
            {"scene_text", sc.spec.scene_text},
            {"profiles", sc.spec.profiles},
            {"turns", std::move(turns)}};
  if (include_private) j["oracle_private"] = {{"style_map", sc.spec.style_map}};
  return j;
}

inline DialogueScene scene_from_json(const Json& j) {
  DialogueScene sc;
  sc.scene_id = field<std::string>(j, "scene_id");
  sc.source_id = field<std::string>(j, "source_id");
  sc.spec.scene_text = field<std::vector<std::uint32_t>>(j, "scene_text");
  sc.spec.profiles = field<std::vector<std::vector<std::uint32_t>>>(j, "profiles");
  if (j.contains("oracle_private"))
    sc.spec.style_map = field<std::vector<std::uint32_t>>(j.at("oracle_private"), "style_map");
  for (const auto& t : j.at("turns")) {
    DialogueTurn turn;
    turn.speaker = field<std::uint32_t>(t, "speaker");
    turn.instruction = field<std::vector<std::uint32_t>>(t, "instruction");
    turn.transcript.text_ids = field<std::vector<std::uint32_t>>(t, "text");
    turn.target = interleave(turn.transcript, field<std::vector<std::uint32_t>>(t, "audio"));
    sc.turns.push_back(std::move(turn));
  }
  return sc;
}

template <class T, class Fn>
std::string to_jsonl(const std::vector<T>& items, Fn&& fn) {
  std::string out;
  for (const auto& it : items) {
    out += fn(it).dump();
    out += '\n';
  }
  return out;
}

inline std::string scenes_to_jsonl(const std::vector<DialogueScene>& scenes, bool include_private = true) {
  return to_jsonl(scenes, [&](const DialogueScene& s) { return scene_to_json(s, include_private); });
}

/// Malformed lines report their 1-based line number.
template <class Fn>
auto parse_jsonl(std::string_view text, Fn&& fn) {
  using T = decltype(fn(std::declval<const Json&>()));
  std::vector<T> out;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(fn(Json::parse(lines[i])));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(i + 1) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(i + 1) + ": " + e.detail());
    }
  }
  return out;
}

inline std::vector<DialogueScene> scenes_from_jsonl(std::string_view text) {
  return parse_jsonl(text, [](const Json& j) { return scene_from_json(j); });
}

// ---------------------------------------------------------------------------
// policy checkpoint

inline Json policy_to_json(const PolicyParams& p) {
  const auto& fc = p.config();
  return {{"version", kFormatVersion},
          {"feature_config",
           {{"vocab", to_json(fc.vocab)}, {"instruction_vocab", fc.instruction_vocab}}},
          {"bucket_count", fc.bucket_count},
          {"theta", dstr_array(p.theta())}};
}

inline PolicyParams policy_from_json(const Json& j) {
  if (field<int>(j, "version") != kFormatVersion)
    throw Error(ErrorCode::kParseError, "unsupported policy checkpoint version");
  FeatureConfig fc;
  const Json& f = j.at("feature_config");
  fc.vocab = vocab_from_json(f.at("vocab"));
  fc.instruction_vocab = field<std::uint32_t>(f, "instruction_vocab");
  fc.bucket_count = field<std::uint32_t>(j, "bucket_count");
  return PolicyParams(fc, parse_dstr_array(j.at("theta")));
}

// ---------------------------------------------------------------------------
// logs and CSV

inline Json reward_record(std::uint32_t iter, std::size_t slot, std::size_t rollout,
                          const GroupBatch& g) {
  const RewardBreakdown& b = g.rewards[rollout];
  return {{"iter", iter},
          {"group", slot},
          {"rollout", rollout},
          {"query_id", g.query_id},
          {"mclp", dstr(b.mclp)},
          {"cer", dstr(b.cer)},
          {"r_style", dstr(b.r_style)},
          {"r_content", dstr(b.r_content)},
          {"gated", b.gated},
          {"reward", dstr(b.reward)},
          {"advantage", dstr(g.advantages[rollout])}};
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : width_(header.size()) { row(header); }

  Csv& row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error(ErrorCode::kConfigInvalid, "CSV row has wrong width");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ += ',';
      out_ += escape(cells[i]);
    }
    out_ += '\n';
    return *this;
  }

  const std::string& str() const { return out_; }

 private:
  static std::string escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  }

  std::size_t width_;
  std::string out_;
};

inline std::string sft_log_csv(const std::vector<double>& curve) {
  Csv csv({"epoch", "mean_nll"});
  for (std::size_t e = 0; e < curve.size(); ++e) csv.row({std::to_string(e), dstr(curve[e])});
  return csv.str();
}

inline std::string grpo_log_csv(const std::vector<GrpoLogRow>& log) {
  Csv csv({"iter", "mean_reward", "mean_mclp", "mean_cer", "gated_frac", "mean_kl", "loss"});
  for (const auto& r : log)
    csv.row({std::to_string(r.iter), dstr(r.mean_reward), dstr(r.mean_mclp), dstr(r.mean_cer),
             dstr(r.gated_frac), dstr(r.mean_kl), dstr(r.loss)});
  return csv.str();
}

inline std::string eval_records_csv(const std::vector<EvalRecord>& recs) {
  Csv csv({"scene_id", "system", "regime", "mclp", "cer", "wer", "oracle_similarity"});
  for (const auto& r : recs)
    csv.row({r.scene_id, r.system, to_string(r.regime), dstr(r.mclp), dstr(r.cer), dstr(r.wer),
             dstr(r.oracle_similarity)});
  return csv.str();
}

// one row per (system, regime)
inline std::string summary_csv(const std::vector<AblationRow>& rows) {
  Csv csv({"system", "regime", "mclp", "cer", "wer", "oracle_similarity", "n"});
  for (const auto& r : rows)
    csv.row({r.system, to_string(r.regime), dstr(r.means.mclp), dstr(r.means.cer),
             dstr(r.means.wer), dstr(r.means.oracle_similarity), std::to_string(r.means.n)});
  return csv.str();
}

// reward variants side by side in one regime
inline std::string ablation_csv(const AblationReport& rep, HistoryRegime regime) {
  Csv csv({"system", "mclp", "cer", "wer"});
  for (const auto& r : rep.rows)
    if (r.regime == regime)
      csv.row({r.system, dstr(r.means.mclp), dstr(r.means.cer), dstr(r.means.wer)});
  return csv.str();
}

inline std::string winrate_csv(const WinRateReport& rep) {
  Csv csv({"bin_lo", "bin_hi", "n", "win_rate", "ci_lo", "ci_hi"});
  for (const auto& b : rep.bins)
    csv.row({dstr(b.lo), dstr(b.hi), std::to_string(b.n_pairs), dstr(b.win_rate), dstr(b.ci_low),
             dstr(b.ci_high)});
  return csv.str();
}

inline std::string stats_csv(const DatasetStats& st) {
  Csv csv({"n_audio", "total_hours", "n_sentences", "n_scenes", "avg_scenes_per_audio",
           "avg_sentences_per_scene", "avg_speakers_per_scene"});
  csv.row({std::to_string(st.n_audio), dstr(st.total_hours), std::to_string(st.n_sentences),
           std::to_string(st.n_scenes), dstr(st.avg_scenes_per_audio),
           dstr(st.avg_sentences_per_scene), dstr(st.avg_speakers_per_scene)});
  return csv.str();
}

// ---------------------------------------------------------------------------
// run manifest

/// Artifact path (relative to the run directory) -> SHA-256.
struct Manifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> artifacts;

  Json to_json() const {
    Json a = Json::object();
    for (const auto& [k, v] : artifacts) a[k] = v;
    return {{"version", kFormatVersion},
            {"config_hash", config_hash},
            {"seed", seed},
            {"artifacts", std::move(a)}};
  }

  static Manifest from_json(const Json& j) {
    Manifest m;
    m.config_hash = field<std::string>(j, "config_hash");
    m.seed = field<std::uint64_t>(j, "seed");
    for (const auto& [k, v] : j.at("artifacts").items()) m.artifacts[k] = v.get<std::string>();
    return m;
  }
};

/// Writes artifacts under one run directory and keeps manifest.json in sync.
/// An existing artifact is only overwritten if it still matches the checksum
/// the manifest recorded for it.
class RunDir {
 public:
  RunDir(std::filesystem::path root, std::string config_hash, std::uint64_t seed)
      : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
    const auto mpath = root_ / "manifest.json";
    if (std::filesystem::exists(mpath)) {
      try {
        manifest_ = Manifest::from_json(Json::parse(read_text_file(mpath)));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kParseError, mpath.string() + ": " + e.what());
      }
      if (manifest_.config_hash != config_hash)
        throw Error(ErrorCode::kChecksumMismatch,
                    mpath.string() + " belongs to config " + manifest_.config_hash);
    }
    manifest_.config_hash = std::move(config_hash);
    manifest_.seed = seed;
  }

  const std::filesystem::path& root() const { return root_; }
  const Manifest& manifest() const { return manifest_; }

  std::filesystem::path path(const std::string& rel) const { return root_ / rel; }

  void verify(const std::string& rel) const {
    const auto it = manifest_.artifacts.find(rel);
    const auto p = path(rel);
    if (it == manifest_.artifacts.end() || !std::filesystem::exists(p)) return;
    const auto actual = sha256_file(p);
    if (actual != it->second)
      throw Error(ErrorCode::kChecksumMismatch,
                  p.string() + " was modified outside the tool (manifest " + it->second +
                      ", on disk " + actual + ")");
  }

  void write(const std::string& rel, std::string_view content) {
    verify(rel);
    write_text_file(path(rel), content);
    manifest_.artifacts[rel] = sha256_hex(content);
    write_text_file(root_ / "manifest.json", manifest_.to_json().dump(2) + "\n");
  }

  /// Reads an input artifact, checking it against the manifest when listed.
  std::string read(const std::string& rel) const {
    const auto p = path(rel);
    if (!std::filesystem::exists(p)) throw Error(ErrorCode::kMissingInput, "missing input " + p.string());
    verify(rel);
    return read_text_file(p);
  }

 private:
  std::filesystem::path root_;
  Manifest manifest_;
};

}  // namespace mclp
