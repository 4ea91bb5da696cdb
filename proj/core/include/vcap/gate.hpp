#pragma once

#include "vcap/agents.hpp"
#include "vcap/client.hpp"
#include "vcap/engine.hpp"
#include "vcap/media.hpp"

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vcap {

inline constexpr std::string_view kImageJudgeAgent = "ImageQualityEval";
inline constexpr std::string_view kVideoJudgeAgent = "VideoQualityEval";
inline constexpr std::string_view kJudgeReminder =
    "Return only the JSON object in the required format.";

/// Rating field names in output order.
std::span<const std::string_view> rubric_dimensions(MediaKind modality);
/// The preset issue tags a judge may use.
std::span<const std::string_view> issue_tags(MediaKind modality);
std::string_view judge_agent_for(MediaKind modality);

enum class Verdict { Keep, Drop };

std::string_view to_string(Verdict v);

struct QualityScore {
  std::string item_id;
  MediaKind modality = MediaKind::Image;
  std::vector<std::pair<std::string, int>> dims;  // rubric order
  int overall_score = 0;                          // as reported; never decides
  std::vector<std::string> issues;
  std::string explanation;
  Verdict verdict = Verdict::Drop;

  friend bool operator==(const QualityScore&, const QualityScore&) = default;
};

/// Keep iff every rating is 3.
Verdict verdict_for(std::span<const std::pair<std::string, int>> dims);

/// The first `{...}` span that is balanced (string- and escape-aware) and
/// parses as a JSON object. Tolerates code fences and surrounding prose.
std::optional<Json> extract_json_object(std::string_view text);

/// Validates the reply against the exact rubric schema for the modality:
/// the five ratings, overall_score (integers 1..3), issues (preset tags) and
/// explanation, with no other keys. Throws Error(Protocol) describing the
/// first violation.
QualityScore parse_judge_reply(std::string_view reply, MediaKind modality,
                               const std::string& item_id);

/// Outcome of judging one caption. Without a score the record is quarantined.
struct Judgement {
  std::string item_id;
  AgentName agent;
  std::optional<QualityScore> score;
  std::string error;
  int attempts = 0;
  std::vector<std::string> responses;
  Usage usage;
  Money cost;

  bool ok() const { return score.has_value(); }
  friend bool operator==(const Judgement&, const Judgement&) = default;
};

Json to_json(const QualityScore& score);
Json to_json(const Judgement& judgement);
Judgement judgement_from_json(const Json& j);

/// Judges a caption against the item's media, re-asking once after an
/// unparseable reply. A failed model call or a second bad reply yields an
/// unscored Judgement.
Judgement judge_caption(const std::string& caption, const MediaItem& item,
                        const AgentRegistry& registry, ChatClient& client,
                        std::size_t video_frames = 8);

/// Requires a record that carries a caption (Complete or PartialFailed).
Judgement judge(const CaptionRecord& record, const MediaItem& item,
                const AgentRegistry& registry, ChatClient& client,
                std::size_t video_frames = 8);

struct GateStats {
  std::size_t judged = 0;  // kept + dropped
  std::size_t kept = 0;
  std::size_t dropped = 0;
  std::size_t quarantined = 0;
  std::optional<double> yield;  // kept / judged; absent when nothing was judged
  /// Per dimension: counts of ratings 1, 2, 3.
  std::map<std::string, std::array<std::size_t, 3>> histograms;
  std::map<std::string, std::size_t> issue_counts;
};

Json to_json(const GateStats& stats);

struct GateResult {
  std::vector<std::size_t> kept;  // indices into the input records
  std::vector<std::size_t> dropped;
  std::vector<std::size_t> quarantined;
  GateStats stats;
};

/// Partitions records by their judgements (matched by item id). Throws
/// Error(Precondition) if a record has no judgement.
GateResult filter_dataset(std::span<const CaptionRecord> records,
                          std::span<const Judgement> judgements);

}  // namespace vcap
