#pragma once

#include "vcap/agents.hpp"
#include "vcap/client.hpp"
#include "vcap/gate.hpp"
#include "vcap/media.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vcap {

inline constexpr std::string_view kReasonerAgent = "Reasoner";

// ---- caption quality ----

struct QualitySample {
  MediaItem item;
  std::string caption;
  /// Falls back to the item's known domain, or VideoTemporal for videos.
  std::optional<VisualDomain> domain;
};

struct ScoredSample {
  std::optional<VisualDomain> domain;
  MediaKind modality = MediaKind::Image;
  std::optional<QualityScore> score;  // absent when judging failed
};

/// Means over the successfully judged samples of one modality.
struct RubricMeans {
  std::size_t n = 0;
  std::vector<std::pair<std::string, std::int64_t>> sums;  // rubric order
  std::vector<std::pair<std::string, double>> means;
  double overall = 0.0;  // mean over all dimension ratings
};

struct QualityReport {
  std::size_t samples = 0;
  std::size_t failures = 0;
  bool all_failed = false;
  std::optional<RubricMeans> image;
  std::optional<RubricMeans> video;
  std::map<std::string, RubricMeans> per_domain;
};

QualityReport aggregate_quality(std::span<const ScoredSample> scored);

/// Judges every caption with the gate's rubric and aggregates. Throws
/// Error(Precondition) on empty input.
QualityReport quality_eval(std::span<const QualitySample> samples, const AgentRegistry& registry,
                           ChatClient& client, std::size_t workers = 8,
                           std::size_t video_frames = 8);

Json to_json(const QualityReport& report);
std::string to_text(const QualityReport& report);

// ---- visual reasoning with captions ----

struct QaOption {
  std::string letter;
  std::string text;

  friend bool operator==(const QaOption&, const QaOption&) = default;
};

struct QaInstance {
  std::string id;
  MediaItem item;
  std::string question;
  std::optional<std::vector<QaOption>> options;
  std::string gold;
};

/// Throws Error(Manifest) on schema violations, including a multiple-choice
/// gold that is not one of the option letters.
QaInstance qa_instance_from_json(const Json& j);
std::vector<QaInstance> load_qa_instances(const std::filesystem::path& path);

/// Last whitespace-separated token of the reply that, after stripping
/// trailing .,;:!? and an optional surrounding "(" ")", equals an option
/// letter.
std::optional<std::string> extract_choice(std::string_view reply,
                                          std::span<const QaOption> options);

/// Lowercases ASCII and collapses whitespace runs; trims the ends.
std::string normalize_answer(std::string_view text);

struct ReasoningOutcome {
  std::string id;
  std::optional<std::string> answer;  // absent: parse failure
  bool correct = false;
  std::string reply;
  std::string error;
};

/// reply is absent when the reasoner call failed.
ReasoningOutcome score_reasoning_reply(const QaInstance& instance,
                                       const std::optional<std::string>& reply);

struct ReasoningReport {
  std::size_t n = 0;
  std::size_t parsed = 0;
  std::size_t correct = 0;
  std::size_t parse_failures = 0;
  std::optional<double> accuracy;  // correct / parsed
  std::vector<ReasoningOutcome> outcomes;
};

ReasoningReport aggregate_reasoning(std::vector<ReasoningOutcome> outcomes);

/// The reasoner's user message: caption, question and lettered options.
std::string reasoning_prompt(const QaInstance& instance, const std::string& caption);

/// Throws Error(Precondition) if an instance's item has no caption.
ReasoningReport reasoning_eval(std::span<const QaInstance> instances,
                               const std::map<std::string, std::string, std::less<>>& captions,
                               const AgentRegistry& registry, ChatClient& client,
                               std::size_t workers = 8);

Json to_json(const ReasoningReport& report);
std::string to_text(const ReasoningReport& report);

}  // namespace vcap
