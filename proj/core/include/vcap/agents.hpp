#pragma once

#include "vcap/media.hpp"
#include "vcap/types.hpp"
#include "vcap/workflow.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vcap {

enum class AgentCategory {
  Guideline,
  Perception,
  Reasoning,
  Tool,
  Summary,
  Routing,     // the domain classifier
  Evaluation,  // quality judges and the text-only reasoner
};

enum class Modality { VisionText, TextOnly };

/// Which media kinds an agent's prompt is written for.
enum class MediaConstraint { Any, ImageOnly, VideoOnly };

enum class TemplateMarkup { Plain, Latex };

std::string_view to_string(AgentCategory c);
std::string_view to_string(Modality m);
std::string_view to_string(MediaConstraint m);
std::optional<AgentCategory> parse_category(std::string_view text);
std::optional<Modality> parse_modality(std::string_view text);
std::optional<MediaConstraint> parse_media_constraint(std::string_view text);

/// The placeholders a template may reference, written `{{name}}`.
inline constexpr std::array<std::string_view, 4> kPlaceholders = {
    "media", "agent_outputs", "domain", "extra"};

/// Placeholder names referenced by a template, in order of first use.
/// Throws Error(Registry) on an unknown or unterminated placeholder.
std::vector<std::string> template_placeholders(std::string_view tmpl);

struct AgentSpec {
  AgentName name;
  AgentCategory category = AgentCategory::Perception;
  Modality modality = Modality::VisionText;
  MediaConstraint media = MediaConstraint::Any;
  std::string prompt_template;
  TemplateMarkup markup = TemplateMarkup::Plain;
  std::string model_binding;
  int max_output_tokens = 1024;

  bool accepts(MediaKind kind) const {
    return media == MediaConstraint::Any ||
           (media == MediaConstraint::ImageOnly) == (kind == MediaKind::Image);
  }
};

/// One `[agents.<name>]` config section. Unset fields keep the built-in value
/// (or the category default for a new agent).
struct AgentOverride {
  AgentName name;
  std::optional<std::filesystem::path> template_path;
  std::optional<std::string> template_text;
  std::optional<AgentCategory> category;
  std::optional<Modality> modality;
  std::optional<MediaConstraint> media;
  std::optional<std::string> model_binding;
  std::optional<int> max_output_tokens;
};

struct RegistryOverrides {
  /// Directory of `<AgentName>.txt` files replacing built-in templates.
  std::optional<std::filesystem::path> template_dir;
  std::vector<AgentOverride> agents;
};

/// Immutable after load; safe to share across threads.
class AgentRegistry {
 public:
  static AgentRegistry load(const RegistryOverrides& overrides = {});

  /// Resolves aliases. Throws Error(Registry) for unknown names.
  const AgentSpec& get(std::string_view name) const;
  const AgentSpec* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  std::size_t size() const { return agents_.size(); }
  std::vector<AgentName> names() const;
  const std::map<AgentName, AgentName, std::less<>>& aliases() const { return aliases_; }

 private:
  std::map<AgentName, AgentSpec, std::less<>> agents_;
  std::map<AgentName, AgentName, std::less<>> aliases_;
};

/// Built-in agents of the reference prompt catalog (router and reasoner excluded).
std::span<const std::string_view> catalog_agent_names();

/// Every agent named by any row must resolve; functional agents must not be
/// Summary-category and the summary agent must be. Throws Error(Registry).
void validate_workflows(const WorkflowTable& table, const AgentRegistry& registry);

enum class Role { System, User };

struct MediaRef {
  std::string uri;
  std::optional<double> timestamp;  // seconds; set for sampled video frames

  friend bool operator==(const MediaRef&, const MediaRef&) = default;
};

/// Either text or a media reference.
struct ContentPart {
  std::string text;
  std::optional<MediaRef> media;

  bool is_media() const { return media.has_value(); }
  friend bool operator==(const ContentPart&, const ContentPart&) = default;
};

struct Message {
  Role role = Role::User;
  std::vector<ContentPart> parts;

  friend bool operator==(const Message&, const Message&) = default;
};

struct RenderedRequest {
  AgentName agent;
  std::string item_id;
  Modality modality = Modality::VisionText;
  std::vector<Message> messages;
  std::string model_binding;
  int max_output_tokens = 1024;

  std::vector<MediaRef> media() const;
  /// Concatenated text of all parts, for token estimation.
  std::size_t text_chars() const;

  friend bool operator==(const RenderedRequest&, const RenderedRequest&) = default;
};

using RenderContext = std::map<std::string, std::string, std::less<>>;

/// System prompt of an agent after markup flattening (placeholders intact).
std::string system_prompt_text(const AgentSpec& agent);

/// Builds the request for one agent on one item. The system message is the
/// template with placeholders substituted. The user message carries the media
/// (VisionText agents: one reference per sampled frame for videos, else the
/// item uri) followed by `extra`; Summary agents put `agent_outputs` first.
/// Throws Error(Render) on a missing placeholder or a media mismatch.
RenderedRequest render(const AgentSpec& agent, const MediaItem& item,
                       const RenderContext& context,
                       std::span<const double> frame_times = {});

Json to_json(const RenderedRequest& request);

}  // namespace vcap
