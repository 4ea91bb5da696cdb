#include "vcap/agents.hpp"

#include "vcap/error.hpp"
#include "vcap/json_io.hpp"
#include "vcap/markup.hpp"
#include "vcap/prompt_assets.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <system_error>

namespace vcap {

namespace {

Error registry_error(const std::string& msg) { return Error(ErrorKind::Registry, msg); }
Error render_error(const std::string& msg) { return Error(ErrorKind::Render, msg); }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::replace(out.begin(), out.end(), '_', '-');
  return out;
}

struct BuiltinAgent {
  std::string_view name;
  AgentCategory category;
  Modality modality;
  MediaConstraint media;
  TemplateMarkup markup;
  std::string_view binding;
  int max_output_tokens;
};

using C = AgentCategory;
using M = Modality;
using K = MediaConstraint;
using T = TemplateMarkup;

// Functional agents default to 1024 output tokens and summaries to 2048: the
// catalog prompts cap descriptions at 500-800 words.
constexpr BuiltinAgent kBuiltins[] = {
    {"NaturalPerception", C::Perception, M::VisionText, K::ImageOnly, T::Latex, "functional", 1024},
    {"LogicalPerception", C::Perception, M::VisionText, K::ImageOnly, T::Latex, "functional", 1024},
    {"GeneralReasoning", C::Reasoning, M::VisionText, K::ImageOnly, T::Latex, "functional", 1024},
    {"InfographicPerception", C::Perception, M::VisionText, K::ImageOnly, T::Latex, "functional", 1024},
    {"Ocr", C::Tool, M::VisionText, K::ImageOnly, T::Latex, "functional", 1024},
    {"UiPerception", C::Perception, M::VisionText, K::ImageOnly, T::Latex, "functional", 1024},
    {"Coder", C::Perception, M::VisionText, K::ImageOnly, T::Latex, "functional", 1024},
    {"KnowledgeReasoning", C::Reasoning, M::VisionText, K::ImageOnly, T::Latex, "functional", 1024},
    {"MedicalReasoning", C::Reasoning, M::VisionText, K::ImageOnly, T::Latex, "functional", 1024},
    {"VisualGuideline", C::Guideline, M::VisionText, K::ImageOnly, T::Latex, "functional", 1024},
    {"VideoPerception", C::Perception, M::VisionText, K::VideoOnly, T::Latex, "functional", 1024},
    {"VideoReasoning", C::Reasoning, M::VisionText, K::VideoOnly, T::Latex, "functional", 1024},
    {"VideoGuideline", C::Guideline, M::VisionText, K::VideoOnly, T::Latex, "functional", 1024},
    {"GeneralSummary", C::Summary, M::TextOnly, K::ImageOnly, T::Latex, "summary", 2048},
    {"VideoSummary", C::Summary, M::TextOnly, K::VideoOnly, T::Latex, "summary", 2048},
    {"ImageQualityEval", C::Evaluation, M::VisionText, K::ImageOnly, T::Latex, "judge", 1024},
    {"VideoQualityEval", C::Evaluation, M::VisionText, K::VideoOnly, T::Latex, "judge", 1024},
    {"DomainRouter", C::Routing, M::VisionText, K::ImageOnly, T::Plain, "router", 16},
    {"Reasoner", C::Evaluation, M::TextOnly, K::Any, T::Plain, "reasoner", 4096},
};

constexpr std::string_view kCatalog[] = {
    "NaturalPerception", "LogicalPerception", "GeneralReasoning", "InfographicPerception",
    "Ocr",               "UiPerception",      "Coder",            "KnowledgeReasoning",
    "MedicalReasoning",  "VisualGuideline",   "VideoPerception",  "VideoReasoning",
    "VideoGuideline",    "GeneralSummary",    "VideoSummary",
};

std::string_view default_binding(AgentCategory c) {
  switch (c) {
    case C::Summary: return "summary";
    case C::Routing: return "router";
    case C::Evaluation: return "judge";
    default: return "functional";
  }
}

void check_invariants(const AgentSpec& a) {
  if (a.category == C::Summary && a.modality != M::TextOnly) {
    throw registry_error("agent '" + a.name + "': summary agents must be text-only");
  }
  if ((a.category == C::Guideline || a.category == C::Perception ||
       a.category == C::Reasoning) &&
      a.modality != M::VisionText) {
    throw registry_error("agent '" + a.name + "': " + std::string(to_string(a.category)) +
                         " agents must be vision-text");
  }
  if (a.max_output_tokens <= 0) {
    throw registry_error("agent '" + a.name + "': max_output_tokens must be positive");
  }
  if (a.model_binding.empty()) {
    throw registry_error("agent '" + a.name + "': model binding is empty");
  }
  template_placeholders(a.prompt_template);
}

std::string load_template(const std::filesystem::path& path) {
  try {
    return read_file(path);
  } catch (const Error& e) {
    throw registry_error(std::string("template: ") + e.what());
  }
}

std::string substitute(std::string_view tmpl, const RenderContext& ctx,
                       const std::string& agent) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    std::size_t close = tmpl.find("}}", open + 2);
    std::string_view name = tmpl.substr(open + 2, close - open - 2);
    auto it = ctx.find(name);
    if (it == ctx.end()) {
      throw render_error("agent '" + agent + "': missing placeholder '" + std::string(name) +
                         "'");
    }
    out.append(tmpl.substr(pos, open - pos));
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

}  // namespace

std::string_view to_string(AgentCategory c) {
  switch (c) {
    case C::Guideline: return "guideline";
    case C::Perception: return "perception";
    case C::Reasoning: return "reasoning";
    case C::Tool: return "tool";
    case C::Summary: return "summary";
    case C::Routing: return "routing";
    case C::Evaluation: return "evaluation";
  }
  return "?";
}

std::string_view to_string(Modality m) {
  return m == M::VisionText ? "vision-text" : "text-only";
}

std::string_view to_string(MediaConstraint m) {
  switch (m) {
    case K::Any: return "any";
    case K::ImageOnly: return "image";
    case K::VideoOnly: return "video";
  }
  return "?";
}

std::optional<AgentCategory> parse_category(std::string_view text) {
  std::string t = lower(text);
  for (auto c : {C::Guideline, C::Perception, C::Reasoning, C::Tool, C::Summary, C::Routing,
                 C::Evaluation}) {
    if (t == to_string(c)) return c;
  }
  return std::nullopt;
}

std::optional<Modality> parse_modality(std::string_view text) {
  std::string t = lower(text);
  if (t == "vision-text" || t == "visiontext") return M::VisionText;
  if (t == "text-only" || t == "textonly") return M::TextOnly;
  return std::nullopt;
}

std::optional<MediaConstraint> parse_media_constraint(std::string_view text) {
  std::string t = lower(text);
  if (t == "any") return K::Any;
  if (t == "image") return K::ImageOnly;
  if (t == "video") return K::VideoOnly;
  return std::nullopt;
}

std::vector<std::string> template_placeholders(std::string_view tmpl) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = tmpl.find("{{", pos)) != std::string_view::npos) {
    std::size_t close = tmpl.find("}}", pos + 2);
    if (close == std::string_view::npos) {
      throw registry_error("unterminated placeholder in template");
    }
    std::string name(tmpl.substr(pos + 2, close - pos - 2));
    if (std::find(kPlaceholders.begin(), kPlaceholders.end(), name) == kPlaceholders.end()) {
      throw registry_error("unknown placeholder '{{" + name + "}}'");
    }
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    pos = close + 2;
  }
  return names;
}

std::optional<std::string_view> builtin_prompt(std::string_view name) {
  for (const auto& asset : detail::prompt_assets()) {
    if (asset.name == name) return asset.text;
  }
  return std::nullopt;
}

std::span<const std::string_view> catalog_agent_names() { return kCatalog; }

AgentRegistry AgentRegistry::load(const RegistryOverrides& overrides) {
  AgentRegistry reg;
  for (const auto& b : kBuiltins) {
    auto text = builtin_prompt(b.name);
    if (!text) throw registry_error("missing built-in prompt asset for " + std::string(b.name));
    AgentSpec spec{std::string(b.name), b.category,          b.modality,
                   b.media,            std::string(*text),  b.markup,
                   std::string(b.binding), b.max_output_tokens};
    reg.agents_.emplace(spec.name, std::move(spec));
  }
  // Table names without a dedicated catalog prompt.
  reg.aliases_.emplace("StructurePerception", "LogicalPerception");
  reg.aliases_.emplace("TexturePerception", "NaturalPerception");

  if (overrides.template_dir) {
    std::error_code ec;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(*overrides.template_dir, ec)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") {
        files.push_back(entry.path());
      }
    }
    if (ec) {
      throw registry_error("cannot list template directory " +
                           overrides.template_dir->string());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      std::string name = file.stem().string();
      auto it = reg.agents_.find(name);
      if (it == reg.agents_.end()) {
        throw registry_error("template file " + file.string() + " names no known agent");
      }
      it->second.prompt_template = load_template(file);
    }
  }

  std::set<std::string, std::less<>> seen;
  for (const auto& ov : overrides.agents) {
    if (!seen.insert(ov.name).second) {
      throw registry_error("agent '" + ov.name + "' overridden twice");
    }
    std::optional<std::string> text = ov.template_text;
    if (!text && ov.template_path) text = load_template(*ov.template_path);

    auto it = reg.agents_.find(ov.name);
    if (it != reg.agents_.end()) {
      AgentSpec& spec = it->second;
      if (ov.category && *ov.category != spec.category) {
        throw registry_error("agent '" + ov.name + "' already exists with category " +
                             std::string(to_string(spec.category)));
      }
      if (ov.modality && *ov.modality != spec.modality) {
        throw registry_error("agent '" + ov.name + "' already exists with modality " +
                             std::string(to_string(spec.modality)));
      }
      if (text) {
        spec.prompt_template = *text;
        spec.markup = TemplateMarkup::Plain;
      }
      if (ov.media) spec.media = *ov.media;
      if (ov.model_binding) spec.model_binding = *ov.model_binding;
      if (ov.max_output_tokens) spec.max_output_tokens = *ov.max_output_tokens;
      check_invariants(spec);
      continue;
    }

    if (!text) throw registry_error("new agent '" + ov.name + "' needs a template");
    if (!ov.category) throw registry_error("new agent '" + ov.name + "' needs a category");
    AgentSpec spec;
    spec.name = ov.name;
    spec.category = *ov.category;
    spec.modality = ov.modality.value_or(spec.category == C::Summary ? M::TextOnly
                                                                     : M::VisionText);
    spec.media = ov.media.value_or(K::Any);
    spec.prompt_template = *text;
    spec.markup = TemplateMarkup::Plain;
    spec.model_binding = ov.model_binding.value_or(std::string(default_binding(spec.category)));
    spec.max_output_tokens =
        ov.max_output_tokens.value_or(spec.category == C::Summary ? 2048 : 1024);
    check_invariants(spec);
    reg.aliases_.erase(spec.name);
    reg.agents_.emplace(spec.name, std::move(spec));
  }

  for (const auto& [name, spec] : reg.agents_) check_invariants(spec);
  return reg;
}

const AgentSpec* AgentRegistry::find(std::string_view name) const {
  if (auto it = agents_.find(name); it != agents_.end()) return &it->second;
  if (auto al = aliases_.find(name); al != aliases_.end()) {
    if (auto it = agents_.find(al->second); it != agents_.end()) return &it->second;
  }
  return nullptr;
}

const AgentSpec& AgentRegistry::get(std::string_view name) const {
  const AgentSpec* spec = find(name);
  if (!spec) throw registry_error("unknown agent '" + std::string(name) + "'");
  return *spec;
}

std::vector<AgentName> AgentRegistry::names() const {
  std::vector<AgentName> out;
  out.reserve(agents_.size());
  for (const auto& [name, _] : agents_) out.push_back(name);
  return out;
}

void validate_workflows(const WorkflowTable& table, const AgentRegistry& registry) {
  for (const auto& row : table.rows()) {
    const std::string where = "workflow " + std::string(to_string(row.domain));
    for (const auto& name : row.functional_agents) {
      const AgentSpec* spec = registry.find(name);
      if (!spec) throw registry_error(where + ": unknown agent '" + name + "'");
      if (spec->category == C::Summary || spec->category == C::Routing ||
          spec->category == C::Evaluation) {
        throw registry_error(where + ": '" + name + "' is not a functional agent");
      }
    }
    const AgentSpec* summary = registry.find(row.summary_agent);
    if (!summary) throw registry_error(where + ": unknown agent '" + row.summary_agent + "'");
    if (summary->category != C::Summary) {
      throw registry_error(where + ": '" + row.summary_agent + "' is not a summary agent");
    }
  }
}

std::vector<MediaRef> RenderedRequest::media() const {
  std::vector<MediaRef> out;
  for (const auto& m : messages) {
    for (const auto& p : m.parts) {
      if (p.media) out.push_back(*p.media);
    }
  }
  return out;
}

std::size_t RenderedRequest::text_chars() const {
  std::size_t n = 0;
  for (const auto& m : messages) {
    for (const auto& p : m.parts) n += p.text.size();
  }
  return n;
}

std::string system_prompt_text(const AgentSpec& agent) {
  return agent.markup == TemplateMarkup::Latex ? flatten_latex(agent.prompt_template)
                                               : agent.prompt_template;
}

RenderedRequest render(const AgentSpec& agent, const MediaItem& item,
                       const RenderContext& context, std::span<const double> frame_times) {
  if (!agent.accepts(item.kind)) {
    throw render_error("agent '" + agent.name + "' does not accept " +
                       std::string(to_string(item.kind)) + " item '" + item.id + "'");
  }

  RenderedRequest req;
  req.agent = agent.name;
  req.item_id = item.id;
  req.modality = agent.modality;
  req.model_binding = agent.model_binding;
  req.max_output_tokens = agent.max_output_tokens;

  Message system{Role::System, {}};
  system.parts.push_back({substitute(system_prompt_text(agent), context, agent.name), {}});
  req.messages.push_back(std::move(system));

  Message user{Role::User, {}};
  if (agent.modality == Modality::VisionText) {
    if (item.kind == MediaKind::Video && !frame_times.empty()) {
      for (double t : frame_times) user.parts.push_back({"", MediaRef{item.uri, t}});
    } else {
      user.parts.push_back({"", MediaRef{item.uri, std::nullopt}});
    }
  }

  std::string text;
  if (agent.category == AgentCategory::Summary) {
    auto it = context.find("agent_outputs");
    if (it == context.end()) {
      throw render_error("agent '" + agent.name + "': missing placeholder 'agent_outputs'");
    }
    text = it->second;
  }
  if (auto it = context.find("extra"); it != context.end() && !it->second.empty()) {
    if (!text.empty()) text += "\n\n";
    text += it->second;
  }
  if (!text.empty()) user.parts.push_back({std::move(text), {}});
  if (user.parts.empty()) {
    throw render_error("agent '" + agent.name + "': text-only request has no user content");
  }
  req.messages.push_back(std::move(user));
  return req;
}

Json to_json(const RenderedRequest& request) {
  Json j;
  j["agent"] = request.agent;
  j["item_id"] = request.item_id;
  j["modality"] = to_string(request.modality);
  j["model_binding"] = request.model_binding;
  j["max_output_tokens"] = request.max_output_tokens;
  Json messages = Json::array();
  for (const auto& m : request.messages) {
    Json parts = Json::array();
    for (const auto& p : m.parts) {
      if (p.media) {
        Json ref{{"uri", p.media->uri}};
        if (p.media->timestamp) ref["timestamp"] = *p.media->timestamp;
        parts.push_back(Json{{"media", ref}});
      } else {
        parts.push_back(Json{{"text", p.text}});
      }
    }
    messages.push_back(Json{{"role", m.role == Role::System ? "system" : "user"},
                            {"parts", parts}});
  }
  j["messages"] = messages;
  return j;
}

}  // namespace vcap
