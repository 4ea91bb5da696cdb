#include "vcap/gate.hpp"

#include "vcap/error.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

namespace vcap {

namespace {

constexpr std::string_view kImageDims[] = {
    "factual_accuracy", "completeness", "reasoning_rigor", "core_intent_capture",
    "professionalism_expression"};
constexpr std::string_view kVideoDims[] = {
    "temporal_factual_accuracy", "event_detail_coverage", "temporal_causal_logic",
    "core_narrative_intent", "coherence_formatting"};

constexpr std::string_view kImageTags[] = {
    "Entity Error",      "Attribute Error",        "Quantity Error",
    "Position Relation Error", "Hallucinated Existence", "OCR Error",
    "Reasoning Fallacy", "Factual Error",          "Structure/Format Violation",
    "Core Intent Missing"};
constexpr std::string_view kVideoTags[] = {
    "Entity Error",       "Attribute Error",     "Temporal Error",   "Sequence Error",
    "Causality Error",    "Motion/Action Error", "Coverage Omission", "Formatting Error",
    "Knowledge Error",    "Core Intent Missing"};

Error protocol(const std::string& msg) { return Error(ErrorKind::Protocol, msg); }

int rating(const Json& j, std::string_view key) {
  const Json& v = j.at(std::string(key));
  if (!v.is_number_integer()) throw protocol("'" + std::string(key) + "' is not an integer");
  auto r = v.get<std::int64_t>();
  if (r < 1 || r > 3) {
    throw protocol("'" + std::string(key) + "' = " + std::to_string(r) + " is outside 1..3");
  }
  return static_cast<int>(r);
}

}  // namespace

std::span<const std::string_view> rubric_dimensions(MediaKind m) {
  if (m == MediaKind::Image) return kImageDims;
  return kVideoDims;
}

std::span<const std::string_view> issue_tags(MediaKind m) {
  if (m == MediaKind::Image) return kImageTags;
  return kVideoTags;
}

std::string_view judge_agent_for(MediaKind m) {
  return m == MediaKind::Image ? kImageJudgeAgent : kVideoJudgeAgent;
}

std::string_view to_string(Verdict v) { return v == Verdict::Keep ? "keep" : "drop"; }

Verdict verdict_for(std::span<const std::pair<std::string, int>> dims) {
  bool all_three = !dims.empty() && std::all_of(dims.begin(), dims.end(),
                                                [](const auto& d) { return d.second == 3; });
  return all_three ? Verdict::Keep : Verdict::Drop;
}

std::optional<Json> extract_json_object(std::string_view text) {
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    std::size_t end = std::string_view::npos;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}' && --depth == 0) {
        end = i;
        break;
      }
    }
    if (end == std::string_view::npos) continue;
    Json j = Json::parse(text.substr(start, end - start + 1), nullptr, false);
    if (!j.is_discarded() && j.is_object()) return j;
  }
  return std::nullopt;
}

QualityScore parse_judge_reply(std::string_view reply, MediaKind modality,
                               const std::string& item_id) {
  std::optional<Json> found = extract_json_object(reply);
  if (!found) throw protocol("no JSON object in judge reply");
  const Json& j = *found;

  auto dims = rubric_dimensions(modality);
  std::set<std::string> allowed(dims.begin(), dims.end());
  allowed.insert({"overall_score", "issues", "explanation"});
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw protocol("unexpected field '" + key + "'");
  }
  for (const auto& key : allowed) {
    if (!j.contains(key)) throw protocol("missing field '" + key + "'");
  }

  QualityScore s;
  s.item_id = item_id;
  s.modality = modality;
  for (auto d : dims) s.dims.emplace_back(std::string(d), rating(j, d));
  s.overall_score = rating(j, "overall_score");

  const Json& issues = j["issues"];
  if (!issues.is_array()) throw protocol("'issues' is not a list");
  auto tags = issue_tags(modality);
  for (const auto& tag : issues) {
    if (!tag.is_string()) throw protocol("issue tag is not a string");
    auto t = tag.get<std::string>();
    if (std::find(tags.begin(), tags.end(), t) == tags.end()) {
      throw protocol("unknown issue tag '" + t + "'");
    }
    s.issues.push_back(std::move(t));
  }
  if (!j["explanation"].is_string()) throw protocol("'explanation' is not a string");
  s.explanation = j["explanation"].get<std::string>();
  s.verdict = verdict_for(s.dims);
  return s;
}

Json to_json(const QualityScore& s) {
  Json j;
  j["item_id"] = s.item_id;
  j["modality"] = to_string(s.modality);
  Json dims = Json::object();
  for (const auto& [name, r] : s.dims) dims[name] = r;
  j["dims"] = dims;
  j["overall_score"] = s.overall_score;
  j["issues"] = s.issues;
  j["explanation"] = s.explanation;
  j["verdict"] = to_string(s.verdict);
  return j;
}

Json to_json(const Judgement& g) {
  Json j;
  j["item_id"] = g.item_id;
  j["agent"] = g.agent;
  j["score"] = g.score ? to_json(*g.score) : Json(nullptr);
  if (!g.error.empty()) j["error"] = g.error;
  j["attempts"] = g.attempts;
  j["responses"] = g.responses;
  j["usage"] = to_json(g.usage);
  j["cost"] = g.cost.to_string();
  return j;
}

Judgement judgement_from_json(const Json& j) {
  try {
    Judgement g;
    g.item_id = j.at("item_id").get<std::string>();
    g.agent = j.at("agent").get<std::string>();
    g.error = j.value("error", "");
    g.attempts = j.at("attempts").get<int>();
    g.responses = j.at("responses").get<std::vector<std::string>>();
    g.usage = usage_from_json(j.at("usage"));
    g.cost = Money::parse(j.at("cost").get<std::string>());
    const Json& sj = j.at("score");
    if (!sj.is_null()) {
      QualityScore s;
      s.item_id = sj.at("item_id").get<std::string>();
      auto kind = parse_media_kind(sj.at("modality").get<std::string>());
      if (!kind) throw Error(ErrorKind::Manifest, "unknown modality in score record");
      s.modality = *kind;
      for (const auto& [name, r] : sj.at("dims").items()) s.dims.emplace_back(name, r.get<int>());
      s.overall_score = sj.at("overall_score").get<int>();
      s.issues = sj.at("issues").get<std::vector<std::string>>();
      s.explanation = sj.at("explanation").get<std::string>();
      s.verdict = verdict_for(s.dims);
      g.score = std::move(s);
    }
    return g;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Manifest, std::string("malformed score record: ") + e.what());
  }
}

Judgement judge_caption(const std::string& caption, const MediaItem& item,
                        const AgentRegistry& registry, ChatClient& client,
                        std::size_t video_frames) {
  const AgentSpec& agent = registry.get(judge_agent_for(item.kind));
  std::vector<double> frames;
  if (item.kind == MediaKind::Video && item.duration && *item.duration > 0 && video_frames > 0) {
    frames = sample_video_frames(item, video_frames);
  }

  Judgement g;
  g.item_id = item.id;
  g.agent = agent.name;
  const std::string candidate = "Candidate description:\n\n" + caption;
  for (int attempt = 1; attempt <= 2; ++attempt) {
    RenderContext ctx{{"extra", attempt == 1 ? candidate
                                             : candidate + "\n\n" + std::string(kJudgeReminder)}};
    AgentOutput out = client.chat(render(agent, item, ctx, frames));
    g.attempts = attempt;
    g.usage += out.usage;
    g.cost += out.cost;
    if (!out.ok()) {
      g.error = "judge call failed: " + out.failure_reason;
      return g;
    }
    g.responses.push_back(out.text);
    try {
      g.score = parse_judge_reply(out.text, item.kind, item.id);
      g.error.clear();
      return g;
    } catch (const Error& e) {
      g.error = std::string("unparseable judge reply: ") + e.what();
    }
  }
  return g;
}

Judgement judge(const CaptionRecord& record, const MediaItem& item,
                const AgentRegistry& registry, ChatClient& client, std::size_t video_frames) {
  if (!record.has_caption()) {
    throw Error(ErrorKind::Precondition, "item '" + record.item_id + "' has no caption to judge");
  }
  return judge_caption(record.caption, item, registry, client, video_frames);
}

Json to_json(const GateStats& s) {
  Json j;
  j["judged"] = s.judged;
  j["kept"] = s.kept;
  j["dropped"] = s.dropped;
  j["quarantined"] = s.quarantined;
  j["yield"] = s.yield ? Json(*s.yield) : Json(nullptr);
  Json hist = Json::object();
  for (const auto& [dim, counts] : s.histograms) {
    hist[dim] = Json{{"1", counts[0]}, {"2", counts[1]}, {"3", counts[2]}};
  }
  j["rating_histograms"] = hist;
  Json issues = Json::object();
  for (const auto& [tag, n] : s.issue_counts) issues[tag] = n;
  j["issue_counts"] = issues;
  return j;
}

GateResult filter_dataset(std::span<const CaptionRecord> records,
                          std::span<const Judgement> judgements) {
  std::unordered_map<std::string_view, const Judgement*> by_id;
  for (const auto& g : judgements) by_id.emplace(g.item_id, &g);

  GateResult out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto it = by_id.find(records[i].item_id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::Precondition,
                  "record '" + records[i].item_id + "' was neither judged nor quarantined");
    }
    const Judgement& g = *it->second;
    if (!g.score) {
      out.quarantined.push_back(i);
      continue;
    }
    const QualityScore& s = *g.score;
    (s.verdict == Verdict::Keep ? out.kept : out.dropped).push_back(i);
    for (const auto& [dim, r] : s.dims) ++out.stats.histograms[dim][static_cast<std::size_t>(r - 1)];
    for (const auto& tag : s.issues) ++out.stats.issue_counts[tag];
  }
  out.stats.kept = out.kept.size();
  out.stats.dropped = out.dropped.size();
  out.stats.quarantined = out.quarantined.size();
  out.stats.judged = out.stats.kept + out.stats.dropped;
  if (out.stats.judged > 0) {
    out.stats.yield = static_cast<double>(out.stats.kept) / static_cast<double>(out.stats.judged);
  }
  return out;
}

}  // namespace vcap
