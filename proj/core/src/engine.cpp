#include "vcap/engine.hpp"

#include "vcap/error.hpp"
#include "vcap/executor.hpp"

#include <algorithm>

namespace vcap {

std::string_view to_string(FailurePolicy p) {
  return p == FailurePolicy::Strict ? "strict" : "best-effort";
}

std::optional<FailurePolicy> parse_failure_policy(std::string_view text) {
  if (text == "strict") return FailurePolicy::Strict;
  if (text == "best-effort" || text == "best_effort") return FailurePolicy::BestEffort;
  return std::nullopt;
}

std::string_view to_string(CaptionStatus s) {
  switch (s) {
    case CaptionStatus::Complete: return "complete";
    case CaptionStatus::PartialFailed: return "partial_failed";
    case CaptionStatus::Failed: return "failed";
  }
  return "?";
}

Json to_json(const CaptionRecord& r) {
  Json j;
  j["item_id"] = r.item_id;
  j["domain"] = to_string(r.domain);
  j["status"] = to_string(r.status);
  j["caption"] = r.caption;
  j["failed_agents"] = r.failed_agents;
  if (!r.error.empty()) j["error"] = r.error;
  Json outputs = Json::array();
  for (const auto& o : r.agent_outputs) outputs.push_back(to_json(o));
  j["agent_outputs"] = outputs;
  j["summary"] = r.summary ? to_json(*r.summary) : Json(nullptr);
  j["total_cost"] = r.total_cost.to_string();
  j["total_latency"] = r.total_latency;
  return j;
}

CaptionRecord caption_record_from_json(const Json& j) {
  try {
    CaptionRecord r;
    r.item_id = j.at("item_id").get<std::string>();
    auto domain = parse_domain(j.at("domain").get<std::string>());
    if (!domain) throw Error(ErrorKind::Manifest, "unknown domain in caption record");
    r.domain = *domain;
    std::string status = j.at("status").get<std::string>();
    r.status = status == "complete"         ? CaptionStatus::Complete
               : status == "partial_failed" ? CaptionStatus::PartialFailed
                                            : CaptionStatus::Failed;
    r.caption = j.at("caption").get<std::string>();
    r.failed_agents = j.at("failed_agents").get<std::vector<std::string>>();
    r.error = j.value("error", "");
    for (const auto& o : j.at("agent_outputs")) r.agent_outputs.push_back(agent_output_from_json(o));
    if (!j.at("summary").is_null()) r.summary = agent_output_from_json(j["summary"]);
    r.total_cost = Money::parse(j.at("total_cost").get<std::string>());
    r.total_latency = j.at("total_latency").get<double>();
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Manifest, std::string("malformed caption record: ") + e.what());
  }
}

std::string summary_input(const std::vector<AgentOutput>& outputs,
                          const AgentRegistry& registry) {
  std::string out;
  for (const auto& o : outputs) {
    if (!o.ok()) continue;
    const AgentSpec* spec = registry.find(o.agent);
    bool part_b = spec && spec->category == AgentCategory::Reasoning;
    if (!out.empty()) out += "\n\n";
    out += "### " + o.agent + (part_b ? " [Part B]\n" : " [Part A]\n") + o.text;
  }
  return out;
}

CaptionRecord run_workflow(const MediaItem& item, const RoutingDecision& decision,
                           const WorkflowTable& workflows, const AgentRegistry& registry,
                           ChatClient& client, const WorkflowOptions& options) {
  if (!domain_allowed_for(decision.domain, item.kind)) {
    throw Error(ErrorKind::Precondition, "item '" + item.id + "': domain " +
                                             std::string(to_string(decision.domain)) +
                                             " is illegal for " + std::string(to_string(item.kind)));
  }
  const WorkflowSpec& wf = workflows.workflow_for(decision.domain);

  CaptionRecord rec;
  rec.item_id = item.id;
  rec.domain = decision.domain;

  std::vector<double> frames;
  if (item.kind == MediaKind::Video && item.duration && *item.duration > 0 &&
      options.video_frames > 0) {
    frames = sample_video_frames(item, options.video_frames);
  }
  RenderContext ctx{{"domain", std::string(display_name(decision.domain))}};

  std::vector<const AgentSpec*> specs;
  for (const auto& name : wf.functional_agents) specs.push_back(&registry.get(name));

  rec.agent_outputs = parallel_map<AgentOutput>(
      specs.size(), options.agent_parallelism, [&](std::size_t i) {
        const AgentSpec& spec = *specs[i];
        try {
          return client.chat(render(spec, item, ctx, frames));
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::Render) throw;
          AgentOutput failed;
          failed.agent = spec.name;
          failed.status = OutputStatus::Failed;
          failed.failure_reason = e.what();
          failed.attempts = 0;
          return failed;
        }
      });

  bool any_perception = false;
  double slowest = 0.0;
  for (std::size_t i = 0; i < rec.agent_outputs.size(); ++i) {
    const AgentOutput& o = rec.agent_outputs[i];
    rec.total_cost += o.cost;
    slowest = std::max(slowest, o.latency);
    if (!o.ok()) {
      rec.failed_agents.push_back(o.agent);
    } else if (specs[i]->category == AgentCategory::Perception) {
      any_perception = true;
    }
  }
  rec.total_latency = slowest;

  if (!rec.failed_agents.empty()) {
    if (rec.failed_agents.size() == rec.agent_outputs.size()) {
      rec.error = "all functional agents failed";
      return rec;
    }
    if (options.policy == FailurePolicy::Strict) {
      rec.error = "functional agent failure under strict policy";
      return rec;
    }
    if (!any_perception) {
      rec.error = "no perception output succeeded";
      return rec;
    }
  }

  const AgentSpec& summary_spec = registry.get(wf.summary_agent);
  RenderContext sctx = ctx;
  sctx["agent_outputs"] = summary_input(rec.agent_outputs, registry);
  AgentOutput summary = client.chat(render(summary_spec, item, sctx));
  rec.total_cost += summary.cost;
  rec.total_latency += summary.latency;
  const bool ok = summary.ok();
  rec.summary = std::move(summary);
  if (!ok) {
    rec.failed_agents.push_back(rec.summary->agent);
    rec.error = "summary failed: " + rec.summary->failure_reason;
    return rec;
  }
  rec.caption = rec.summary->text;
  rec.status = rec.failed_agents.empty() ? CaptionStatus::Complete : CaptionStatus::PartialFailed;
  return rec;
}

}  // namespace vcap
