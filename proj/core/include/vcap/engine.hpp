#pragma once

#include "vcap/agents.hpp"
#include "vcap/client.hpp"
#include "vcap/media.hpp"
#include "vcap/router.hpp"
#include "vcap/workflow.hpp"

#include <optional>
#include <string>
#include <vector>

namespace vcap {

enum class FailurePolicy { Strict, BestEffort };

std::string_view to_string(FailurePolicy policy);
std::optional<FailurePolicy> parse_failure_policy(std::string_view text);

enum class CaptionStatus { Complete, PartialFailed, Failed };

std::string_view to_string(CaptionStatus status);

struct CaptionRecord {
  std::string item_id;
  VisualDomain domain = VisualDomain::Natural;
  std::string caption;
  std::vector<AgentOutput> agent_outputs;  // workflow order
  std::optional<AgentOutput> summary;      // absent when no summary call was made
  Money total_cost;
  double total_latency = 0.0;  // slowest functional call plus the summary call
  CaptionStatus status = CaptionStatus::Failed;
  std::vector<AgentName> failed_agents;
  std::string error;

  bool has_caption() const { return status != CaptionStatus::Failed; }
  friend bool operator==(const CaptionRecord&, const CaptionRecord&) = default;
};

Json to_json(const CaptionRecord& record);
CaptionRecord caption_record_from_json(const Json& j);

struct WorkflowOptions {
  FailurePolicy policy = FailurePolicy::Strict;
  std::size_t agent_parallelism = 8;
  std::size_t video_frames = 8;
};

/// Summary input: one "### <Agent> [Part A|Part B]" block per successful
/// output, in the given order, separated by blank lines. Reasoning-category
/// outputs are Part B, everything else Part A.
std::string summary_input(const std::vector<AgentOutput>& outputs,
                          const AgentRegistry& registry);

/// Fans out to the domain's functional agents, then calls the summary agent.
/// Strict: any functional failure fails the record without a summary call.
/// BestEffort: the summary runs over the successful outputs provided at least
/// one Perception-category output succeeded.
CaptionRecord run_workflow(const MediaItem& item, const RoutingDecision& decision,
                           const WorkflowTable& workflows, const AgentRegistry& registry,
                           ChatClient& client, const WorkflowOptions& options = {});

}  // namespace vcap
