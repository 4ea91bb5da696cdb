#pragma once

#include "vcap/types.hpp"

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace vcap {

/// The ordered functional agents of one domain plus its summary agent.
struct WorkflowSpec {
  VisualDomain domain = VisualDomain::Natural;
  std::vector<AgentName> functional_agents;
  AgentName summary_agent;

  friend bool operator==(const WorkflowSpec&, const WorkflowSpec&) = default;
};

/// Domain → workflow table. Starts from the built-in mapping; rows can be
/// replaced from configuration.
class WorkflowTable {
 public:
  static WorkflowTable builtin();

  const WorkflowSpec& workflow_for(VisualDomain domain) const;

  /// Replaces one row. Rejects empty or duplicate-bearing agent lists.
  void override_row(WorkflowSpec spec);

  const std::array<WorkflowSpec, 9>& rows() const { return rows_; }

 private:
  std::array<WorkflowSpec, 9> rows_;
};

/// Row of the built-in table.
const WorkflowSpec& workflow_for(VisualDomain domain);

/// "NaturalPerception" → "Natural Perception", "Ocr" → "OCR",
/// "UiPerception" → "UI Perception".
std::string display_agent_name(std::string_view agent);

}  // namespace vcap
