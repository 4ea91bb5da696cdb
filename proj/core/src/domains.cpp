#include "vcap/error.hpp"
#include "vcap/types.hpp"
#include "vcap/workflow.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace vcap {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

WorkflowSpec row(VisualDomain d, std::vector<AgentName> agents, AgentName summary) {
  return WorkflowSpec{d, std::move(agents), std::move(summary)};
}

std::array<WorkflowSpec, 9> builtin_rows() {
  using D = VisualDomain;
  return {
      row(D::Natural, {"NaturalPerception", "GeneralReasoning", "VisualGuideline"},
          "GeneralSummary"),
      row(D::StructureMath,
          {"StructurePerception", "InfographicPerception", "GeneralReasoning",
           "VisualGuideline"},
          "GeneralSummary"),
      row(D::InfographicDocument,
          {"InfographicPerception", "Ocr", "GeneralReasoning", "VisualGuideline"},
          "GeneralSummary"),
      row(D::MedicalBioImaging,
          {"NaturalPerception", "MedicalReasoning", "VisualGuideline"}, "GeneralSummary"),
      row(D::UiInteraction, {"UiPerception", "Ocr", "GeneralReasoning"}, "GeneralSummary"),
      row(D::CodeProgramming, {"Coder", "GeneralReasoning", "VisualGuideline"},
          "GeneralSummary"),
      row(D::KnowledgeEducation,
          {"InfographicPerception", "KnowledgeReasoning", "VisualGuideline"},
          "GeneralSummary"),
      row(D::Synthetic, {"TexturePerception", "GeneralReasoning", "VisualGuideline"},
          "GeneralSummary"),
      row(D::VideoTemporal, {"VideoPerception", "VideoReasoning", "VideoGuideline"},
          "VideoSummary"),
  };
}

}  // namespace

std::string_view to_string(MediaKind kind) {
  return kind == MediaKind::Image ? "image" : "video";
}

std::optional<MediaKind> parse_media_kind(std::string_view text) {
  if (iequals(text, "image")) return MediaKind::Image;
  if (iequals(text, "video")) return MediaKind::Video;
  return std::nullopt;
}

std::string_view to_string(VisualDomain domain) {
  switch (domain) {
    case VisualDomain::Natural: return "Natural";
    case VisualDomain::StructureMath: return "StructureMath";
    case VisualDomain::InfographicDocument: return "InfographicDocument";
    case VisualDomain::MedicalBioImaging: return "MedicalBioImaging";
    case VisualDomain::UiInteraction: return "UiInteraction";
    case VisualDomain::CodeProgramming: return "CodeProgramming";
    case VisualDomain::KnowledgeEducation: return "KnowledgeEducation";
    case VisualDomain::Synthetic: return "Synthetic";
    case VisualDomain::VideoTemporal: return "VideoTemporal";
  }
  return "?";
}

std::string_view display_name(VisualDomain domain) {
  switch (domain) {
    case VisualDomain::Natural: return "Natural";
    case VisualDomain::StructureMath: return "Structure & Math";
    case VisualDomain::InfographicDocument: return "Infographic & Document";
    case VisualDomain::MedicalBioImaging: return "Medical & Bio-Imaging";
    case VisualDomain::UiInteraction: return "UI & Interaction";
    case VisualDomain::CodeProgramming: return "Code & Programming";
    case VisualDomain::KnowledgeEducation: return "Knowledge & Education";
    case VisualDomain::Synthetic: return "Synthetic";
    case VisualDomain::VideoTemporal: return "Video & Temporal";
  }
  return "?";
}

std::optional<VisualDomain> parse_domain(std::string_view text) {
  for (VisualDomain d : kAllDomains) {
    if (iequals(text, to_string(d)) || iequals(text, display_name(d))) return d;
  }
  return std::nullopt;
}

WorkflowTable WorkflowTable::builtin() {
  WorkflowTable t;
  t.rows_ = builtin_rows();
  return t;
}

const WorkflowSpec& WorkflowTable::workflow_for(VisualDomain domain) const {
  return rows_[static_cast<std::size_t>(domain)];
}

void WorkflowTable::override_row(WorkflowSpec spec) {
  const std::string where = "workflow " + std::string(to_string(spec.domain));
  if (spec.functional_agents.empty()) {
    throw Error(ErrorKind::Config, where + ": functional agent list is empty");
  }
  std::set<std::string_view> seen;
  for (const auto& a : spec.functional_agents) {
    if (!seen.insert(a).second) {
      throw Error(ErrorKind::Config, where + ": agent '" + a + "' listed twice");
    }
  }
  if (spec.summary_agent.empty()) {
    throw Error(ErrorKind::Config, where + ": summary agent missing");
  }
  rows_[static_cast<std::size_t>(spec.domain)] = std::move(spec);
}

const WorkflowSpec& workflow_for(VisualDomain domain) {
  static const WorkflowTable table = WorkflowTable::builtin();
  return table.workflow_for(domain);
}

std::string display_agent_name(std::string_view agent) {
  std::string out;
  for (std::size_t i = 0; i < agent.size(); ++i) {
    char c = agent[i];
    if (i > 0 && std::isupper(static_cast<unsigned char>(c))) out.push_back(' ');
    out.push_back(c);
  }
  // acronyms kept upper-case in the table
  std::string result;
  std::size_t start = 0;
  while (start <= out.size()) {
    std::size_t end = out.find(' ', start);
    if (end == std::string::npos) end = out.size();
    std::string word = out.substr(start, end - start);
    if (word == "Ocr") word = "OCR";
    if (word == "Ui") word = "UI";
    if (!result.empty()) result.push_back(' ');
    result += word;
    start = end + 1;
  }
  return result;
}

}  // namespace vcap
