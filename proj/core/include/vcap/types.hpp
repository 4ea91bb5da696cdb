#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace vcap {

using AgentName = std::string;

enum class MediaKind { Image, Video };

std::string_view to_string(MediaKind kind);
std::optional<MediaKind> parse_media_kind(std::string_view text);

/// The closed set of visual domains an item is routed to.
enum class VisualDomain {
  Natural,
  StructureMath,
  InfographicDocument,
  MedicalBioImaging,
  UiInteraction,
  CodeProgramming,
  KnowledgeEducation,
  Synthetic,
  VideoTemporal,
};

inline constexpr std::array<VisualDomain, 9> kAllDomains = {
    VisualDomain::Natural,           VisualDomain::StructureMath,
    VisualDomain::InfographicDocument, VisualDomain::MedicalBioImaging,
    VisualDomain::UiInteraction,     VisualDomain::CodeProgramming,
    VisualDomain::KnowledgeEducation, VisualDomain::Synthetic,
    VisualDomain::VideoTemporal,
};

/// Identifier form used in files and config keys, e.g. "StructureMath".
std::string_view to_string(VisualDomain domain);

/// Human-readable form, e.g. "Structure & Math".
std::string_view display_name(VisualDomain domain);

/// Accepts the identifier or the display name, case-insensitively.
std::optional<VisualDomain> parse_domain(std::string_view text);

/// VideoTemporal is the only legal domain for video; it is illegal for images.
constexpr bool domain_allowed_for(VisualDomain domain, MediaKind kind) {
  return (domain == VisualDomain::VideoTemporal) == (kind == MediaKind::Video);
}

}  // namespace vcap
