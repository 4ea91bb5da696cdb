#pragma once

#include "vcap/agents.hpp"
#include "vcap/client.hpp"
#include "vcap/media.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace vcap {

inline constexpr std::string_view kRouterAgent = "DomainRouter";
inline constexpr std::string_view kLetterReminder = "Answer with the letter only.";
inline constexpr int kRouterAttempts = 3;

enum class RoutingMethod { Bypass, Classified };

std::string_view to_string(RoutingMethod method);

struct RoutingDecision {
  std::string item_id;
  VisualDomain domain = VisualDomain::Natural;
  RoutingMethod method = RoutingMethod::Bypass;
  std::optional<std::string> raw_response;  // last classifier reply
  int attempts = 0;
  Usage usage;  // summed over classifier calls
  Money cost;

  friend bool operator==(const RoutingDecision&, const RoutingDecision&) = default;
};

struct RoutingFailure {
  std::string item_id;
  std::string reason;
  int attempts = 0;
  std::vector<std::string> responses;
  Usage usage;
  Money cost;

  friend bool operator==(const RoutingFailure&, const RoutingFailure&) = default;
};

using RouteResult = std::variant<RoutingDecision, RoutingFailure>;

/// Maps a classifier reply to an image domain. Accepts a bare option letter
/// A-H, a letter followed by ")" or "." and optional text, or a full domain
/// name (case-insensitive). VideoTemporal is never returned.
std::optional<VisualDomain> parse_router_reply(std::string_view reply);

/// Option letter of an image domain in the classifier prompt ('A'..'H').
char router_letter(VisualDomain domain);

/// Known domains and videos bypass the classifier. Otherwise the classifier
/// is asked up to kRouterAttempts times, re-asking with kLetterReminder after
/// an unparseable reply. A failed model call ends routing immediately.
RouteResult route(const MediaItem& item, const AgentRegistry& registry, ChatClient& client);

Json to_json(const RoutingDecision& d);
Json to_json(const RoutingFailure& f);
/// Reads either form back; a record with `"error"` is a failure.
RouteResult route_result_from_json(const Json& j);

}  // namespace vcap
