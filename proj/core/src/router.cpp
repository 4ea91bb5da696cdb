#include "vcap/router.hpp"

#include "vcap/error.hpp"

#include <cctype>

namespace vcap {

namespace {

constexpr VisualDomain kImageDomains[] = {
    VisualDomain::Natural,           VisualDomain::StructureMath,
    VisualDomain::InfographicDocument, VisualDomain::MedicalBioImaging,
    VisualDomain::UiInteraction,     VisualDomain::CodeProgramming,
    VisualDomain::KnowledgeEducation, VisualDomain::Synthetic,
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<VisualDomain> from_letter(char c) {
  if (c < 'A' || c > 'H') return std::nullopt;
  return kImageDomains[c - 'A'];
}

}  // namespace

std::string_view to_string(RoutingMethod m) {
  return m == RoutingMethod::Bypass ? "bypass" : "classified";
}

char router_letter(VisualDomain domain) {
  for (std::size_t i = 0; i < std::size(kImageDomains); ++i) {
    if (kImageDomains[i] == domain) return static_cast<char>('A' + i);
  }
  throw Error(ErrorKind::Precondition, "domain has no router option");
}

std::optional<VisualDomain> parse_router_reply(std::string_view reply) {
  std::string_view s = trim(reply);
  if (s.empty()) return std::nullopt;
  if (s.size() == 1) return from_letter(s[0]);
  if (s[1] == ')' || s[1] == '.') return from_letter(s[0]);
  auto d = parse_domain(s);
  if (d && *d != VisualDomain::VideoTemporal) return d;
  return std::nullopt;
}

RouteResult route(const MediaItem& item, const AgentRegistry& registry, ChatClient& client) {
  if (item.known_domain) {
    if (!domain_allowed_for(*item.known_domain, item.kind)) {
      throw Error(ErrorKind::Precondition, "item '" + item.id + "': known domain " +
                                               std::string(to_string(*item.known_domain)) +
                                               " is illegal for " +
                                               std::string(to_string(item.kind)));
    }
    return RoutingDecision{item.id, *item.known_domain, RoutingMethod::Bypass, {}, 0, {}, {}};
  }
  if (item.kind == MediaKind::Video) {
    return RoutingDecision{item.id, VisualDomain::VideoTemporal, RoutingMethod::Bypass, {}, 0,
                           {}, {}};
  }

  const AgentSpec& agent = registry.get(kRouterAgent);
  RoutingFailure failure{item.id, "", 0, {}, {}, {}};
  for (int attempt = 1; attempt <= kRouterAttempts; ++attempt) {
    RenderContext ctx;
    if (attempt > 1) ctx["extra"] = std::string(kLetterReminder);
    AgentOutput out = client.chat(render(agent, item, ctx));
    failure.attempts = attempt;
    failure.usage += out.usage;
    failure.cost += out.cost;
    if (!out.ok()) {
      failure.reason = "router call failed: " + out.failure_reason;
      return failure;
    }
    failure.responses.push_back(out.text);
    if (auto domain = parse_router_reply(out.text)) {
      return RoutingDecision{item.id,       *domain,       RoutingMethod::Classified,
                             out.text,      attempt,       failure.usage,
                             failure.cost};
    }
  }
  failure.reason = "unroutable after " + std::to_string(kRouterAttempts) + " attempts";
  return failure;
}

Json to_json(const RoutingDecision& d) {
  Json j;
  j["item_id"] = d.item_id;
  j["domain"] = to_string(d.domain);
  j["method"] = to_string(d.method);
  if (d.raw_response) j["raw_response"] = *d.raw_response;
  j["attempts"] = d.attempts;
  j["usage"] = to_json(d.usage);
  j["cost"] = d.cost.to_string();
  return j;
}

Json to_json(const RoutingFailure& f) {
  Json j;
  j["item_id"] = f.item_id;
  j["error"] = f.reason;
  j["attempts"] = f.attempts;
  j["responses"] = f.responses;
  j["usage"] = to_json(f.usage);
  j["cost"] = f.cost.to_string();
  return j;
}

RouteResult route_result_from_json(const Json& j) {
  try {
    if (j.contains("error")) {
      RoutingFailure f;
      f.item_id = j.at("item_id").get<std::string>();
      f.reason = j["error"].get<std::string>();
      f.attempts = j.at("attempts").get<int>();
      f.responses = j.at("responses").get<std::vector<std::string>>();
      f.usage = usage_from_json(j.at("usage"));
      f.cost = Money::parse(j.at("cost").get<std::string>());
      return f;
    }
    RoutingDecision d;
    d.item_id = j.at("item_id").get<std::string>();
    auto domain = parse_domain(j.at("domain").get<std::string>());
    if (!domain) throw Error(ErrorKind::Manifest, "unknown domain in routing record");
    d.domain = *domain;
    d.method = j.at("method").get<std::string>() == "bypass" ? RoutingMethod::Bypass
                                                             : RoutingMethod::Classified;
    if (j.contains("raw_response")) d.raw_response = j["raw_response"].get<std::string>();
    d.attempts = j.at("attempts").get<int>();
    d.usage = usage_from_json(j.at("usage"));
    d.cost = Money::parse(j.at("cost").get<std::string>());
    return d;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Manifest, std::string("malformed routing record: ") + e.what());
  }
}

}  // namespace vcap
