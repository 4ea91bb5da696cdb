#include "vcap/mock.hpp"

#include "vcap/error.hpp"

#include <algorithm>
#include <thread>

namespace vcap {

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos;) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Error fixture_error(const std::string& msg) {
  return Error(ErrorKind::Config, "mock fixture: " + msg);
}

}  // namespace

MockTransport::MockTransport() = default;

MockTransport::Entry MockTransport::parse_entry(const Json& j, const std::string& where) {
  if (!j.is_object()) throw fixture_error(where + " must be an object");
  Entry e;
  try {
    if (j.contains("text")) e.replies.push_back(j["text"].get<std::string>());
    if (j.contains("replies")) {
      for (const auto& r : j["replies"]) e.replies.push_back(r.get<std::string>());
    }
    e.input_tokens = j.value("input_tokens", e.input_tokens);
    e.output_tokens = j.value("output_tokens", e.output_tokens);
    e.latency = j.value("latency", e.latency);
    e.omit_usage = j.value("omit_usage", false);
    if (j.contains("faults")) {
      for (const auto& f : j["faults"]) {
        Fault fault;
        if (f.is_number_integer()) {
          fault.status = f.get<int>();
        } else if (f == "network") {
          fault.status = 0;
        } else if (f == "timeout") {
          fault.timeout = true;
        } else {
          throw fixture_error(where + ": unknown fault " + f.dump());
        }
        e.faults.push_back(fault);
      }
    }
  } catch (const Json::exception& ex) {
    throw fixture_error(where + ": " + ex.what());
  }
  if (e.input_tokens < 0 || e.output_tokens < 0) {
    throw fixture_error(where + ": negative token counts");
  }
  return e;
}

MockTransport::MockTransport(const Json& fixture) {
  if (!fixture.is_object()) throw fixture_error("top level must be an object");
  if (fixture.contains("agents")) {
    for (const auto& [name, entry] : fixture["agents"].items()) {
      agents_.emplace(name, parse_entry(entry, "agents." + name));
    }
  }
  if (fixture.contains("items")) {
    std::size_t idx = 0;
    for (const auto& entry : fixture["items"]) {
      std::string where = "items[" + std::to_string(idx++) + "]";
      if (!entry.is_object() || !entry.contains("agent") || !entry.contains("item")) {
        throw fixture_error(where + " needs 'agent' and 'item'");
      }
      auto key = std::make_pair(entry["agent"].get<std::string>(),
                                entry["item"].get<std::string>());
      if (!items_.emplace(key, parse_entry(entry, where)).second) {
        throw fixture_error(where + " repeats (" + key.first + ", " + key.second + ")");
      }
    }
  }
}

std::shared_ptr<MockTransport> MockTransport::from_file(const std::filesystem::path& path) {
  Json j = Json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw fixture_error(path.string() + " is not valid JSON");
  return std::make_shared<MockTransport>(j);
}

const MockTransport::Entry* MockTransport::lookup(const std::string& agent,
                                                  const std::string& item) const {
  if (auto it = items_.find({agent, item}); it != items_.end()) return &it->second;
  if (auto it = agents_.find(agent); it != agents_.end()) return &it->second;
  if (auto it = agents_.find("*"); it != agents_.end()) return &it->second;
  return nullptr;
}

std::string MockTransport::fallback_text(const std::string& agent, const std::string& item) {
  if (agent == "ImageQualityEval") {
    return R"({"factual_accuracy": 3, "completeness": 3, "reasoning_rigor": 3, )"
           R"("core_intent_capture": 3, "professionalism_expression": 3, "overall_score": 3, )"
           R"("issues": [], "explanation": "No issues found."})";
  }
  if (agent == "VideoQualityEval") {
    return R"({"temporal_factual_accuracy": 3, "event_detail_coverage": 3, )"
           R"("temporal_causal_logic": 3, "core_narrative_intent": 3, )"
           R"("coherence_formatting": 3, "overall_score": 3, "issues": [], )"
           R"("explanation": "No issues found."})";
  }
  if (agent == "DomainRouter") {
    return std::string(1, static_cast<char>('A' + fnv1a(item) % 8));
  }
  if (agent == "Reasoner") return "A";
  return agent + " output for " + item + ".";
}

TransportResponse MockTransport::post(const ModelProfile& profile,
                                      const RenderedRequest& request, const std::string&) {
  std::int64_t n;
  {
    std::lock_guard lock(mutex_);
    n = counts_[{request.agent, request.item_id}]++;
    int now = ++in_flight_[profile.name];
    int& peak = max_in_flight_[profile.name];
    peak = std::max(peak, now);
  }
  if (hold_.count() > 0) std::this_thread::sleep_for(hold_);

  static const Entry kDefault;
  const Entry* found = lookup(request.agent, request.item_id);
  const Entry& e = found ? *found : kDefault;

  TransportResponse resp;
  resp.latency = e.latency;
  if (static_cast<std::size_t>(n) < e.faults.size()) {
    const Fault& f = e.faults[static_cast<std::size_t>(n)];
    resp.status = f.timeout ? 0 : f.status;
    resp.timed_out = f.timeout;
    resp.error = f.timeout ? "simulated timeout" : "simulated fault";
    if (resp.status != 0) resp.body = R"({"error":{"message":"simulated fault"}})";
  } else {
    std::string text;
    if (e.replies.empty()) {
      text = fallback_text(request.agent, request.item_id);
    } else {
      std::size_t i = static_cast<std::size_t>(n) - e.faults.size();
      text = e.replies[std::min(i, e.replies.size() - 1)];
    }
    replace_all(text, "{item}", request.item_id);
    replace_all(text, "{agent}", request.agent);
    Json body;
    body["id"] = "mock-" + request.agent + "-" + request.item_id + "-" + std::to_string(n);
    body["object"] = "chat.completion";
    body["model"] = profile.model_id;
    body["choices"] = Json::array(
        {Json{{"index", 0},
              {"message", {{"role", "assistant"}, {"content", text}}},
              {"finish_reason", "stop"}}});
    if (!e.omit_usage) {
      body["usage"] = Json{{"prompt_tokens", e.input_tokens},
                           {"completion_tokens", e.output_tokens},
                           {"total_tokens", e.input_tokens + e.output_tokens}};
    }
    resp.status = 200;
    resp.body = body.dump();
  }

  std::lock_guard lock(mutex_);
  --in_flight_[profile.name];
  return resp;
}

std::int64_t MockTransport::calls(std::string_view agent, std::string_view item) const {
  std::lock_guard lock(mutex_);
  auto it = counts_.find({std::string(agent), std::string(item)});
  return it == counts_.end() ? 0 : it->second;
}

std::int64_t MockTransport::total_calls() const {
  std::lock_guard lock(mutex_);
  std::int64_t total = 0;
  for (const auto& [_, n] : counts_) total += n;
  return total;
}

std::map<std::pair<std::string, std::string>, std::int64_t> MockTransport::call_counts() const {
  std::lock_guard lock(mutex_);
  return counts_;
}

int MockTransport::max_in_flight(std::string_view profile) const {
  std::lock_guard lock(mutex_);
  auto it = max_in_flight_.find(profile);
  return it == max_in_flight_.end() ? 0 : it->second;
}

void MockTransport::reset_counters() {
  std::lock_guard lock(mutex_);
  counts_.clear();
  max_in_flight_.clear();
}

}  // namespace vcap
