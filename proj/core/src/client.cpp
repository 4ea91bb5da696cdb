#include "vcap/client.hpp"

#include "vcap/digest.hpp"
#include "vcap/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

namespace vcap {

void ModelProfile::validate() const {
  auto fail = [&](const std::string& msg) {
    return Error(ErrorKind::Config, "profile '" + name + "': " + msg);
  };
  if (name.empty()) throw Error(ErrorKind::Config, "profile without a name");
  if (price_in < Money{} || price_out < Money{}) throw fail("prices must be non-negative");
  if (max_concurrency < 1) throw fail("max_concurrency must be at least 1");
  if (max_retries < 0) throw fail("max_retries must be non-negative");
  if (!(timeout > 0)) throw fail("timeout must be positive");
}

Money cost_of(const Usage& usage, const ModelProfile& profile) {
  Int128 num = Int128(usage.input_tokens) * profile.price_in.units() +
               Int128(usage.output_tokens) * profile.price_out.units();
  return Money::from_ratio(num, 1'000'000);
}

std::int64_t estimate_tokens(std::string_view text) {
  std::int64_t cps = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++cps;
  }
  return (cps + 3) / 4;
}

Json to_json(const Usage& u) {
  return Json{{"input_tokens", u.input_tokens},
              {"output_tokens", u.output_tokens},
              {"estimated", u.estimated}};
}

Usage usage_from_json(const Json& j) {
  return Usage{j.at("input_tokens").get<std::int64_t>(),
               j.at("output_tokens").get<std::int64_t>(), j.value("estimated", false)};
}

Usage& operator+=(Usage& total, const Usage& part) {
  total.input_tokens += part.input_tokens;
  total.output_tokens += part.output_tokens;
  total.estimated = total.estimated || part.estimated;
  return total;
}

Json to_json(const AgentOutput& o) {
  Json j;
  j["agent"] = o.agent;
  j["status"] = o.ok() ? "ok" : "failed";
  if (!o.ok()) j["failure_reason"] = o.failure_reason;
  j["text"] = o.text;
  j["usage"] = to_json(o.usage);
  j["cost"] = o.cost.to_string();
  j["attempts"] = o.attempts;
  j["latency"] = o.latency;
  return j;
}

AgentOutput agent_output_from_json(const Json& j) {
  try {
    AgentOutput o;
    o.agent = j.at("agent").get<std::string>();
    o.status = j.at("status").get<std::string>() == "ok" ? OutputStatus::Ok
                                                         : OutputStatus::Failed;
    if (j.contains("failure_reason")) o.failure_reason = j["failure_reason"].get<std::string>();
    o.text = j.at("text").get<std::string>();
    o.usage = usage_from_json(j.at("usage"));
    o.cost = Money::parse(j.at("cost").get<std::string>());
    o.attempts = j.at("attempts").get<int>();
    o.latency = j.at("latency").get<double>();
    return o;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Manifest, std::string("malformed agent output: ") + e.what());
  }
}

namespace {

bool is_local(std::string_view uri) {
  return uri.rfind("file://", 0) == 0 || uri.find("://") == std::string_view::npos;
}

std::string mime_type(std::string_view uri) {
  std::string ext;
  if (auto dot = uri.rfind('.'); dot != std::string_view::npos) {
    for (char c : uri.substr(dot + 1)) ext += static_cast<char>(std::tolower(c));
  }
  if (ext == "png") return "image/png";
  if (ext == "jpg" || ext == "jpeg") return "image/jpeg";
  if (ext == "gif") return "image/gif";
  if (ext == "webp") return "image/webp";
  if (ext == "bmp") return "image/bmp";
  if (ext == "mp4") return "video/mp4";
  if (ext == "webm") return "video/webm";
  return "application/octet-stream";
}

std::string media_url(const MediaRef& ref, bool inline_local) {
  std::string url = ref.uri;
  if (inline_local && is_local(ref.uri)) {
    std::string path = ref.uri.rfind("file://", 0) == 0 ? ref.uri.substr(7) : ref.uri;
    url = "data:" + mime_type(path) + ";base64," + base64_encode(read_file(path));
  }
  if (ref.timestamp) {
    std::ostringstream t;
    t << "#t=" << *ref.timestamp;
    url += t.str();
  }
  return url;
}

}  // namespace

Json build_chat_request(const RenderedRequest& request, const ModelProfile& profile,
                        bool inline_local_media) {
  Json messages = Json::array();
  for (const auto& m : request.messages) {
    Json msg;
    msg["role"] = m.role == Role::System ? "system" : "user";
    bool all_text = std::none_of(m.parts.begin(), m.parts.end(),
                                 [](const ContentPart& p) { return p.is_media(); });
    if (all_text) {
      std::string text;
      for (const auto& p : m.parts) {
        if (!text.empty()) text += "\n\n";
        text += p.text;
      }
      msg["content"] = text;
    } else {
      Json parts = Json::array();
      for (const auto& p : m.parts) {
        if (p.media) {
          parts.push_back(Json{{"type", "image_url"},
                               {"image_url", {{"url", media_url(*p.media, inline_local_media)}}}});
        } else {
          parts.push_back(Json{{"type", "text"}, {"text", p.text}});
        }
      }
      msg["content"] = parts;
    }
    messages.push_back(std::move(msg));
  }
  Json body;
  body["model"] = profile.model_id;
  body["messages"] = messages;
  body["max_tokens"] = request.max_output_tokens;
  return body;
}

ChatReply parse_chat_response(std::string_view body) {
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorKind::Protocol, "response is not a JSON object");
  }
  ChatReply reply;
  try {
    const Json& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_string()) {
      reply.text = content.get<std::string>();
    } else if (content.is_array()) {
      for (const auto& part : content) {
        if (part.value("type", "") == "text") reply.text += part.value("text", "");
      }
    } else if (!content.is_null()) {
      throw Error(ErrorKind::Protocol, "unexpected message content type");
    }
    if (j.contains("usage") && j["usage"].is_object()) {
      const Json& u = j["usage"];
      if (u.contains("prompt_tokens") && u.contains("completion_tokens")) {
        Usage usage;
        usage.input_tokens = u["prompt_tokens"].get<std::int64_t>();
        usage.output_tokens = u["completion_tokens"].get<std::int64_t>();
        if (usage.input_tokens < 0 || usage.output_tokens < 0) {
          throw Error(ErrorKind::Protocol, "negative token counts");
        }
        reply.usage = usage;
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Protocol, std::string("malformed chat response: ") + e.what());
  }
  return reply;
}

bool is_retryable(const TransportResponse& r) {
  return r.status == 0 || r.timed_out || r.status == 429 || (r.status >= 500 && r.status < 600);
}

void ProfileSet::add(ModelProfile profile) {
  profile.validate();
  std::string name = profile.name;
  profiles_.insert_or_assign(std::move(name), std::move(profile));
}

const ModelProfile* ProfileSet::find(std::string_view name) const {
  auto it = profiles_.find(name);
  return it == profiles_.end() ? nullptr : &it->second;
}

const ModelProfile& ProfileSet::resolve(std::string_view binding) const {
  if (const auto* p = find(binding)) return *p;
  if (const auto* p = find("default")) return *p;
  throw Error(ErrorKind::Config,
              "no model profile named '" + std::string(binding) + "' and no 'default' profile");
}

std::vector<std::string> ProfileSet::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : profiles_) out.push_back(name);
  return out;
}

class ChatClient::Limiter {
 public:
  explicit Limiter(int capacity) : free_(capacity) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return free_ > 0; });
    --free_;
  }
  void release() {
    {
      std::lock_guard lock(mutex_);
      ++free_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int free_;
};

ChatClient::ChatClient(ProfileSet profiles, std::shared_ptr<Transport> transport,
                       RetryPolicy retry, Sleeper sleeper, std::uint64_t seed)
    : profiles_(std::move(profiles)),
      transport_(std::move(transport)),
      retry_(retry),
      sleeper_(std::move(sleeper)),
      rng_(seed) {
  if (!transport_) throw Error(ErrorKind::Config, "chat client needs a transport");
  if (!sleeper_) {
    sleeper_ = [](double s) {
      std::this_thread::sleep_for(std::chrono::duration<double>(s));
    };
  }
}

ChatClient::~ChatClient() = default;

ChatClient::Limiter& ChatClient::limiter_for(const ModelProfile& profile) {
  std::lock_guard lock(mutex_);
  auto& slot = limiters_[profile.name];
  if (!slot) slot = std::make_unique<Limiter>(profile.max_concurrency);
  return *slot;
}

double ChatClient::next_delay(int retry) {
  double cap = std::min(retry_.max_delay, retry_.base * std::pow(retry_.factor, retry - 1));
  std::lock_guard lock(mutex_);
  return std::uniform_real_distribution<double>(0.0, cap)(rng_);
}

AgentOutput ChatClient::chat(const RenderedRequest& request) {
  return chat(request, profiles_.resolve(request.model_binding));
}

AgentOutput ChatClient::chat(const RenderedRequest& request, const ModelProfile& profile) {
  AgentOutput out;
  out.agent = request.agent;
  out.attempts = 0;

  std::string body;
  try {
    body = dump_line(build_chat_request(request, profile, transport_->inline_local_media()));
  } catch (const Error& e) {
    out.status = OutputStatus::Failed;
    out.failure_reason = e.what();
    return out;
  }

  Limiter& limiter = limiter_for(profile);
  const int max_attempts = profile.max_retries + 1;
  std::string last_error;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1) sleeper_(next_delay(attempt - 1));
    out.attempts = attempt;

    limiter.acquire();
    auto started = std::chrono::steady_clock::now();
    TransportResponse resp;
    try {
      resp = transport_->post(profile, request, body);
    } catch (const std::exception& e) {
      resp.status = 0;
      resp.error = e.what();
    }
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started);
    limiter.release();
    out.latency += resp.latency.value_or(elapsed.count());

    if (resp.status == 200) {
      try {
        ChatReply reply = parse_chat_response(resp.body);
        if (reply.text.empty()) throw Error(ErrorKind::Protocol, "empty completion");
        out.text = std::move(reply.text);
        if (reply.usage) {
          out.usage = *reply.usage;
        } else {
          std::string prompt;
          for (const auto& m : request.messages) {
            for (const auto& p : m.parts) prompt += p.text;
          }
          out.usage = {estimate_tokens(prompt), estimate_tokens(out.text), true};
        }
        out.cost = cost_of(out.usage, profile);
        out.status = OutputStatus::Ok;
        return out;
      } catch (const Error& e) {
        out.status = OutputStatus::Failed;
        out.failure_reason = e.what();
        return out;
      }
    }

    if (resp.timed_out) {
      last_error = "timeout";
    } else if (resp.status == 0) {
      last_error = "network error" + (resp.error.empty() ? "" : ": " + resp.error);
    } else {
      last_error = "HTTP " + std::to_string(resp.status);
    }
    if (!is_retryable(resp)) break;
  }
  out.status = OutputStatus::Failed;
  out.failure_reason = out.attempts > 1 && out.attempts == max_attempts
                           ? last_error + " after " + std::to_string(out.attempts) + " attempts"
                           : last_error;
  return out;
}

}  // namespace vcap
