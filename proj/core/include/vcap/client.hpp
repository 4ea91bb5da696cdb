#pragma once

#include "vcap/agents.hpp"
#include "vcap/json_io.hpp"
#include "vcap/money.hpp"

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace vcap {

struct ModelProfile {
  std::string name;
  std::string endpoint;  // base URL, e.g. https://host/v1
  std::string model_id;
  std::string api_key;
  Money price_in;   // per 1e6 input tokens
  Money price_out;  // per 1e6 output tokens
  int max_concurrency = 4;
  double timeout = 120.0;  // seconds
  int max_retries = 3;

  /// Throws Error(Config).
  void validate() const;
};

struct Usage {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  bool estimated = false;  // server omitted usage; counts are ceil(chars / 4)

  friend bool operator==(const Usage&, const Usage&) = default;
};

Json to_json(const Usage& usage);
Usage usage_from_json(const Json& j);
/// Adds counts; the sum is estimated if either part is.
Usage& operator+=(Usage& total, const Usage& part);

/// in * price_in / 1e6 + out * price_out / 1e6, rounded once, half-even, to
/// the Money resolution.
Money cost_of(const Usage& usage, const ModelProfile& profile);

/// ceil(code points / 4).
std::int64_t estimate_tokens(std::string_view text);

enum class OutputStatus { Ok, Failed };

struct AgentOutput {
  AgentName agent;
  std::string text;
  Usage usage;
  Money cost;
  OutputStatus status = OutputStatus::Ok;
  std::string failure_reason;
  int attempts = 1;
  double latency = 0.0;  // seconds, summed over attempts

  bool ok() const { return status == OutputStatus::Ok; }
  friend bool operator==(const AgentOutput&, const AgentOutput&) = default;
};

Json to_json(const AgentOutput& output);
AgentOutput agent_output_from_json(const Json& j);

/// Outcome of one HTTP exchange. status 0 means no response was received.
struct TransportResponse {
  int status = 0;
  std::string body;
  std::string error;
  bool timed_out = false;
  /// Transports that simulate time report it here; otherwise the client
  /// measures wall-clock time.
  std::optional<double> latency;
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// Must be safe to call concurrently.
  virtual TransportResponse post(const ModelProfile& profile,
                                 const RenderedRequest& request,
                                 const std::string& body) = 0;
  /// Whether local media files are read and inlined as base64 data URLs.
  virtual bool inline_local_media() const { return true; }
};

/// Chat-completions request body. Media parts become image_url parts; local
/// paths are inlined as data URLs when `inline_local_media` is set; sampled
/// video frames carry a `#t=<seconds>` fragment.
Json build_chat_request(const RenderedRequest& request, const ModelProfile& profile,
                        bool inline_local_media);

struct ChatReply {
  std::string text;
  std::optional<Usage> usage;
};

/// Throws Error(Protocol) when the body is not a chat-completions response.
ChatReply parse_chat_response(std::string_view body);

/// Network errors, timeouts, 429 and 5xx.
bool is_retryable(const TransportResponse& response);

/// Exponential backoff with full jitter: before retry k (1-based) the client
/// sleeps uniform(0, min(max_delay, base * factor^(k-1))).
struct RetryPolicy {
  double base = 1.0;
  double factor = 2.0;
  double max_delay = 60.0;
};

using Sleeper = std::function<void(double seconds)>;

/// Named profiles. Lookup falls back to the profile named "default".
class ProfileSet {
 public:
  void add(ModelProfile profile);
  const ModelProfile& resolve(std::string_view binding) const;
  const ModelProfile* find(std::string_view name) const;
  bool empty() const { return profiles_.empty(); }
  std::vector<std::string> names() const;

 private:
  std::map<std::string, ModelProfile, std::less<>> profiles_;
};

/// Shareable across threads. Each profile admits at most max_concurrency
/// in-flight requests.
class ChatClient {
 public:
  ChatClient(ProfileSet profiles, std::shared_ptr<Transport> transport,
             RetryPolicy retry = {}, Sleeper sleeper = {}, std::uint64_t seed = 0);
  ~ChatClient();

  ChatClient(const ChatClient&) = delete;
  ChatClient& operator=(const ChatClient&) = delete;

  /// Never throws for transport or protocol problems; those become a Failed
  /// output. Throws Error(Config) when no profile matches the binding.
  AgentOutput chat(const RenderedRequest& request);
  AgentOutput chat(const RenderedRequest& request, const ModelProfile& profile);

  const ProfileSet& profiles() const { return profiles_; }

 private:
  class Limiter;
  Limiter& limiter_for(const ModelProfile& profile);
  double next_delay(int retry);

  ProfileSet profiles_;
  std::shared_ptr<Transport> transport_;
  RetryPolicy retry_;
  Sleeper sleeper_;
  std::mutex mutex_;
  std::mt19937_64 rng_;
  std::map<std::string, std::unique_ptr<Limiter>, std::less<>> limiters_;
};

/// Real HTTP(S) transport.
class HttpTransport final : public Transport {
 public:
  TransportResponse post(const ModelProfile& profile, const RenderedRequest& request,
                         const std::string& body) override;
};

}  // namespace vcap
