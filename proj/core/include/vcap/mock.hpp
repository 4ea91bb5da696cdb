#pragma once

#include "vcap/client.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace vcap {

/// Deterministic offline backend. A fixture maps (agent, item) to canned
/// replies and an optional fault script:
///
///   {"agents": {"Ocr": {"text": "...", "input_tokens": 100, ...}, "*": {...}},
///    "items":  [{"agent": "Ocr", "item": "i1", "replies": ["..."],
///                "faults": [500, "network", "timeout", 401]}]}
///
/// Call n (0-based) for a key returns fault n while faults remain, then reply
/// n - |faults| (the last reply repeats). `{item}` and `{agent}` in reply
/// text are substituted. Unmapped keys get a built-in reply: an all-3 rating
/// object for the quality judges, a letter derived from the item id for the
/// domain router, "A" for the reasoner, and "<agent> output for <item>."
/// otherwise, with usage (100, 50).
class MockTransport final : public Transport {
 public:
  MockTransport();
  explicit MockTransport(const Json& fixture);
  static std::shared_ptr<MockTransport> from_file(const std::filesystem::path& path);

  TransportResponse post(const ModelProfile& profile, const RenderedRequest& request,
                         const std::string& body) override;
  bool inline_local_media() const override { return false; }

  /// Keeps every call in flight for this long (wall clock), so concurrency
  /// limits become observable.
  void set_hold(std::chrono::microseconds hold) { hold_ = hold; }

  std::int64_t calls(std::string_view agent, std::string_view item) const;
  std::int64_t total_calls() const;
  std::map<std::pair<std::string, std::string>, std::int64_t> call_counts() const;
  /// Highest number of simultaneous calls observed for a profile.
  int max_in_flight(std::string_view profile) const;
  void reset_counters();

 private:
  struct Fault {
    int status = 0;  // 0: network error
    bool timeout = false;
  };
  struct Entry {
    std::vector<std::string> replies;
    std::vector<Fault> faults;
    std::int64_t input_tokens = 100;
    std::int64_t output_tokens = 50;
    double latency = 0.5;
    bool omit_usage = false;
  };

  static Entry parse_entry(const Json& j, const std::string& where);
  const Entry* lookup(const std::string& agent, const std::string& item) const;
  static std::string fallback_text(const std::string& agent, const std::string& item);

  std::map<std::pair<std::string, std::string>, Entry> items_;
  std::map<std::string, Entry, std::less<>> agents_;
  std::chrono::microseconds hold_{0};

  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, std::int64_t> counts_;
  std::map<std::string, int, std::less<>> in_flight_;
  std::map<std::string, int, std::less<>> max_in_flight_;
};

}  // namespace vcap
