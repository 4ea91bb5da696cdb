#pragma once

#include "vcap/agents.hpp"
#include "vcap/client.hpp"
#include "vcap/config.hpp"
#include "vcap/dataset_stats.hpp"
#include "vcap/gate.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace vcap {

enum class Stage { Filter, Route, Caption, Judge, Gate };

inline constexpr Stage kAllStages[] = {Stage::Filter, Stage::Route, Stage::Caption, Stage::Judge,
                                       Stage::Gate};

std::string_view to_string(Stage stage);

/// File names inside a run directory.
namespace run_files {
inline constexpr std::string_view kRun = "run.json";
inline constexpr std::string_view kLock = "run.lock";
inline constexpr std::string_view kFiltered = "filtered.jsonl";
inline constexpr std::string_view kRouting = "routing.jsonl";
inline constexpr std::string_view kCaptions = "captions.jsonl";
inline constexpr std::string_view kScores = "scores.jsonl";
inline constexpr std::string_view kKept = "kept.jsonl";
inline constexpr std::string_view kDropped = "dropped.jsonl";
inline constexpr std::string_view kQuarantine = "quarantine.jsonl";
inline constexpr std::string_view kGateStats = "gate_stats.json";
inline constexpr std::string_view kRejects = "rejects.jsonl";
inline constexpr std::string_view kSummary = "summary.json";
}  // namespace run_files

struct RunHooks {
  /// Called after each checkpoint record is durably appended. Returning
  /// false stops the run there, as if the process had been killed.
  std::function<bool(Stage, std::size_t records_in_stage)> after_record;
  /// Called after a stage is marked done; false stops the run.
  std::function<bool(Stage)> after_stage;
};

struct RunOptions {
  std::vector<Stage> stages{std::begin(kAllStages), std::end(kAllStages)};
  /// Required to re-enter a run directory that already holds a run.
  bool resume = false;
  RunHooks hooks;
};

struct RunSummary {
  std::size_t manifest_items = 0;
  std::size_t filter_accepted = 0;
  std::size_t filter_rejected = 0;
  std::size_t routed = 0;
  std::size_t routing_failed = 0;
  std::size_t captions_complete = 0;
  std::size_t captions_partial = 0;
  std::size_t captions_failed = 0;
  std::size_t judged = 0;
  std::size_t kept = 0;
  std::size_t dropped = 0;
  std::size_t quarantined = 0;
  std::optional<double> yield;
  Money total_cost;
  std::optional<Money> cost_per_kept;
  bool interrupted = false;
  std::vector<Stage> completed_stages;

  /// Routing failures, failed captions and quarantined judgements.
  std::size_t item_errors() const { return routing_failed + captions_failed + quarantined; }
};

Json to_json(const RunSummary& summary);
std::string to_text(const RunSummary& summary);

/// Orchestrates one run directory. Stages execute in order, each as a
/// checkpointed, append-only pass over the previous stage's survivors;
/// records are written in manifest order whatever the worker count, so
/// output files are byte-identical across worker counts and resumptions.
class Pipeline {
 public:
  Pipeline(RunConfig config, std::shared_ptr<Transport> transport, Sleeper sleeper = {});
  ~Pipeline();

  /// Throws Error(Config|Io|Manifest) for fatal problems; item-level
  /// failures are recorded and counted.
  RunSummary run(const RunOptions& options = {});

  const RunConfig& config() const { return config_; }
  const AgentRegistry& registry() const { return registry_; }
  ChatClient& client() { return *client_; }

 private:
  struct State;

  void prepare(const RunOptions& options);
  bool run_filter(State& st, const RunOptions& options);
  bool run_route(State& st, const RunOptions& options);
  bool run_caption(State& st, const RunOptions& options);
  bool run_judge(State& st, const RunOptions& options);
  void run_gate(State& st);
  RunSummary summarize(State& st);

  RunConfig config_;
  AgentRegistry registry_;
  std::unique_ptr<ChatClient> client_;
};

/// Fingerprint of everything that determines a run's outputs (manifest
/// digest, filter, policy, workflows, agent templates, profiles without
/// credentials). Worker counts are excluded.
Json run_fingerprint(const RunConfig& config, const AgentRegistry& registry);

/// Every cost-bearing record in a run directory.
std::vector<CostEntry> cost_entries(const std::filesystem::path& run_dir);

/// Captions of kept.jsonl (or any file of gate output lines).
std::vector<CaptionSample> load_gate_samples(const std::filesystem::path& path);

/// The registry and profile setup shared by the CLI and tests: a mock
/// fixture with no configured profiles gets a zero-priced "default" profile.
ProfileSet profiles_for(const RunConfig& config);

}  // namespace vcap
