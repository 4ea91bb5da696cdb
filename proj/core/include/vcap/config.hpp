#pragma once

#include "vcap/agents.hpp"
#include "vcap/client.hpp"
#include "vcap/engine.hpp"
#include "vcap/media.hpp"
#include "vcap/workflow.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace vcap {

struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path run_dir;
  FilterPolicy filter;
  WorkflowTable workflows = WorkflowTable::builtin();
  RegistryOverrides agents;
  ProfileSet profiles;
  std::optional<std::filesystem::path> mock_fixture;
  std::size_t workers = 4;
  FailurePolicy policy = FailurePolicy::Strict;
  std::size_t agent_parallelism = 8;
  std::size_t video_frames = 8;
  std::uint64_t seed = 0;  // backoff jitter

  /// Throws Error(Config).
  void validate() const;
};

/// Looks up environment variables for `${NAME}` substitution; returns
/// nullopt for unset names.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

EnvLookup process_env();

/// INI document with sections [run], [filter], [profiles.<name>],
/// [agents.<name>] and [workflows.<Domain>]. `${NAME}` in any value expands
/// from the environment; relative paths resolve against `base_dir`.
/// Unknown sections or keys are errors. Throws Error(Config).
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                       const EnvLookup& env = process_env());
RunConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env());

/// Replaces `${NAME}` occurrences. Throws Error(Config) for unset variables.
std::string expand_env(const std::string& value, const EnvLookup& env);

}  // namespace vcap
