#include "vcap/config.hpp"
#include "vcap/dataset_stats.hpp"
#include "vcap/error.hpp"
#include "vcap/eval.hpp"
#include "vcap/mock.hpp"
#include "vcap/pipeline.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace {

struct Globals {
  std::string config;
  std::string run_dir;
  std::string manifest;
  std::string mock;
  std::string policy;
  std::size_t workers = 0;
  bool resume = false;
  bool json = false;
};

vcap::RunConfig build_config(const Globals& g) {
  vcap::RunConfig cfg;
  if (!g.config.empty()) cfg = vcap::load_config(g.config);
  if (!g.run_dir.empty()) cfg.run_dir = g.run_dir;
  if (!g.manifest.empty()) cfg.manifest = g.manifest;
  if (!g.mock.empty()) cfg.mock_fixture = g.mock;
  if (g.workers > 0) cfg.workers = g.workers;
  if (!g.policy.empty()) {
    auto p = vcap::parse_failure_policy(g.policy);
    if (!p) throw vcap::Error(vcap::ErrorKind::Config, "--policy must be strict or best-effort");
    cfg.policy = *p;
  }
  cfg.validate();
  return cfg;
}

std::shared_ptr<vcap::Transport> make_transport(const vcap::RunConfig& cfg) {
  if (cfg.mock_fixture) return vcap::MockTransport::from_file(*cfg.mock_fixture);
  if (cfg.profiles.empty()) {
    throw vcap::Error(vcap::ErrorKind::Config,
                      "no model profiles configured; add [profiles.<name>] sections or use --mock");
  }
  return std::make_shared<vcap::HttpTransport>();
}

vcap::Sleeper make_sleeper(const vcap::RunConfig& cfg) {
  // Simulated latency only; the mock never needs real backoff.
  if (cfg.mock_fixture) return [](double) {};
  return {};
}

void print(const Globals& g, const vcap::Json& j, const std::string& text) {
  if (g.json) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << text;
  }
}

int run_stages(const Globals& g, std::vector<vcap::Stage> stages, bool resume) {
  vcap::RunConfig cfg = build_config(g);
  vcap::Pipeline pipeline(cfg, make_transport(cfg), make_sleeper(cfg));
  vcap::RunOptions options;
  options.stages = std::move(stages);
  options.resume = resume;
  options.hooks.after_stage = [](vcap::Stage s) {
    std::cerr << "vcap: stage " << vcap::to_string(s) << " done\n";
    return true;
  };
  auto started = std::chrono::steady_clock::now();
  vcap::RunSummary summary = pipeline.run(options);
  std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
  std::cerr << "vcap: finished in " << elapsed.count() << " s\n";
  print(g, vcap::to_json(summary), vcap::to_text(summary));
  return summary.item_errors() > 0 ? 2 : 0;
}

std::filesystem::path require_run_dir(const Globals& g) {
  vcap::RunConfig cfg;
  if (!g.config.empty()) cfg = vcap::load_config(g.config);
  if (!g.run_dir.empty()) cfg.run_dir = g.run_dir;
  if (cfg.run_dir.empty()) throw vcap::Error(vcap::ErrorKind::Config, "--run-dir is required");
  return cfg.run_dir;
}

std::vector<vcap::QualitySample> load_quality_samples(const std::string& path) {
  std::vector<vcap::QualitySample> out;
  for (const auto& [line, j] : vcap::read_jsonl(path)) {
    try {
      vcap::QualitySample s;
      s.item = vcap::media_item_from_json(j.at("item"));
      if (j.contains("caption")) {
        s.caption = j["caption"].get<std::string>();
      } else {
        s.caption = j.at("record").at("caption").get<std::string>();
      }
      std::optional<std::string> domain;
      if (j.contains("domain")) domain = j["domain"].get<std::string>();
      if (!domain && j.contains("record")) domain = j["record"].at("domain").get<std::string>();
      if (domain) {
        s.domain = vcap::parse_domain(*domain);
        if (!s.domain) throw vcap::LineError(vcap::ErrorKind::Manifest, line, "unknown domain");
      }
      out.push_back(std::move(s));
    } catch (const vcap::Json::exception& e) {
      throw vcap::LineError(vcap::ErrorKind::Manifest, line, e.what());
    } catch (const vcap::LineError&) {
      throw;
    } catch (const vcap::Error& e) {
      throw vcap::LineError(vcap::ErrorKind::Manifest, line, e.what());
    }
  }
  return out;
}

struct EvalEnv {
  vcap::RunConfig cfg;
  vcap::AgentRegistry registry;
  std::unique_ptr<vcap::ChatClient> client;
};

EvalEnv make_eval_env(const Globals& g) {
  EvalEnv env;
  env.cfg = build_config(g);
  env.registry = vcap::AgentRegistry::load(env.cfg.agents);
  env.client = std::make_unique<vcap::ChatClient>(vcap::profiles_for(env.cfg),
                                                  make_transport(env.cfg), vcap::RetryPolicy{},
                                                  make_sleeper(env.cfg), env.cfg.seed);
  return env;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent caption synthesis and curation pipeline"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--run-dir", g.run_dir, "Run directory");
  app.add_option("--manifest", g.manifest, "Line-delimited media manifest");
  app.add_option("--workers", g.workers, "Items processed concurrently")
      ->check(CLI::PositiveNumber);
  app.add_option("--mock", g.mock, "Serve model calls from a mock fixture")
      ->check(CLI::ExistingFile);
  app.add_option("--policy", g.policy, "Caption failure policy")
      ->check(CLI::IsMember({"strict", "best-effort"}));
  app.add_flag("--resume", g.resume, "Continue an existing run directory");
  app.add_flag("--json", g.json, "Print reports as JSON");
  app.fallthrough();

  std::function<int()> action;
  auto stage_cmd = [&](const char* name, vcap::Stage stage, const char* help) {
    app.add_subcommand(name, help)->callback([&, stage] {
      action = [&, stage] { return run_stages(g, {stage}, true); };
    });
  };
  stage_cmd("filter", vcap::Stage::Filter, "Apply the resolution filter");
  stage_cmd("route", vcap::Stage::Route, "Assign visual domains");
  stage_cmd("caption", vcap::Stage::Caption, "Run the captioning workflows");
  stage_cmd("judge", vcap::Stage::Judge, "Score captions with the rubric judge");
  stage_cmd("gate", vcap::Stage::Gate, "Split judged captions into kept, dropped, quarantined");

  app.add_subcommand("run", "Run every stage")->callback([&] {
    action = [&] {
      return run_stages(g, {std::begin(vcap::kAllStages), std::end(vcap::kAllStages)}, g.resume);
    };
  });

  std::string kept_path;
  auto* stats = app.add_subcommand("stats", "Caption length statistics of a kept dataset");
  stats->add_option("--kept", kept_path, "Gate output file (default: <run-dir>/kept.jsonl)");
  stats->callback([&] {
    action = [&] {
      std::filesystem::path p = kept_path;
      if (p.empty()) p = require_run_dir(g) / vcap::run_files::kKept;
      auto samples = vcap::load_gate_samples(p);
      vcap::DatasetStats s = vcap::dataset_stats(samples);
      print(g, vcap::to_json(s), vcap::to_text(s));
      return 0;
    };
  });

  app.add_subcommand("cost", "Cost report of a run directory")->callback([&] {
    action = [&] {
      auto entries = vcap::cost_entries(require_run_dir(g));
      vcap::CostReport r = vcap::report_cost(entries);
      print(g, vcap::to_json(r), vcap::to_text(r));
      return 0;
    };
  });

  std::string captions_path;
  auto* eq = app.add_subcommand("eval-quality", "Rubric-based caption quality evaluation");
  eq->add_option("--captions", captions_path, "Lines of {item, caption, domain?}")
      ->required()
      ->check(CLI::ExistingFile);
  eq->callback([&] {
    action = [&] {
      EvalEnv env = make_eval_env(g);
      auto samples = load_quality_samples(captions_path);
      vcap::QualityReport r = vcap::quality_eval(samples, env.registry, *env.client,
                                                 env.cfg.workers, env.cfg.video_frames);
      print(g, vcap::to_json(r), vcap::to_text(r));
      return r.all_failed ? 2 : 0;
    };
  });

  std::string instances_path;
  std::string reasoning_captions;
  auto* er = app.add_subcommand("eval-reasoning", "Answer questions from captions alone");
  er->add_option("--instances", instances_path, "Lines of {id, item, question, options?, gold}")
      ->required()
      ->check(CLI::ExistingFile);
  er->add_option("--captions", reasoning_captions, "Lines of {item, caption} or gate output")
      ->required()
      ->check(CLI::ExistingFile);
  er->callback([&] {
    action = [&] {
      EvalEnv env = make_eval_env(g);
      auto instances = vcap::load_qa_instances(instances_path);
      std::map<std::string, std::string, std::less<>> captions;
      for (auto& s : load_quality_samples(reasoning_captions)) {
        captions.emplace(s.item.id, std::move(s.caption));
      }
      vcap::ReasoningReport r =
          vcap::reasoning_eval(instances, captions, env.registry, *env.client, env.cfg.workers);
      print(g, vcap::to_json(r), vcap::to_text(r));
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  try {
    return action ? action() : 1;
  } catch (const std::exception& e) {
    std::cerr << "vcap: error: " << e.what() << "\n";
    return 1;
  }
}
