#include "vcap/pipeline.hpp"

#include "vcap/digest.hpp"
#include "vcap/engine.hpp"
#include "vcap/error.hpp"
#include "vcap/executor.hpp"
#include "vcap/router.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>

namespace vcap {

namespace fs = std::filesystem;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Filter: return "filter";
    case Stage::Route: return "route";
    case Stage::Caption: return "caption";
    case Stage::Judge: return "judge";
    case Stage::Gate: return "gate";
  }
  return "?";
}

namespace {

Error config_error(const std::string& msg) { return Error(ErrorKind::Config, msg); }

class DirLock {
 public:
  explicit DirLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorKind::Io, "cannot create lock file " + path.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw config_error("run directory " + path.parent_path().string() +
                         " is in use by another run");
    }
  }
  ~DirLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  int fd_ = -1;
};

struct FilterRecord {
  std::string item_id;
  FilterVerdict verdict;
};

Json to_json(const FilterRecord& r) {
  Json j{{"item_id", r.item_id}, {"accepted", r.verdict.accepted()}};
  if (r.verdict.reason) j["reason"] = to_string(*r.verdict.reason);
  return j;
}

FilterRecord filter_record_from_json(const Json& j) {
  FilterRecord r;
  try {
    r.item_id = j.at("item_id").get<std::string>();
    if (!j.at("accepted").get<bool>()) {
      r.verdict.reason = parse_reject_reason(j.at("reason").get<std::string>());
      if (!r.verdict.reason) throw Error(ErrorKind::Manifest, "unknown reject reason");
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Manifest, std::string("malformed filter record: ") + e.what());
  }
  return r;
}

std::string item_id_of(const Json& record, const fs::path& file) {
  if (!record.contains("item_id") || !record["item_id"].is_string()) {
    throw Error(ErrorKind::Manifest, file.string() + ": record without item_id");
  }
  return record["item_id"].get<std::string>();
}

/// One checkpointed stage: loads what is already on disk, computes the
/// missing records in input order and appends them through a single writer.
template <class R>
struct StageRunner {
  Stage stage;
  fs::path file;
  std::function<Json(const R&)> encode;
  std::function<R(const Json&)> decode;

  /// Returns whether the checkpoint is done.
  bool load(std::map<std::string, R>& results, const std::set<std::string>* allowed) const {
    Checkpoint cp = load_checkpoint(file);
    for (const auto& rec : cp.records) {
      std::string id = item_id_of(rec, file);
      if (allowed && !allowed->count(id)) {
        throw Error(ErrorKind::Manifest, file.string() + ": unexpected item '" + id + "'");
      }
      if (!results.emplace(id, decode(rec)).second) {
        throw Error(ErrorKind::Manifest, file.string() + ": duplicate item '" + id + "'");
      }
    }
    return cp.done;
  }

  bool execute(const std::vector<std::string>& inputs, std::map<std::string, R>& results,
               std::size_t workers, const std::function<R(const std::string&)>& compute,
               const RunHooks& hooks) const {
    std::set<std::string> allowed(inputs.begin(), inputs.end());
    results.clear();
    if (load(results, &allowed)) return true;

    std::vector<std::string> pending;
    for (const auto& id : inputs) {
      if (!results.count(id)) pending.push_back(id);
    }
    JsonlAppender out(file);
    std::size_t written = results.size();
    bool stopped = false;
    ordered_map<R>(
        pending.size(), workers, [&](std::size_t i) { return compute(pending[i]); },
        [&](std::size_t i, R&& r) {
          out.append(encode(r));
          results.emplace(pending[i], std::move(r));
          ++written;
          if (hooks.after_record && !hooks.after_record(stage, written)) {
            stopped = true;
            return false;
          }
          return true;
        });
    if (stopped) return false;
    out.mark_done();
    return true;
  }
};

Json gate_line(const MediaItem& item, const CaptionRecord& record, const Judgement& g) {
  Json j;
  j["item_id"] = item.id;
  j["item"] = to_json(item);
  j["record"] = to_json(record);
  if (g.score) {
    j["score"] = to_json(*g.score);
  } else {
    j["score"] = nullptr;
    j["error"] = g.error;
  }
  return j;
}

std::string dump_pretty(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace

struct Pipeline::State {
  fs::path dir;
  std::unique_ptr<DirLock> lock;
  std::vector<MediaItem> items;
  std::unordered_map<std::string, const MediaItem*> by_id;

  std::map<std::string, FilterRecord> filtered;
  std::map<std::string, RouteResult> routing;
  std::map<std::string, CaptionRecord> captions;
  std::map<std::string, Judgement> scores;
  bool filter_done = false;
  bool route_done = false;
  bool caption_done = false;
  bool judge_done = false;
  bool gate_done = false;

  fs::path path(std::string_view name) const { return dir / std::string(name); }

  const MediaItem& item(const std::string& id) const { return *by_id.at(id); }

  std::vector<std::string> accepted_ids() const {
    std::vector<std::string> out;
    for (const auto& it : items) {
      auto f = filtered.find(it.id);
      if (f != filtered.end() && f->second.verdict.accepted()) out.push_back(it.id);
    }
    return out;
  }
  std::vector<std::string> routed_ids() const {
    std::vector<std::string> out;
    for (const auto& id : accepted_ids()) {
      auto r = routing.find(id);
      if (r != routing.end() && std::holds_alternative<RoutingDecision>(r->second)) {
        out.push_back(id);
      }
    }
    return out;
  }
  std::vector<std::string> captioned_ids() const {
    std::vector<std::string> out;
    for (const auto& id : routed_ids()) {
      auto c = captions.find(id);
      if (c != captions.end() && c->second.has_caption()) out.push_back(id);
    }
    return out;
  }
};

Json run_fingerprint(const RunConfig& config, const AgentRegistry& registry) {
  Json j;
  j["manifest_sha256"] = sha256_hex(read_file(config.manifest));
  j["filter"] = Json{{"min_short_edge", config.filter.min_short_edge},
                     {"max_aspect_ratio", config.filter.max_aspect_ratio},
                     {"min_video_height", config.filter.min_video_height}};
  j["policy"] = to_string(config.policy);
  j["video_frames"] = config.video_frames;
  Json workflows = Json::array();
  for (const auto& row : config.workflows.rows()) {
    workflows.push_back(Json{{"domain", to_string(row.domain)},
                             {"agents", row.functional_agents},
                             {"summary", row.summary_agent}});
  }
  j["workflows"] = workflows;
  Json agents = Json::object();
  for (const auto& name : registry.names()) {
    const AgentSpec& a = registry.get(name);
    agents[name] = Json{{"category", to_string(a.category)},
                        {"modality", to_string(a.modality)},
                        {"media", to_string(a.media)},
                        {"model_binding", a.model_binding},
                        {"max_output_tokens", a.max_output_tokens},
                        {"template_sha256", sha256_hex(a.prompt_template)}};
  }
  j["agents"] = agents;
  Json profiles = Json::object();
  ProfileSet set = profiles_for(config);
  for (const auto& name : set.names()) {
    const ModelProfile& p = *set.find(name);
    profiles[name] = Json{{"model", p.model_id},
                          {"price_in", p.price_in.to_string()},
                          {"price_out", p.price_out.to_string()}};
  }
  j["profiles"] = profiles;
  j["mock_fixture_sha256"] =
      config.mock_fixture ? Json(sha256_hex(read_file(*config.mock_fixture))) : Json(nullptr);
  return j;
}

ProfileSet profiles_for(const RunConfig& config) {
  ProfileSet set = config.profiles;
  if (config.mock_fixture && set.empty()) {
    ModelProfile p;
    p.name = "default";
    p.endpoint = "mock://";
    p.model_id = "mock";
    p.max_concurrency = 64;
    set.add(p);
  }
  return set;
}

Pipeline::Pipeline(RunConfig config, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : config_(std::move(config)), registry_(AgentRegistry::load(config_.agents)) {
  config_.validate();
  validate_workflows(config_.workflows, registry_);
  ProfileSet profiles = profiles_for(config_);
  // Every agent a run can call must have a profile to call it with.
  std::set<std::string> used{std::string(kRouterAgent), std::string(kImageJudgeAgent),
                             std::string(kVideoJudgeAgent)};
  for (const auto& row : config_.workflows.rows()) {
    used.insert(row.functional_agents.begin(), row.functional_agents.end());
    used.insert(row.summary_agent);
  }
  for (const auto& name : used) profiles.resolve(registry_.get(name).model_binding);
  client_ = std::make_unique<ChatClient>(std::move(profiles), std::move(transport), RetryPolicy{},
                                         std::move(sleeper), config_.seed);
}

Pipeline::~Pipeline() = default;

RunSummary Pipeline::run(const RunOptions& options) {
  if (config_.manifest.empty()) throw config_error("no manifest configured");
  if (config_.run_dir.empty()) throw config_error("no run directory configured");

  State st;
  st.dir = config_.run_dir;
  std::error_code ec;
  fs::create_directories(st.dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create run directory " + st.dir.string());
  st.lock = std::make_unique<DirLock>(st.path(run_files::kLock));

  st.items = load_manifest(config_.manifest);
  for (const auto& it : st.items) st.by_id.emplace(it.id, &it);

  Json fingerprint = run_fingerprint(config_, registry_);
  fs::path run_json = st.path(run_files::kRun);
  if (fs::exists(run_json)) {
    if (!options.resume) {
      throw config_error("run directory " + st.dir.string() +
                         " already holds a run; pass --resume to continue it");
    }
    Json existing = Json::parse(read_file(run_json), nullptr, false);
    if (existing != fingerprint) {
      throw config_error("run directory " + st.dir.string() +
                         " belongs to a different configuration or manifest");
    }
  } else {
    write_file_atomic(run_json, dump_pretty(fingerprint));
  }

  // Load every existing checkpoint so that single-stage invocations see the
  // state left by earlier ones.
  StageRunner<FilterRecord> filter_runner{Stage::Filter, st.path(run_files::kFiltered),
                                          [](const FilterRecord& r) { return to_json(r); },
                                          filter_record_from_json};
  StageRunner<RouteResult> route_runner{
      Stage::Route, st.path(run_files::kRouting),
      [](const RouteResult& r) { return std::visit([](const auto& v) { return to_json(v); }, r); },
      route_result_from_json};
  StageRunner<CaptionRecord> caption_runner{Stage::Caption, st.path(run_files::kCaptions),
                                            [](const CaptionRecord& r) { return to_json(r); },
                                            caption_record_from_json};
  StageRunner<Judgement> judge_runner{Stage::Judge, st.path(run_files::kScores),
                                      [](const Judgement& g) { return to_json(g); },
                                      judgement_from_json};
  st.filter_done = filter_runner.load(st.filtered, nullptr);
  st.route_done = route_runner.load(st.routing, nullptr);
  st.caption_done = caption_runner.load(st.captions, nullptr);
  st.judge_done = judge_runner.load(st.scores, nullptr);
  st.gate_done = fs::exists(st.path(run_files::kGateStats));

  auto require = [&](bool done, Stage before, Stage stage) {
    if (!done) {
      throw config_error("stage '" + std::string(to_string(stage)) + "' needs stage '" +
                         std::string(to_string(before)) + "' to complete first");
    }
  };
  auto after_stage = [&](Stage s) {
    return !options.hooks.after_stage || options.hooks.after_stage(s);
  };

  bool interrupted = false;
  std::vector<Stage> stages = options.stages;
  std::sort(stages.begin(), stages.end());
  stages.erase(std::unique(stages.begin(), stages.end()), stages.end());
  const std::size_t workers = config_.workers;
  for (Stage stage : stages) {
    bool done = true;
    switch (stage) {
      case Stage::Filter: {
        std::vector<std::string> ids;
        for (const auto& it : st.items) ids.push_back(it.id);
        done = filter_runner.execute(
            ids, st.filtered, 1,
            [&](const std::string& id) {
              return FilterRecord{id, filter_media(st.item(id), config_.filter)};
            },
            options.hooks);
        st.filter_done = done;
        break;
      }
      case Stage::Route:
        require(st.filter_done, Stage::Filter, stage);
        done = route_runner.execute(
            st.accepted_ids(), st.routing, workers,
            [&](const std::string& id) { return route(st.item(id), registry_, *client_); },
            options.hooks);
        st.route_done = done;
        break;
      case Stage::Caption: {
        require(st.route_done, Stage::Route, stage);
        WorkflowOptions wopts{config_.policy, config_.agent_parallelism, config_.video_frames};
        done = caption_runner.execute(
            st.routed_ids(), st.captions, workers,
            [&](const std::string& id) {
              const auto& decision = std::get<RoutingDecision>(st.routing.at(id));
              return run_workflow(st.item(id), decision, config_.workflows, registry_, *client_,
                                  wopts);
            },
            options.hooks);
        st.caption_done = done;
        break;
      }
      case Stage::Judge:
        require(st.caption_done, Stage::Caption, stage);
        done = judge_runner.execute(
            st.captioned_ids(), st.scores, workers,
            [&](const std::string& id) {
              return judge(st.captions.at(id), st.item(id), registry_, *client_,
                           config_.video_frames);
            },
            options.hooks);
        st.judge_done = done;
        break;
      case Stage::Gate:
        require(st.judge_done, Stage::Judge, stage);
        run_gate(st);
        st.gate_done = true;
        break;
    }
    if (!done || !after_stage(stage)) {
      interrupted = true;
      break;
    }
  }

  RunSummary summary = summarize(st);
  summary.interrupted = interrupted;
  return summary;
}

void Pipeline::run_gate(State& st) {
  std::vector<CaptionRecord> records;
  std::vector<Judgement> judgements;
  for (const auto& id : st.captioned_ids()) {
    records.push_back(st.captions.at(id));
    judgements.push_back(st.scores.at(id));
  }
  GateResult result = filter_dataset(records, judgements);
  auto write = [&](std::string_view name, const std::vector<std::size_t>& idx) {
    std::string text;
    for (std::size_t i : idx) {
      const auto& rec = records[i];
      text += dump_line(gate_line(st.item(rec.item_id), rec, judgements[i])) + "\n";
    }
    write_file_atomic(st.path(name), text);
  };
  write(run_files::kKept, result.kept);
  write(run_files::kDropped, result.dropped);
  write(run_files::kQuarantine, result.quarantined);
  write_file_atomic(st.path(run_files::kGateStats), dump_pretty(to_json(result.stats)));
}

RunSummary Pipeline::summarize(State& st) {
  RunSummary s;
  s.manifest_items = st.items.size();

  std::string rejects;
  auto reject = [&](const std::string& id, std::string_view stage, const std::string& reason) {
    rejects += dump_line(Json{{"item_id", id}, {"stage", stage}, {"reason", reason}}) + "\n";
  };
  for (const auto& it : st.items) {
    const std::string& id = it.id;
    if (auto f = st.filtered.find(id); f != st.filtered.end()) {
      if (!f->second.verdict.accepted()) {
        ++s.filter_rejected;
        reject(id, "filter", std::string(to_string(*f->second.verdict.reason)));
        continue;
      }
      ++s.filter_accepted;
    }
    if (auto r = st.routing.find(id); r != st.routing.end()) {
      if (const auto* fail = std::get_if<RoutingFailure>(&r->second)) {
        ++s.routing_failed;
        s.total_cost += fail->cost;
        reject(id, "route", fail->reason);
        continue;
      }
      ++s.routed;
      s.total_cost += std::get<RoutingDecision>(r->second).cost;
    }
    if (auto c = st.captions.find(id); c != st.captions.end()) {
      const CaptionRecord& rec = c->second;
      s.total_cost += rec.total_cost;
      switch (rec.status) {
        case CaptionStatus::Complete: ++s.captions_complete; break;
        case CaptionStatus::PartialFailed: ++s.captions_partial; break;
        case CaptionStatus::Failed:
          ++s.captions_failed;
          reject(id, "caption", rec.error);
          continue;
      }
    }
    if (auto g = st.scores.find(id); g != st.scores.end()) {
      s.total_cost += g->second.cost;
      if (!g->second.ok()) {
        ++s.quarantined;
        reject(id, "judge", g->second.error);
      } else if (g->second.score->verdict == Verdict::Keep) {
        ++s.kept;
      } else {
        ++s.dropped;
      }
    }
  }
  s.judged = s.kept + s.dropped;
  if (s.judged > 0) s.yield = static_cast<double>(s.kept) / static_cast<double>(s.judged);
  if (s.kept > 0) s.cost_per_kept = s.total_cost.divided_by(static_cast<std::int64_t>(s.kept));
  if (st.filter_done) s.completed_stages.push_back(Stage::Filter);
  if (st.route_done) s.completed_stages.push_back(Stage::Route);
  if (st.caption_done) s.completed_stages.push_back(Stage::Caption);
  if (st.judge_done) s.completed_stages.push_back(Stage::Judge);
  if (st.gate_done) s.completed_stages.push_back(Stage::Gate);

  write_file_atomic(st.path(run_files::kRejects), rejects);
  write_file_atomic(st.path(run_files::kSummary), dump_pretty(to_json(s)));
  return s;
}

Json to_json(const RunSummary& s) {
  Json j;
  j["manifest_items"] = s.manifest_items;
  j["filter"] = Json{{"accepted", s.filter_accepted}, {"rejected", s.filter_rejected}};
  j["route"] = Json{{"routed", s.routed}, {"failed", s.routing_failed}};
  j["caption"] = Json{{"complete", s.captions_complete},
                      {"partial_failed", s.captions_partial},
                      {"failed", s.captions_failed}};
  j["gate"] = Json{{"judged", s.judged},
                   {"kept", s.kept},
                   {"dropped", s.dropped},
                   {"quarantined", s.quarantined},
                   {"yield", s.yield ? Json(*s.yield) : Json(nullptr)}};
  j["total_cost"] = s.total_cost.to_string();
  j["cost_per_kept"] = s.cost_per_kept ? Json(s.cost_per_kept->to_string()) : Json(nullptr);
  Json stages = Json::array();
  for (Stage st : s.completed_stages) stages.push_back(to_string(st));
  j["stages_done"] = stages;
  return j;
}

std::string to_text(const RunSummary& s) {
  char yield[32] = "n/a";
  if (s.yield) std::snprintf(yield, sizeof yield, "%.4f", *s.yield);
  std::string out;
  out += "items      " + std::to_string(s.manifest_items) + "\n";
  out += "filter     " + std::to_string(s.filter_accepted) + " accepted, " +
         std::to_string(s.filter_rejected) + " rejected\n";
  out += "route      " + std::to_string(s.routed) + " routed, " +
         std::to_string(s.routing_failed) + " failed\n";
  out += "caption    " + std::to_string(s.captions_complete) + " complete, " +
         std::to_string(s.captions_partial) + " partial, " + std::to_string(s.captions_failed) +
         " failed\n";
  out += "gate       " + std::to_string(s.kept) + " kept, " + std::to_string(s.dropped) +
         " dropped, " + std::to_string(s.quarantined) + " quarantined, yield " + yield + "\n";
  out += "cost       " + s.total_cost.to_string() + " total";
  if (s.cost_per_kept) out += ", " + s.cost_per_kept->to_string() + " per kept caption";
  out += "\n";
  if (s.interrupted) out += "run stopped before completion\n";
  return out;
}

std::vector<CostEntry> cost_entries(const fs::path& run_dir) {
  std::vector<CostEntry> out;
  auto each = [&](std::string_view name, const std::function<void(const Json&)>& fn) {
    fs::path p = run_dir / std::string(name);
    if (!fs::exists(p)) return;
    for (const auto& [line, j] : read_jsonl(p)) {
      if (!is_done_marker(j)) fn(j);
    }
  };
  each(run_files::kRouting, [&](const Json& j) {
    RouteResult r = route_result_from_json(j);
    std::visit(
        [&](const auto& v) {
          out.push_back({v.item_id, "route", std::string(kRouterAgent), v.cost});
        },
        r);
  });
  each(run_files::kCaptions, [&](const Json& j) {
    CaptionRecord rec = caption_record_from_json(j);
    for (const auto& o : rec.agent_outputs) out.push_back({rec.item_id, "caption", o.agent, o.cost});
    if (rec.summary) out.push_back({rec.item_id, "caption", rec.summary->agent, rec.summary->cost});
  });
  each(run_files::kScores, [&](const Json& j) {
    Judgement g = judgement_from_json(j);
    out.push_back({g.item_id, "judge", g.agent, g.cost});
  });
  return out;
}

std::vector<CaptionSample> load_gate_samples(const fs::path& path) {
  std::vector<CaptionSample> out;
  for (const auto& [line, j] : read_jsonl(path)) {
    try {
      const Json& rec = j.at("record");
      auto domain = parse_domain(rec.at("domain").get<std::string>());
      if (!domain) throw LineError(ErrorKind::Manifest, line, "unknown domain");
      out.push_back({*domain, rec.at("caption").get<std::string>()});
    } catch (const Json::exception& e) {
      throw LineError(ErrorKind::Manifest, line, e.what());
    }
  }
  return out;
}

}  // namespace vcap
