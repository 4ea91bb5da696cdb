#include "vcap/eval.hpp"

#include "vcap/error.hpp"
#include "vcap/executor.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>

namespace vcap {

namespace {

struct Accumulator {
  std::size_t n = 0;
  std::vector<std::pair<std::string, std::int64_t>> sums;

  void add(const QualityScore& s) {
    if (sums.empty()) {
      for (const auto& [name, _] : s.dims) sums.emplace_back(name, 0);
    }
    for (std::size_t i = 0; i < s.dims.size(); ++i) sums[i].second += s.dims[i].second;
    ++n;
  }

  RubricMeans finish() const {
    RubricMeans m;
    m.n = n;
    m.sums = sums;
    std::int64_t total = 0;
    for (const auto& [name, sum] : sums) {
      m.means.emplace_back(name, static_cast<double>(sum) / static_cast<double>(n));
      total += sum;
    }
    m.overall = static_cast<double>(total) / static_cast<double>(n * sums.size());
    return m;
  }
};

std::optional<VisualDomain> sample_domain(const QualitySample& s) {
  if (s.domain) return s.domain;
  if (s.item.known_domain) return s.item.known_domain;
  if (s.item.kind == MediaKind::Video) return VisualDomain::VideoTemporal;
  return std::nullopt;
}

Json means_json(const RubricMeans& m) {
  Json dims = Json::object();
  for (const auto& [name, mean] : m.means) dims[name] = mean;
  return Json{{"n", m.n}, {"means", dims}, {"overall", m.overall}};
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void means_table(std::string& out, const std::string& title, const RubricMeans& m) {
  out += title + " (n=" + std::to_string(m.n) + ")\n";
  for (const auto& [name, mean] : m.means) {
    std::string label = name;
    label.resize(std::max<std::size_t>(label.size(), 28), ' ');
    out += "  " + label + fixed(mean) + "\n";
  }
  std::string label = "overall";
  label.resize(28, ' ');
  out += "  " + label + fixed(m.overall) + "\n";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

QualityReport aggregate_quality(std::span<const ScoredSample> scored) {
  QualityReport r;
  r.samples = scored.size();
  Accumulator image, video;
  std::map<std::string, Accumulator> domains;
  for (const auto& s : scored) {
    if (!s.score) {
      ++r.failures;
      continue;
    }
    (s.score->modality == MediaKind::Image ? image : video).add(*s.score);
    if (s.domain) domains[std::string(to_string(*s.domain))].add(*s.score);
  }
  r.all_failed = r.samples > 0 && r.failures == r.samples;
  if (image.n > 0) r.image = image.finish();
  if (video.n > 0) r.video = video.finish();
  for (const auto& [name, acc] : domains) r.per_domain.emplace(name, acc.finish());
  return r;
}

QualityReport quality_eval(std::span<const QualitySample> samples, const AgentRegistry& registry,
                           ChatClient& client, std::size_t workers, std::size_t video_frames) {
  if (samples.empty()) throw Error(ErrorKind::Precondition, "quality_eval needs at least one sample");
  auto scored = parallel_map<ScoredSample>(samples.size(), workers, [&](std::size_t i) {
    const QualitySample& s = samples[i];
    Judgement g = judge_caption(s.caption, s.item, registry, client, video_frames);
    return ScoredSample{sample_domain(s), s.item.kind, g.score};
  });
  return aggregate_quality(scored);
}

Json to_json(const QualityReport& r) {
  Json j;
  j["samples"] = r.samples;
  j["n"] = r.samples - r.failures;
  j["failures"] = r.failures;
  j["all_failed"] = r.all_failed;
  j["image"] = r.image ? means_json(*r.image) : Json(nullptr);
  j["video"] = r.video ? means_json(*r.video) : Json(nullptr);
  Json domains = Json::object();
  for (const auto& [name, m] : r.per_domain) domains[name] = means_json(m);
  j["per_domain"] = domains;
  return j;
}

std::string to_text(const QualityReport& r) {
  std::string out = "samples " + std::to_string(r.samples) + ", judged " +
                    std::to_string(r.samples - r.failures) + ", failures " +
                    std::to_string(r.failures) + "\n";
  if (r.all_failed) out += "all judgments failed\n";
  if (r.image) means_table(out, "image", *r.image);
  if (r.video) means_table(out, "video", *r.video);
  for (const auto& [name, m] : r.per_domain) means_table(out, name, m);
  return out;
}

QaInstance qa_instance_from_json(const Json& j) {
  auto fail = [&](const std::string& msg) {
    return Error(ErrorKind::Manifest, "QA instance: " + msg);
  };
  if (!j.is_object()) throw fail("not an object");
  QaInstance q;
  try {
    q.id = j.at("id").get<std::string>();
    q.item = media_item_from_json(j.at("item"));
    q.question = j.at("question").get<std::string>();
    q.gold = j.at("gold").get<std::string>();
    if (j.contains("options") && !j["options"].is_null()) {
      std::vector<QaOption> opts;
      const Json& o = j["options"];
      if (o.is_array()) {
        for (const auto& e : o) {
          if (e.is_array() && e.size() == 2) {
            opts.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
          } else {
            opts.push_back({e.at("letter").get<std::string>(), e.at("text").get<std::string>()});
          }
        }
      } else if (o.is_object()) {
        for (const auto& [letter, text] : o.items()) opts.push_back({letter, text.get<std::string>()});
      } else {
        throw fail("'" + q.id + "': options must be a list or an object");
      }
      q.options = std::move(opts);
    }
  } catch (const Json::exception& e) {
    throw fail(e.what());
  }
  if (q.id.empty()) throw fail("empty id");
  if (q.options) {
    std::set<std::string> letters;
    for (const auto& o : *q.options) {
      if (o.letter.empty() || !letters.insert(o.letter).second) {
        throw fail("'" + q.id + "': option letters must be unique and non-empty");
      }
    }
    if (!letters.count(q.gold)) throw fail("'" + q.id + "': gold '" + q.gold + "' is not an option letter");
  }
  return q;
}

std::vector<QaInstance> load_qa_instances(const std::filesystem::path& path) {
  std::vector<QaInstance> out;
  std::set<std::string> ids;
  for (auto& [line, j] : read_jsonl(path)) {
    try {
      out.push_back(qa_instance_from_json(j));
    } catch (const Error& e) {
      throw LineError(ErrorKind::Manifest, line, e.what());
    }
    if (!ids.insert(out.back().id).second) {
      throw LineError(ErrorKind::Manifest, line, "duplicate id '" + out.back().id + "'");
    }
  }
  return out;
}

std::optional<std::string> extract_choice(std::string_view reply,
                                          std::span<const QaOption> options) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < reply.size()) {
    while (i < reply.size() && std::isspace(static_cast<unsigned char>(reply[i]))) ++i;
    std::size_t start = i;
    while (i < reply.size() && !std::isspace(static_cast<unsigned char>(reply[i]))) ++i;
    if (i > start) tokens.push_back(reply.substr(start, i - start));
  }
  for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
    std::string_view t = *it;
    while (!t.empty() && std::string_view(".,;:!?").find(t.back()) != std::string_view::npos) {
      t.remove_suffix(1);
    }
    if (!t.empty() && t.front() == '(') t.remove_prefix(1);
    if (!t.empty() && t.back() == ')') t.remove_suffix(1);
    for (const auto& o : options) {
      if (t == o.letter) return o.letter;
    }
  }
  return std::nullopt;
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  bool space = false;
  for (char c : trim(text)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

ReasoningOutcome score_reasoning_reply(const QaInstance& q,
                                       const std::optional<std::string>& reply) {
  ReasoningOutcome o;
  o.id = q.id;
  if (!reply) {
    o.error = "reasoner call failed";
    return o;
  }
  o.reply = *reply;
  if (q.options) {
    o.answer = extract_choice(*reply, *q.options);
    if (!o.answer) {
      o.error = "no option letter in reply";
      return o;
    }
    o.correct = *o.answer == q.gold;
  } else {
    std::string norm = normalize_answer(*reply);
    if (norm.empty()) {
      o.error = "empty reply";
      return o;
    }
    o.answer = norm;
    o.correct = norm == normalize_answer(q.gold);
  }
  return o;
}

ReasoningReport aggregate_reasoning(std::vector<ReasoningOutcome> outcomes) {
  ReasoningReport r;
  r.n = outcomes.size();
  for (const auto& o : outcomes) {
    if (!o.answer) {
      ++r.parse_failures;
      continue;
    }
    ++r.parsed;
    if (o.correct) ++r.correct;
  }
  if (r.parsed > 0) r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.parsed);
  r.outcomes = std::move(outcomes);
  return r;
}

std::string reasoning_prompt(const QaInstance& q, const std::string& caption) {
  std::string out = "Description:\n" + caption + "\n\nQuestion: " + q.question;
  if (q.options) {
    out += "\n\nOptions:";
    for (const auto& o : *q.options) out += "\n" + o.letter + ". " + o.text;
    out += "\n\nEnd your reply with the letter of the correct option.";
  } else {
    out += "\n\nReply with the answer only.";
  }
  return out;
}

ReasoningReport reasoning_eval(std::span<const QaInstance> instances,
                               const std::map<std::string, std::string, std::less<>>& captions,
                               const AgentRegistry& registry, ChatClient& client,
                               std::size_t workers) {
  for (const auto& q : instances) {
    if (!captions.count(q.item.id)) {
      throw Error(ErrorKind::Precondition,
                  "instance '" + q.id + "': no caption for item '" + q.item.id + "'");
    }
  }
  const AgentSpec& agent = registry.get(kReasonerAgent);
  auto outcomes = parallel_map<ReasoningOutcome>(instances.size(), workers, [&](std::size_t i) {
    const QaInstance& q = instances[i];
    MediaItem item = q.item;
    item.id = q.id;  // keys the call by instance, not by shared item
    RenderContext ctx{{"extra", reasoning_prompt(q, captions.find(q.item.id)->second)}};
    AgentOutput out = client.chat(render(agent, item, ctx));
    return score_reasoning_reply(q, out.ok() ? std::optional<std::string>(out.text) : std::nullopt);
  });
  return aggregate_reasoning(std::move(outcomes));
}

Json to_json(const ReasoningReport& r) {
  Json j;
  j["n"] = r.n;
  j["parsed"] = r.parsed;
  j["correct"] = r.correct;
  j["parse_failures"] = r.parse_failures;
  j["accuracy"] = r.accuracy ? Json(*r.accuracy) : Json(nullptr);
  Json outcomes = Json::array();
  for (const auto& o : r.outcomes) {
    Json e{{"id", o.id},
           {"answer", o.answer ? Json(*o.answer) : Json(nullptr)},
           {"correct", o.correct}};
    if (!o.error.empty()) e["error"] = o.error;
    outcomes.push_back(std::move(e));
  }
  j["outcomes"] = outcomes;
  return j;
}

std::string to_text(const ReasoningReport& r) {
  std::string out;
  out += "instances       " + std::to_string(r.n) + "\n";
  out += "parsed          " + std::to_string(r.parsed) + "\n";
  out += "correct         " + std::to_string(r.correct) + "\n";
  out += "parse failures  " + std::to_string(r.parse_failures) + "\n";
  out += "accuracy        " + (r.accuracy ? fixed(*r.accuracy) : std::string("n/a")) + "\n";
  return out;
}

}  // namespace vcap
