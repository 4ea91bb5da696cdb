#include "vcap/dataset_stats.hpp"

#include "vcap/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

namespace vcap {

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

std::size_t count_code_points(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

double percentile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::Precondition, "percentile of an empty sequence");
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

namespace {

LengthStats summarize(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  LengthStats s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  s.p50 = percentile(values, 50);
  s.p90 = percentile(values, 90);
  s.p99 = percentile(values, 99);
  return s;
}

DomainStats domain_stats(VisualDomain domain, const std::vector<const CaptionSample*>& group,
                         std::size_t total) {
  DomainStats d;
  d.domain = domain;
  d.count = group.size();
  d.share = static_cast<double>(group.size()) / static_cast<double>(total);
  std::vector<double> words, chars, tokens;
  for (const auto* s : group) {
    auto cps = count_code_points(s->caption);
    words.push_back(static_cast<double>(count_words(s->caption)));
    chars.push_back(static_cast<double>(cps));
    tokens.push_back(static_cast<double>((cps + 3) / 4));
  }
  d.words = summarize(words);
  d.characters = summarize(chars);
  d.tokens = summarize(tokens);
  return d;
}

Json length_json(const LengthStats& s) {
  return Json{{"mean", s.mean}, {"p50", s.p50}, {"p90", s.p90}, {"p99", s.p99}};
}

Json domain_json(const DomainStats& d, bool with_domain) {
  Json j;
  if (with_domain) j["domain"] = to_string(d.domain);
  j["count"] = d.count;
  j["share"] = d.share;
  j["words"] = length_json(d.words);
  j["characters"] = length_json(d.characters);
  j["estimated_tokens"] = length_json(d.tokens);
  return j;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.resize(width, ' ');
  return s;
}

}  // namespace

DatasetStats dataset_stats(std::span<const CaptionSample> samples) {
  DatasetStats out;
  out.total = samples.size();
  if (samples.empty()) return out;
  std::vector<const CaptionSample*> all;
  for (auto domain : kAllDomains) {
    std::vector<const CaptionSample*> group;
    for (const auto& s : samples) {
      if (s.domain == domain) group.push_back(&s);
    }
    if (!group.empty()) out.domains.push_back(domain_stats(domain, group, samples.size()));
  }
  for (const auto& s : samples) all.push_back(&s);
  out.overall = domain_stats(VisualDomain::Natural, all, samples.size());
  return out;
}

Json to_json(const DatasetStats& s) {
  Json j;
  j["total"] = s.total;
  j["empty"] = s.total == 0;
  Json domains = Json::array();
  for (const auto& d : s.domains) domains.push_back(domain_json(d, true));
  j["domains"] = domains;
  j["overall"] = s.overall ? domain_json(*s.overall, false) : Json(nullptr);
  return j;
}

std::string to_text(const DatasetStats& s) {
  if (s.total == 0) return "empty dataset\n";
  std::string out = pad("domain", 22) + pad("count", 8) + pad("share", 8) + pad("words", 10) +
                    pad("chars", 10) + "tokens (means)\n";
  auto row = [&](const std::string& name, const DomainStats& d) {
    out += pad(name, 22) + pad(std::to_string(d.count), 8) + pad(fmt("%.4f", d.share), 8) +
           pad(fmt("%.1f", d.words.mean), 10) + pad(fmt("%.1f", d.characters.mean), 10) +
           fmt("%.1f", d.tokens.mean) + "\n";
  };
  for (const auto& d : s.domains) row(std::string(display_name(d.domain)), d);
  row("all", *s.overall);
  return out;
}

CostReport report_cost(std::span<const CostEntry> entries) {
  CostReport r;
  std::map<std::string, Money> per_item;
  for (const auto& e : entries) {
    r.total += e.cost;
    r.per_stage[e.stage] += e.cost;
    r.per_agent[e.agent] += e.cost;
    per_item[e.item_id] += e.cost;
  }
  Money with_cost;
  for (const auto& [_, cost] : per_item) {
    if (cost != Money{}) {
      ++r.items_with_cost;
      with_cost += cost;
    }
  }
  if (r.items_with_cost > 0) {
    r.per_item_mean = with_cost.divided_by(static_cast<std::int64_t>(r.items_with_cost));
  }
  return r;
}

Json to_json(const CostReport& r) {
  Json j;
  j["total"] = r.total.to_string();
  Json stages = Json::object();
  for (const auto& [k, v] : r.per_stage) stages[k] = v.to_string();
  j["per_stage"] = stages;
  Json agents = Json::object();
  for (const auto& [k, v] : r.per_agent) agents[k] = v.to_string();
  j["per_agent"] = agents;
  j["items_with_cost"] = r.items_with_cost;
  j["per_item_mean"] = r.per_item_mean.to_string();
  return j;
}

std::string to_text(const CostReport& r) {
  std::string out = pad("total", 26) + r.total.to_string() + "\n";
  out += pad("per item (mean)", 26) + r.per_item_mean.to_string() + "  over " +
         std::to_string(r.items_with_cost) + " items\n";
  out += "by stage\n";
  for (const auto& [k, v] : r.per_stage) out += "  " + pad(k, 24) + v.to_string() + "\n";
  out += "by agent\n";
  for (const auto& [k, v] : r.per_agent) out += "  " + pad(k, 24) + v.to_string() + "\n";
  return out;
}

}  // namespace vcap
