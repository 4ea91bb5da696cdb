#pragma once

#include "vcap/json_io.hpp"
#include "vcap/money.hpp"
#include "vcap/types.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vcap {

std::size_t count_words(std::string_view text);
std::size_t count_code_points(std::string_view text);

/// Nearest-rank percentile of an ascending sequence; p in (0, 100].
double percentile(std::span<const double> sorted, double p);

struct LengthStats {
  double mean = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
};

struct DomainStats {
  VisualDomain domain = VisualDomain::Natural;
  std::size_t count = 0;
  double share = 0.0;
  LengthStats words;
  LengthStats characters;  // Unicode code points
  LengthStats tokens;      // ceil(characters / 4)
};

struct DatasetStats {
  std::size_t total = 0;
  std::vector<DomainStats> domains;  // domain order; empty domains omitted
  std::optional<DomainStats> overall;
};

struct CaptionSample {
  VisualDomain domain = VisualDomain::Natural;
  std::string caption;
};

DatasetStats dataset_stats(std::span<const CaptionSample> samples);

Json to_json(const DatasetStats& stats);
std::string to_text(const DatasetStats& stats);

struct CostEntry {
  std::string item_id;
  std::string stage;
  std::string agent;
  Money cost;
};

struct CostReport {
  Money total;
  std::map<std::string, Money> per_stage;
  std::map<std::string, Money> per_agent;
  std::size_t items_with_cost = 0;
  Money per_item_mean;  // over items that incurred any cost
};

CostReport report_cost(std::span<const CostEntry> entries);

Json to_json(const CostReport& report);
std::string to_text(const CostReport& report);

}  // namespace vcap
