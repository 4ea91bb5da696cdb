#include "vcap/media.hpp"

#include "vcap/error.hpp"

#include <cmath>
#include <unordered_map>

namespace vcap {

namespace {

Error manifest_error(const std::string& msg) { return Error(ErrorKind::Manifest, msg); }

std::int64_t require_dimension(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw manifest_error(std::string("missing field '") + key + "'");
  if (!it->is_number_integer()) {
    throw manifest_error(std::string("field '") + key + "' must be an integer");
  }
  return it->get<std::int64_t>();
}

std::string require_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw manifest_error(std::string("missing field '") + key + "'");
  if (!it->is_string()) {
    throw manifest_error(std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

bool is_known_field(const std::string& key) {
  return key == "id" || key == "kind" || key == "uri" || key == "width" ||
         key == "height" || key == "duration" || key == "known_domain" ||
         key == "source_tag";
}

}  // namespace

void validate(const MediaItem& item) {
  if (item.id.empty()) throw manifest_error("id must be non-empty");
  if (item.width < 1 || item.height < 1) {
    throw manifest_error("item '" + item.id + "': width and height must be >= 1");
  }
  if (item.kind == MediaKind::Video) {
    if (!item.duration) throw manifest_error("video '" + item.id + "' requires a duration");
    if (!std::isfinite(*item.duration) || *item.duration < 0) {
      throw manifest_error("video '" + item.id + "': duration must be a non-negative number");
    }
  } else if (item.duration) {
    throw manifest_error("image '" + item.id + "' must not carry a duration");
  }
  if (item.known_domain && !domain_allowed_for(*item.known_domain, item.kind)) {
    throw manifest_error("item '" + item.id + "': domain " +
                         std::string(to_string(*item.known_domain)) + " is not legal for " +
                         std::string(to_string(item.kind)));
  }
}

MediaItem media_item_from_json(const Json& j) {
  if (!j.is_object()) throw manifest_error("record is not an object");
  MediaItem item;
  item.id = require_string(j, "id");
  std::string kind = require_string(j, "kind");
  auto parsed_kind = parse_media_kind(kind);
  if (!parsed_kind) throw manifest_error("unknown kind '" + kind + "'");
  item.kind = *parsed_kind;
  item.uri = require_string(j, "uri");
  item.width = require_dimension(j, "width");
  item.height = require_dimension(j, "height");
  if (auto it = j.find("duration"); it != j.end() && !it->is_null()) {
    if (!it->is_number()) throw manifest_error("field 'duration' must be a number");
    item.duration = it->get<double>();
  }
  if (auto it = j.find("known_domain"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw manifest_error("field 'known_domain' must be a string");
    auto d = parse_domain(it->get<std::string>());
    if (!d) throw manifest_error("unknown domain '" + it->get<std::string>() + "'");
    item.known_domain = d;
  }
  if (auto it = j.find("source_tag"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw manifest_error("field 'source_tag' must be a string");
    item.source_tag = it->get<std::string>();
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!is_known_field(it.key())) item.extra[it.key()] = it.value();
  }
  validate(item);
  return item;
}

Json to_json(const MediaItem& item) {
  Json j;
  j["id"] = item.id;
  j["kind"] = to_string(item.kind);
  j["uri"] = item.uri;
  j["width"] = item.width;
  j["height"] = item.height;
  if (item.duration) j["duration"] = *item.duration;
  if (item.known_domain) j["known_domain"] = to_string(*item.known_domain);
  if (!item.source_tag.empty()) j["source_tag"] = item.source_tag;
  for (auto it = item.extra.begin(); it != item.extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

std::vector<MediaItem> parse_manifest(std::istream& in) {
  std::vector<MediaItem> items;
  std::unordered_map<std::string, std::size_t> first_seen;
  for (auto& [line, record] : parse_jsonl(in, "manifest")) {
    MediaItem item;
    try {
      item = media_item_from_json(record);
    } catch (const LineError&) {
      throw;
    } catch (const Error& e) {
      throw LineError(ErrorKind::Manifest, line, e.what());
    }
    auto [it, inserted] = first_seen.emplace(item.id, line);
    if (!inserted) {
      throw LineError(ErrorKind::Manifest, line,
                      "duplicate id '" + item.id + "' (first seen on line " +
                          std::to_string(it->second) + ")");
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<MediaItem> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open manifest " + path.string());
  return parse_manifest(in);
}

void FilterPolicy::validate() const {
  if (min_short_edge <= 0 || min_video_height <= 0) {
    throw Error(ErrorKind::Config, "filter edge bounds must be strictly positive");
  }
  // Every aspect ratio is at least 1, so a bound of 1 or less rejects everything.
  if (!(max_aspect_ratio > 1)) throw Error(ErrorKind::Config, "max_aspect_ratio must exceed 1");
}

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::ShortEdge: return "ShortEdge";
    case RejectReason::AspectRatio: return "AspectRatio";
    case RejectReason::VideoResolution: return "VideoResolution";
  }
  return "?";
}

std::optional<RejectReason> parse_reject_reason(std::string_view text) {
  for (auto r : {RejectReason::ShortEdge, RejectReason::AspectRatio,
                 RejectReason::VideoResolution}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

FilterVerdict filter_media(const MediaItem& item, const FilterPolicy& policy) {
  const std::int64_t short_edge = item.short_edge();
  const std::int64_t long_edge = item.long_edge();
  if (item.kind == MediaKind::Image && !(short_edge > policy.min_short_edge)) {
    return {RejectReason::ShortEdge};
  }
  const double ratio = static_cast<double>(long_edge) / static_cast<double>(short_edge);
  if (!(ratio < policy.max_aspect_ratio)) return {RejectReason::AspectRatio};
  if (item.kind == MediaKind::Video && !(item.height > policy.min_video_height)) {
    return {RejectReason::VideoResolution};
  }
  return {};
}

std::vector<double> sample_video_frames(const MediaItem& item, std::size_t n) {
  if (item.kind != MediaKind::Video) {
    throw Error(ErrorKind::Precondition, "frame sampling requires a video item");
  }
  if (n == 0) throw Error(ErrorKind::Precondition, "frame count must be >= 1");
  const double duration = item.duration.value_or(0.0);
  if (!(duration > 0)) {
    throw Error(ErrorKind::Precondition, "video '" + item.id + "' has no positive duration");
  }
  std::vector<double> times;
  times.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    times.push_back(duration * (static_cast<double>(k) + 0.5) / static_cast<double>(n));
  }
  return times;
}

}  // namespace vcap
