#pragma once

#include "vcap/json_io.hpp"
#include "vcap/types.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace vcap {

/// One image or video awaiting captioning.
struct MediaItem {
  std::string id;
  MediaKind kind = MediaKind::Image;
  std::string uri;
  std::int64_t width = 1;
  std::int64_t height = 1;
  std::optional<double> duration;  // seconds, videos only
  std::optional<VisualDomain> known_domain;
  std::string source_tag;
  Json extra = Json::object();  // unknown manifest fields, echoed on output

  std::int64_t short_edge() const { return width < height ? width : height; }
  std::int64_t long_edge() const { return width < height ? height : width; }
};

/// Throws Error(Manifest) describing the first violated invariant.
void validate(const MediaItem& item);

Json to_json(const MediaItem& item);
MediaItem media_item_from_json(const Json& j);

/// Reads a line-delimited manifest. Items come back in file order; malformed
/// lines and duplicate ids raise LineError naming the offending line.
std::vector<MediaItem> load_manifest(const std::filesystem::path& path);
std::vector<MediaItem> parse_manifest(std::istream& in);

/// Resolution filter. All three bounds are exclusive.
struct FilterPolicy {
  std::int64_t min_short_edge = 512;
  double max_aspect_ratio = 2.0;
  std::int64_t min_video_height = 480;

  void validate() const;
};

enum class RejectReason { ShortEdge, AspectRatio, VideoResolution };

std::string_view to_string(RejectReason reason);
std::optional<RejectReason> parse_reject_reason(std::string_view text);

struct FilterVerdict {
  std::optional<RejectReason> reason;  // empty means Accept

  bool accepted() const { return !reason.has_value(); }
  friend bool operator==(const FilterVerdict&, const FilterVerdict&) = default;
};

/// Rules in evaluation order (the first failing rule is reported):
///   ShortEdge        images only: min(w, h) > min_short_edge
///   AspectRatio      all media:   max(w, h) / min(w, h) < max_aspect_ratio
///   VideoResolution  videos only: height > min_video_height
FilterVerdict filter_media(const MediaItem& item, const FilterPolicy& policy);

/// Midpoints of n equal intervals: t_k = duration * (k + 0.5) / n.
std::vector<double> sample_video_frames(const MediaItem& item, std::size_t n);

}  // namespace vcap
