#pragma once

#include "vcap/client.hpp"
#include "vcap/config.hpp"
#include "vcap/json_io.hpp"
#include "vcap/media.hpp"
#include "vcap/mock.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace vcap::test {

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "vcap") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline MediaItem image(const std::string& id, std::int64_t w = 1024, std::int64_t h = 768) {
  MediaItem m;
  m.id = id;
  m.kind = MediaKind::Image;
  m.uri = "https://example.org/" + id + ".jpg";
  m.width = w;
  m.height = h;
  return m;
}

inline MediaItem video(const std::string& id, double duration = 10.0, std::int64_t w = 1280,
                       std::int64_t h = 720) {
  MediaItem m;
  m.id = id;
  m.kind = MediaKind::Video;
  m.uri = "https://example.org/" + id + ".mp4";
  m.width = w;
  m.height = h;
  m.duration = duration;
  return m;
}

inline std::string manifest_text(const std::vector<MediaItem>& items) {
  std::string out;
  for (const auto& it : items) out += dump_line(to_json(it)) + "\n";
  return out;
}

/// Deterministic mix: every fifth item a video, every third image with a
/// known domain, the rest routed by the classifier.
inline std::vector<MediaItem> mixed_items(std::size_t n) {
  static constexpr VisualDomain kKnown[] = {
      VisualDomain::StructureMath, VisualDomain::MedicalBioImaging, VisualDomain::CodeProgramming,
      VisualDomain::UiInteraction, VisualDomain::Synthetic,         VisualDomain::KnowledgeEducation};
  std::vector<MediaItem> items;
  for (std::size_t i = 0; i < n; ++i) {
    std::string id = "item-" + std::to_string(i);
    if (i % 5 == 4) {
      items.push_back(video(id, 6.0 + static_cast<double>(i % 7)));
    } else {
      MediaItem m = image(id, 800 + static_cast<std::int64_t>(i % 9) * 64, 768);
      if (i % 3 == 0) m.known_domain = kKnown[(i / 3) % std::size(kKnown)];
      items.push_back(m);
    }
  }
  return items;
}

inline ModelProfile mock_profile(const std::string& name = "default", const char* price_in = "0",
                                 const char* price_out = "0", int max_concurrency = 16) {
  ModelProfile p;
  p.name = name;
  p.endpoint = "mock://";
  p.model_id = "mock-" + name;
  p.price_in = Money::parse(price_in);
  p.price_out = Money::parse(price_out);
  p.max_concurrency = max_concurrency;
  p.max_retries = 3;
  return p;
}

inline ProfileSet profile_set(std::initializer_list<ModelProfile> profiles) {
  ProfileSet set;
  for (const auto& p : profiles) set.add(p);
  return set;
}

inline Sleeper no_sleep() {
  return [](double) {};
}

/// Every regular file under `root`, keyed by relative path.
inline std::map<std::string, std::string> read_tree(const std::filesystem::path& root,
                                                    bool skip_lock = true) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::string rel = std::filesystem::relative(e.path(), root).string();
    if (skip_lock && rel == "run.lock") continue;
    std::ifstream in(e.path(), std::ios::binary);
    out[rel] = std::string(std::istreambuf_iterator<char>(in), {});
  }
  return out;
}

/// A run over `items` written to <root>/manifest.jsonl, outputs in <root>/<run>.
inline RunConfig run_config(const std::filesystem::path& root, const std::vector<MediaItem>& items,
                            const std::string& run, std::size_t workers,
                            const char* price_in = "0.60", const char* price_out = "2.40") {
  std::filesystem::path manifest = root / "manifest.jsonl";
  if (!std::filesystem::exists(manifest)) write_text(manifest, manifest_text(items));
  RunConfig cfg;
  cfg.manifest = manifest;
  cfg.run_dir = root / run;
  cfg.workers = workers;
  cfg.profiles = profile_set({mock_profile("default", price_in, price_out, 64)});
  return cfg;
}

inline std::filesystem::path data_dir() { return VCAP_TEST_DATA_DIR; }

}  // namespace vcap::test
