#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace vcap {

/// Insertion-ordered JSON keeps emitted records in schema order, which keeps
/// the checkpoint files readable and byte-stable.
using Json = nlohmann::ordered_json;

/// Compact single-line serialization used for every line-delimited record.
std::string dump_line(const Json& value);

/// Parses one line-delimited document. Blank lines are skipped; a line that
/// is not a JSON object raises LineError with the offending line number.
std::vector<std::pair<std::size_t, Json>> parse_jsonl(std::istream& in,
                                                       std::string_view what);
std::vector<std::pair<std::size_t, Json>> read_jsonl(
    const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames over the target.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

/// A stage checkpoint: append-only JSONL closed by a `{"_done":true}` line.
struct Checkpoint {
  std::vector<Json> records;
  bool done = false;
};

/// Loads a checkpoint, tolerating a missing file and discarding a torn
/// trailing line (one without its terminating newline), which is truncated
/// from disk so that later appends start on a clean boundary.
Checkpoint load_checkpoint(const std::filesystem::path& path);

bool is_done_marker(const Json& value);

/// Single-writer appender. Every record is flushed as soon as it is written.
class JsonlAppender {
 public:
  explicit JsonlAppender(const std::filesystem::path& path);

  void append(const Json& record);
  void mark_done();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace vcap
