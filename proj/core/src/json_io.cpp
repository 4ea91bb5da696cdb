#include "vcap/json_io.hpp"

#include "vcap/error.hpp"

#include <sstream>
#include <system_error>

namespace vcap {

namespace fs = std::filesystem;

std::string dump_line(const Json& value) {
  return value.dump(-1, ' ', false, Json::error_handler_t::replace);
}

static bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

std::vector<std::pair<std::size_t, Json>> parse_jsonl(std::istream& in,
                                                       std::string_view what) {
  std::vector<std::pair<std::size_t, Json>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    Json value;
    try {
      value = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw LineError(ErrorKind::Manifest, line_no,
                      std::string(what) + ": malformed JSON (" + e.what() + ")");
    }
    if (!value.is_object()) {
      throw LineError(ErrorKind::Manifest, line_no,
                      std::string(what) + ": record is not a JSON object");
    }
    out.emplace_back(line_no, std::move(value));
  }
  return out;
}

std::vector<std::pair<std::size_t, Json>> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_jsonl(in, path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot rename onto " + path.string() + ": " + ec.message());
}

bool is_done_marker(const Json& value) {
  return value.is_object() && value.size() == 1 && value.contains("_done");
}

Checkpoint load_checkpoint(const fs::path& path) {
  Checkpoint cp;
  std::error_code ec;
  if (!fs::exists(path, ec)) return cp;

  std::string content = read_file(path);
  std::size_t valid_end = 0;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail: no terminating newline
    ++line_no;
    std::string_view line(content.data() + pos, nl - pos);
    if (!is_blank(line)) {
      Json value;
      try {
        value = Json::parse(line);
      } catch (const Json::parse_error& e) {
        throw LineError(ErrorKind::Io, line_no,
                        path.string() + ": corrupt checkpoint record");
      }
      if (is_done_marker(value)) {
        cp.done = true;
      } else {
        cp.records.push_back(std::move(value));
      }
    }
    pos = nl + 1;
    valid_end = pos;
  }
  if (valid_end < content.size()) {
    fs::resize_file(path, valid_end, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot truncate " + path.string());
  }
  return cp;
}

JsonlAppender::JsonlAppender(const fs::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::app) {
  if (!out_) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for append");
}

void JsonlAppender::append(const Json& record) {
  out_ << dump_line(record) << '\n';
  out_.flush();
  if (!out_) throw Error(ErrorKind::Io, "write failed on " + path_.string());
}

void JsonlAppender::mark_done() { append(Json{{"_done", true}}); }

}  // namespace vcap
