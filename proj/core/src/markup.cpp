#include "vcap/markup.hpp"

#include <cctype>
#include <vector>

namespace vcap {

namespace {

// Marks the start of a list item line so the post-pass can drop blank lines
// directly in front of it.
constexpr char kItemMark = '\x01';

class Flattener {
 public:
  explicit Flattener(std::string_view src) : src_(src) {}

  std::string run() {
    body(/*in_group=*/false);
    return finish();
  }

 private:
  struct List {
    bool numbered;
    int counter = 0;
  };

  bool at_end() const { return pos_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void skip_inline_space() {
    while (!at_end() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  // Returns the raw text of a balanced {...} group; pos_ must be at '{'.
  std::string_view raw_group() {
    if (peek() != '{') return {};
    std::size_t start = ++pos_;
    int depth = 1;
    while (!at_end()) {
      char c = src_[pos_];
      if (c == '\\' && pos_ + 1 < src_.size()) {
        pos_ += 2;
        continue;
      }
      if (c == '{') ++depth;
      if (c == '}' && --depth == 0) break;
      ++pos_;
    }
    std::string_view inner = src_.substr(start, pos_ - start);
    if (!at_end()) ++pos_;  // closing brace
    return inner;
  }

  void skip_optional_args() {
    skip_inline_space();
    if (peek() != '[') return;
    while (!at_end() && peek() != ']') ++pos_;
    if (!at_end()) ++pos_;
  }

  void start_item() {
    while (!out_.empty() && (out_.back() == ' ' || out_.back() == '\t')) out_.pop_back();
    if (!out_.empty() && out_.back() != '\n') out_.push_back('\n');
    out_.push_back(kItemMark);
    std::size_t depth = lists_.empty() ? 0 : lists_.size() - 1;
    out_.append(2 * depth, ' ');
    if (!lists_.empty() && lists_.back().numbered) {
      out_ += std::to_string(++lists_.back().counter) + ". ";
    } else {
      out_ += "- ";
    }
    skip_inline_space();
  }

  void command() {
    ++pos_;  // backslash
    char c = peek();
    if (c == '\\') {
      ++pos_;
      skip_optional_args();
      // The source line break after \\ is the same break.
      skip_inline_space();
      if (peek() == '\n') {
        ++pos_;
        skip_inline_space();
      }
      out_.push_back('\n');
      return;
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) {
      if (c != '\0') ++pos_;
      switch (c) {
        case '{': case '}': case '_': case '&': case '%': case '#': case '$':
          out_.push_back(c);
          return;
        default:
          out_.push_back('\\');
          if (c != '\0') out_.push_back(c);
          return;
      }
    }
    std::size_t start = pos_;
    while (!at_end() && std::isalpha(static_cast<unsigned char>(peek()))) ++pos_;
    std::string_view name = src_.substr(start, pos_ - start);

    if (name == "textbf" || name == "emph" || name == "texttt" || name == "textit" ||
        name == "underline") {
      if (peek() == '{') {
        ++pos_;
        body(/*in_group=*/true);
      }
      return;
    }
    if (name == "vspace" || name == "hspace") {
      raw_group();
      return;
    }
    if (name == "begin" || name == "end") {
      std::string env(raw_group());
      bool is_list = env == "enumerate" || env == "itemize";
      if (name == "begin") {
        skip_optional_args();
        if (is_list) lists_.push_back(List{env == "enumerate"});
      } else if (is_list && !lists_.empty()) {
        lists_.pop_back();
      }
      return;
    }
    if (name == "item") {
      start_item();
      return;
    }
    if (name == "noindent" || name == "scriptsize" || name == "footnotesize" ||
        name == "small" || name == "clearpage" || name == "par") {
      skip_inline_space();
      return;
    }
    out_.push_back('\\');
    out_.append(name);
  }

  void body(bool in_group) {
    while (!at_end()) {
      char c = peek();
      if (c == '\\') {
        command();
      } else if (c == '{') {
        ++pos_;
        body(/*in_group=*/true);
      } else if (c == '}') {
        ++pos_;
        if (in_group) return;
      } else if (c == '`' && peek(1) == '`') {
        pos_ += 2;
        out_.push_back('"');
      } else if (c == '\'' && peek(1) == '\'') {
        pos_ += 2;
        out_.push_back('"');
      } else if (c == '-' && peek(1) == '-') {
        pos_ += 2;
        out_.push_back('-');
      } else if (c == '\n') {
        ++pos_;
        out_.push_back('\n');
        skip_inline_space();
      } else {
        ++pos_;
        out_.push_back(c);
      }
    }
  }

  std::string finish() const {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= out_.size()) {
      std::size_t nl = out_.find('\n', start);
      if (nl == std::string::npos) nl = out_.size();
      std::string line = out_.substr(start, nl - start);
      while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.pop_back();
      lines.push_back(std::move(line));
      start = nl + 1;
    }

    std::vector<std::string> kept;
    for (auto& line : lines) {
      bool is_item = !line.empty() && line.front() == kItemMark;
      if (is_item) {
        while (!kept.empty() && kept.back().empty()) kept.pop_back();
        line.erase(0, 1);
      }
      if (line.empty() && (kept.empty() || kept.back().empty())) continue;
      kept.push_back(std::move(line));
    }
    while (!kept.empty() && kept.back().empty()) kept.pop_back();

    std::string result;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (i) result.push_back('\n');
      result += kept[i];
    }
    return result;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::string out_;
  std::vector<List> lists_;
};

}  // namespace

std::string flatten_latex(std::string_view source) { return Flattener(source).run(); }

}  // namespace vcap
