#pragma once

#include <string>
#include <string_view>

namespace vcap {

/// Flattens the small LaTeX subset used by the built-in prompt assets into
/// plain text: \textbf/\emph/\texttt are unwrapped, enumerate/itemize become
/// "1." / "-" lines indented two spaces per nesting level, spacing commands
/// vanish, escapes (\{ \} \_ \& \% \# \\) resolve and `` '' become quotes.
/// Deterministic; the output has no trailing newline.
std::string flatten_latex(std::string_view source);

}  // namespace vcap
