#pragma once

#include <optional>
#include <span>
#include <string_view>

namespace vcap {

namespace detail {

struct PromptAsset {
  std::string_view name;
  std::string_view text;
};

// Defined in the generated prompt_assets.cpp.
std::span<const PromptAsset> prompt_assets();

}  // namespace detail

/// Raw bytes of a built-in prompt asset (core/assets/prompts/<name>.txt).
std::optional<std::string_view> builtin_prompt(std::string_view name);

}  // namespace vcap
