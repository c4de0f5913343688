#pragma once

#include <string>

#include "codev/rubric.hpp"

namespace codev {

enum class PromptStyle { ZeroShot, ZeroShotCoT };

std::string to_string(PromptStyle style);
PromptStyle prompt_style_from_string(const std::string& name);

struct RenderedPrompt {
    std::string system_text;
    std::string user_text;
    PromptStyle style = PromptStyle::ZeroShotCoT;
    std::string response_schema_version;
};

/// Wording revision of the grading templates. Bump whenever any template
/// text changes so cached completions stay attributable to the prompt that
/// produced them.
inline constexpr const char* kGradeSchemaVersion = "grade-v1";

/// Renders the grading prompt for one submission. Pure: identical inputs
/// yield byte-identical text. Throws ConfigError when the rubric is invalid,
/// carrying the validation result.
RenderedPrompt render_prompt(const ProblemSpec& problem,
                             const Submission& submission,
                             PromptStyle style);

}  // namespace codev
