#pragma once

#include <string>

namespace codev {

/// One parsed structured grading reply.
struct GradeResponse {
    std::string reasoning_steps;  // may be empty for zero-shot replies
    std::string comment;
    int score = 0;  // in [0, 100]

    std::string to_json_text() const;
    bool operator==(const GradeResponse&) const = default;
};

/// Extracts the first balanced JSON object from a model reply (tolerating
/// code fences and surrounding prose), validates the grading schema, and
/// normalizes the score: round half away from zero, then clamp to [0, 100].
///
/// require_reasoning enforces a non-empty reasoning_steps field, which the
/// CoT template demands; zero-shot replies may omit it.
///
/// Throws ParseError when no balanced object parses, SchemaError when a
/// required field is missing or the score is non-numeric; both carry the
/// raw text for the caller's re-query loop.
GradeResponse parse_grade_response(const std::string& text,
                                   bool require_reasoning = false);

/// Round half away from zero, then clamp to [0, 100].
int round_and_clamp_score(double x);

}  // namespace codev
