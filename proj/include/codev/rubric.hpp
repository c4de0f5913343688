#pragma once

#include <optional>
#include <string>
#include <vector>

namespace codev {

struct CriterionSpec {
    std::string name;
    int max_points = 0;
    std::string description;
};

struct Rubric {
    std::vector<CriterionSpec> criteria;
    int total_scale = 100;
};

/// Outcome of validate_rubric. Violations are data, not faults: an invalid
/// rubric is reported, never thrown.
struct RubricValidation {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;

    bool ok() const { return violations.empty(); }
    std::string joined() const;
};

RubricValidation validate_rubric(const Rubric& rubric);

struct ProblemSpec {
    std::string id;
    std::string statement;
    Rubric rubric;
};

struct Submission {
    std::string student_id;
    std::string source_code;
    std::optional<std::string> execution_output;
};

}  // namespace codev
