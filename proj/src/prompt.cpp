#include "codev/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "codev/errors.hpp"

namespace codev {

std::string to_string(PromptStyle style) {
    return style == PromptStyle::ZeroShot ? "zero_shot" : "cot";
}

PromptStyle prompt_style_from_string(const std::string& name) {
    if (name == "zero_shot") return PromptStyle::ZeroShot;
    if (name == "cot" || name == "zero_shot_cot") return PromptStyle::ZeroShotCoT;
    throw ConfigError("unknown prompt style '" + name + "'");
}

namespace {

const char* kSystemText =
    "As a professional and knowledgeable expert in programming and education, "
    "you excel at reading code and can provide fair and accurate evaluations "
    "based on the given information.";

std::string lowercased(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string criteria_list(const Rubric& rubric) {
    std::ostringstream out;
    for (const auto& c : rubric.criteria) {
        out << "- " << c.name << " (0-" << c.max_points << "): " << c.description
            << "\n";
    }
    return out.str();
}

std::string criterion_names_lower(const Rubric& rubric) {
    std::ostringstream out;
    for (size_t i = 0; i < rubric.criteria.size(); ++i) {
        if (i) out << ", ";
        out << lowercased(rubric.criteria[i].name);
    }
    return out.str();
}

void append_submission_block(std::ostringstream& out, const Submission& sub) {
    out << "student code:\n" << sub.source_code;
    if (!sub.source_code.empty() && sub.source_code.back() != '\n') out << "\n";
    if (sub.execution_output && !sub.execution_output->empty()) {
        out << "\nexecution output:\n" << *sub.execution_output;
        if (sub.execution_output->back() != '\n') out << "\n";
    }
}

}  // namespace

RenderedPrompt render_prompt(const ProblemSpec& problem,
                             const Submission& submission,
                             PromptStyle style) {
    auto validation = validate_rubric(problem.rubric);
    if (!validation.ok())
        throw ConfigError("invalid rubric for problem '" + problem.id +
                          "': " + validation.joined());

    const Rubric& rubric = problem.rubric;
    std::ostringstream user;

    if (style == PromptStyle::ZeroShotCoT) {
        user << "Below are the problem statements and criteria; please use them to "
                "assess the code step by step.\n\n";
    } else {
        user << "Below are the problem statements and criteria; please use them to "
                "assess the code.\n\n";
    }
    user << "problem statement:\n" << problem.statement;
    if (!problem.statement.empty() && problem.statement.back() != '\n') user << "\n";
    user << "criteria:\n" << criteria_list(rubric) << "\n";
    append_submission_block(user, submission);
    user << "\n";

    if (style == PromptStyle::ZeroShotCoT) {
        const auto& first = rubric.criteria.front();
        // Worked example inside the instruction uses 3/4 of the first
        // criterion's points so the pattern stays meaningful for any rubric.
        int example_points = std::max(1, first.max_points * 3 / 4);
        user << "Your task is to evaluate the code based on the provided criteria. "
                "For each criterion ("
             << criterion_names_lower(rubric)
             << "), provide a step-by-step breakdown of the evaluation in smaller "
                "steps. Each criterion must have a score (e.g., '"
             << first.name << " (" << example_points << "/" << first.max_points
             << ")') and an explanation of how that score was determined.\n\n";
        user << "Please respond using the following template for 'reasoning_steps', "
                "ensuring the response is a single string in narrative form:\n\n";
        user << "- 'reasoning_steps': A comprehensive text explanation in string "
                "format, following the structure below:\n\n";
        user << "\"Step-by-step breakdown of the evaluation process:\n";
        for (const auto& c : rubric.criteria) {
            user << c.name << " (?/" << c.max_points << "): [Reason for the score]\n";
        }
        user << "\"\n\n";
        user << "- 'comment': Detailed feedback on the code's performance, "
                "considering the "
             << criterion_names_lower(rubric) << ", based on the 'reasoning_steps'.\n\n";
    } else {
        user << "Your task is to evaluate the code based on the provided criteria "
                "and generate a total score together with constructive feedback.\n\n";
        user << "- 'comment': Detailed constructive feedback on the code's "
                "performance, considering the "
             << criterion_names_lower(rubric) << ".\n\n";
    }
    user << "- 'score': The total score (0-" << rubric.total_scale
         << ") based on the evaluations.\n\n";
    user << "Only generate JSON objects in your output without using a ``json block.";

    RenderedPrompt prompt;
    prompt.system_text = kSystemText;
    prompt.user_text = user.str();
    prompt.style = style;
    prompt.response_schema_version = kGradeSchemaVersion;
    return prompt;
}

}  // namespace codev
