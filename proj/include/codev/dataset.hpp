#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "codev/benchmark.hpp"
#include "codev/rubric.hpp"

namespace codev {

/// One problem directory plus its submissions. Submission ids are prefixed
/// with the problem id ("<pid>/<sid>") so they stay unique dataset-wide.
struct ProblemEntry {
    ProblemSpec problem;
    std::vector<Submission> submissions;
};

struct Dataset {
    std::vector<ProblemEntry> problems;

    int submission_count() const {
        int n = 0;
        for (const auto& p : problems) n += static_cast<int>(p.submissions.size());
        return n;
    }
};

/// Loads `<root>/problems/<pid>/` directories: statement.txt, rubric.json,
/// submissions/<sid>/code.* with optional run_output.txt. Validates every
/// rubric and statement; throws ConfigError on any violation so a bad
/// dataset aborts before any request is issued.
Dataset load_dataset(const std::filesystem::path& root);

/// `submission_id,score` CSV (header required); ids use the dataset-wide
/// "<pid>/<sid>" form.
HumanScoreSet load_human_scores(const std::filesystem::path& csv_path);

}  // namespace codev
