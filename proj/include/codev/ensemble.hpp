#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "codev/gateway.hpp"
#include "codev/grade_response.hpp"
#include "codev/rubric.hpp"

namespace codev {

enum class AggregationMethod { Mode, Mean, Median };

std::string to_string(AggregationMethod method);
AggregationMethod aggregation_method_from_string(const std::string& name);

struct EnsembleConfig {
    int ensemble_size = 10;  // Q
    AggregationMethod method = AggregationMethod::Mode;
    int min_valid = 5;  // default ceil(Q/2)

    static EnsembleConfig with_size(int q, AggregationMethod m = AggregationMethod::Mode) {
        return EnsembleConfig{q, m, (q + 1) / 2};
    }
};

struct QuerySample {
    std::string submission_id;
    int query_index = 0;
    std::optional<GradeResponse> response;  // nullopt = slot invalid
    std::string completion_digest;

    bool valid() const { return response.has_value(); }
};

struct AggregatedGrade {
    std::string submission_id;
    int final_score = 0;
    AggregationMethod method = AggregationMethod::Mode;
    std::vector<QuerySample> samples;
    int valid_count = 0;
    std::vector<std::string> comment_set;  // valid samples' comments, slot order
};

/// Collapses sampled scores to one grade.
///   Mode:   most frequent value; ties go to the value closest to the median
///           of all scores, then to the lower value.
///   Mean:   arithmetic mean, rounded half away from zero.
///   Median: middle of the sorted list; for even length the two middles are
///           averaged and rounded half away from zero.
/// Scores must be non-empty and within [0, 100].
int aggregate_scores(std::span<const int> scores, AggregationMethod method);

/// Issues Q sampled grading queries for one submission and aggregates the
/// valid ones. Each slot gets up to max_retries fresh re-queries when a
/// reply fails to parse (re-queries use a shifted sample index so the digest
/// differs and the cache cannot replay the malformed text). Throws
/// EnsembleFailure when fewer than min_valid slots survive.
AggregatedGrade run_ensemble(Gateway& gateway, const ProblemSpec& problem,
                             const Submission& submission,
                             const ModelEndpoint& endpoint, PromptStyle style,
                             const GenerationParams& params,
                             const EnsembleConfig& config, int max_retries = 3);

}  // namespace codev
