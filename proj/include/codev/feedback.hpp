#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "codev/ensemble.hpp"
#include "codev/gateway.hpp"
#include "codev/rubric.hpp"

namespace codev {

inline constexpr const char* kSummarySchemaVersion = "summary-v1";
inline constexpr const char* kGevalSchemaVersion = "geval-v1";

/// Consolidated review: one section per rubric criterion, in rubric order,
/// plus a single overview.
struct SummaryComment {
    std::vector<std::pair<std::string, std::string>> sections;  // (criterion, text)
    std::string overview;
    int source_sample_count = 0;

    std::string full_text() const;
};

enum class ProbabilitySource { TokenLogprobs, EmpiricalSampling };

std::string to_string(ProbabilitySource source);
ProbabilitySource probability_source_from_string(const std::string& name);

struct GEvalConfig {
    std::vector<int> score_set{1, 2, 3, 4, 5};  // ascending, >= 2 values
    ModelEndpoint evaluator;
    ProbabilitySource probability_source = ProbabilitySource::TokenLogprobs;
    int sample_count = 20;  // N, for EmpiricalSampling
    double review_threshold = 0.5;
};

struct GEvalResult {
    std::map<int, double> distribution;  // s_i -> p(s_i), sums to 1
    double raw_score = 0;                // sum p(s_i) * s_i
    double normalized = 0;               // (raw - min S) / (max S - min S)
    bool flagged_for_review = false;     // normalized < review_threshold
};

/// Prompt that asks the evaluator to consolidate the ensemble's comments
/// into the per-criterion section skeleton.
RenderedPrompt build_summary_prompt(const AggregatedGrade& grade,
                                    const ProblemSpec& problem);

/// Splits a summary reply on the required headings ("<criterion>:" per
/// rubric criterion plus "Overview Comments:"). Throws SchemaError when a
/// heading is missing.
SummaryComment parse_summary_sections(const std::string& text,
                                      const Rubric& rubric);

/// One summarization request per submission; retried with fresh samples on
/// malformed replies. Throws SummarizationFailure (with the last raw text)
/// after the retry budget.
SummaryComment summarize_comments(Gateway& gateway, const AggregatedGrade& grade,
                                  const ProblemSpec& problem,
                                  const ModelEndpoint& endpoint,
                                  const GenerationParams& params,
                                  int max_retries = 3);

RenderedPrompt build_geval_prompt(const std::string& task_description,
                                  const std::string& feedback_text,
                                  const std::vector<int>& score_set);

/// Pure arithmetic step: renormalizes the (possibly unnormalized) mass over
/// the score set and fills raw/normalized/flag fields.
GEvalResult geval_from_distribution(const std::map<int, double>& mass,
                                    const std::vector<int>& score_set,
                                    double review_threshold);

/// Probability-weighted feedback-quality score over the score set.
/// TokenLogprobs reads the top alternatives at the score token position;
/// EmpiricalSampling derives frequencies from N independent samples.
GEvalResult geval_score(Gateway& gateway, const std::string& task_description,
                        const SummaryComment& feedback, const GEvalConfig& config,
                        const GenerationParams& params, int max_retries = 3);

/// Flagged items sorted ascending by normalized score, ties by submission id.
std::vector<std::pair<std::string, GEvalResult>> review_queue(
    const std::vector<std::pair<std::string, GEvalResult>>& results);

/// Human-readable per-student document mirroring the section skeleton.
std::string render_feedback_document(const SummaryComment& summary,
                                     const std::string& submission_id,
                                     const std::string& model, int final_score);

}  // namespace codev
