#include "codev/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "codev/errors.hpp"

namespace codev {

std::string to_string(AggregationMethod method) {
    switch (method) {
        case AggregationMethod::Mode: return "mode";
        case AggregationMethod::Mean: return "mean";
        case AggregationMethod::Median: return "median";
    }
    return "mode";
}

AggregationMethod aggregation_method_from_string(const std::string& name) {
    if (name == "mode") return AggregationMethod::Mode;
    if (name == "mean") return AggregationMethod::Mean;
    if (name == "median") return AggregationMethod::Median;
    throw ConfigError("unknown aggregation method '" + name + "'");
}

namespace {

// Round half away from zero for a non-negative integer ratio sum/count.
int rounded_mean(long sum, long count) {
    return static_cast<int>((2 * sum + count) / (2 * count));
}

double median_of_sorted(const std::vector<int>& sorted) {
    const size_t n = sorted.size();
    if (n % 2 == 1) return sorted[n / 2];
    return (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
}

}  // namespace

int aggregate_scores(std::span<const int> scores, AggregationMethod method) {
    if (scores.empty())
        throw std::invalid_argument("aggregate_scores: empty score list");
    for (int s : scores)
        if (s < 0 || s > 100)
            throw std::invalid_argument("aggregate_scores: score " +
                                        std::to_string(s) + " outside [0, 100]");

    switch (method) {
        case AggregationMethod::Mean: {
            long sum = 0;
            for (int s : scores) sum += s;
            return rounded_mean(sum, static_cast<long>(scores.size()));
        }
        case AggregationMethod::Median: {
            std::vector<int> sorted(scores.begin(), scores.end());
            std::sort(sorted.begin(), sorted.end());
            const size_t n = sorted.size();
            if (n % 2 == 1) return sorted[n / 2];
            return rounded_mean(sorted[n / 2 - 1] + sorted[n / 2], 2);
        }
        case AggregationMethod::Mode: {
            std::map<int, int> counts;
            for (int s : scores) ++counts[s];
            int top = 0;
            for (const auto& [v, c] : counts) top = std::max(top, c);

            std::vector<int> sorted(scores.begin(), scores.end());
            std::sort(sorted.begin(), sorted.end());
            const double med = median_of_sorted(sorted);

            // Tied modes: closest to the median of all scores, then lower.
            int best = -1;
            double best_dist = 0;
            for (const auto& [v, c] : counts) {
                if (c != top) continue;
                const double dist = std::fabs(v - med);
                if (best < 0 || dist < best_dist) {
                    best = v;
                    best_dist = dist;
                }
                // counts iterates ascending, so an equal distance keeps the
                // earlier (lower) value
            }
            return best;
        }
    }
    throw std::logic_error("unreachable aggregation method");
}

AggregatedGrade run_ensemble(Gateway& gateway, const ProblemSpec& problem,
                             const Submission& submission,
                             const ModelEndpoint& endpoint, PromptStyle style,
                             const GenerationParams& params,
                             const EnsembleConfig& config, int max_retries) {
    if (config.min_valid < 1 || config.min_valid > config.ensemble_size)
        throw ConfigError("ensemble config: min_valid must lie in [1, Q]");

    const RenderedPrompt prompt = render_prompt(problem, submission, style);
    const bool require_reasoning = style == PromptStyle::ZeroShotCoT;

    AggregatedGrade grade;
    grade.submission_id = submission.student_id;
    grade.method = config.method;

    const int q_total = config.ensemble_size;
    for (int q = 0; q < q_total; ++q) {
        QuerySample sample;
        sample.submission_id = submission.student_id;
        sample.query_index = q;
        for (int attempt = 0; attempt <= max_retries; ++attempt) {
            // Re-queries are fresh samples: shift the index past the slot
            // grid so the request digest changes.
            const int sample_index = q + q_total * attempt;
            try {
                const RawCompletion completion =
                    gateway.complete_chat(endpoint, prompt, params, sample_index);
                sample.response = parse_grade_response(completion.text,
                                                       require_reasoning);
                sample.completion_digest = completion.request_digest;
                break;
            } catch (const ParseError&) {
            } catch (const SchemaError&) {
            } catch (const TransientFailure&) {
            }
        }
        grade.samples.push_back(std::move(sample));
    }

    std::vector<int> valid_scores;
    for (const auto& s : grade.samples) {
        if (!s.valid()) continue;
        valid_scores.push_back(s.response->score);
        grade.comment_set.push_back(s.response->comment);
    }
    grade.valid_count = static_cast<int>(valid_scores.size());
    if (grade.valid_count < config.min_valid)
        throw EnsembleFailure("submission '" + submission.student_id + "': only " +
                                  std::to_string(grade.valid_count) + " of " +
                                  std::to_string(q_total) +
                                  " ensemble slots produced a valid grade (min " +
                                  std::to_string(config.min_valid) + ")",
                              submission.student_id);
    grade.final_score = aggregate_scores(valid_scores, config.method);
    return grade;
}

}  // namespace codev
