#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "codev/ensemble.hpp"
#include "codev/prompt.hpp"

namespace codev {

/// submission id -> human score.
using HumanScoreSet = std::map<std::string, int>;

/// submission id -> sampled scores (the per-submission ensemble pool).
using SamplePool = std::map<std::string, std::vector<int>>;

struct MaeReport {
    std::string model;
    PromptStyle style = PromptStyle::ZeroShotCoT;
    AggregationMethod method = AggregationMethod::Mode;
    int ensemble_size = 0;
    int m = 0;  // number of students
    double mae = 0;
};

/// Mean absolute error between aggregated finals and human scores.
/// Throws KeyMismatchError listing the ids present on one side only.
double mae(const std::map<std::string, int>& finals, const HumanScoreSet& human);

struct StabilityPoint {
    int size = 0;
    double mean_case_mae = 0;
    double worst_case_mae = 0;
};

using StabilityCurve = std::vector<StabilityPoint>;

/// Per-submission adversarial subset: the e samples with the largest
/// absolute error against the human score; ties prefer the larger score,
/// then the smaller sample index. Exposed for the enumeration oracle.
std::vector<int> worst_subset(const std::vector<int>& samples, int human, int e);

/// Stability curve over an ensemble-size ladder. Worst-case points use
/// worst_subset per submission; mean-case points average the MAE of t_draws
/// seeded random subsets (drawn without replacement per submission).
StabilityCurve worst_case_curve(const SamplePool& pool, const HumanScoreSet& human,
                                AggregationMethod method,
                                const std::vector<int>& sizes, std::uint64_t seed,
                                int t_draws = 50);

/// MAE per (model, method) from one pool per model; every method sees the
/// identical pool. Throws KeyMismatchError when any pool's submissions
/// disagree with the human set.
std::map<std::string, std::map<AggregationMethod, double>> compare_methods(
    const std::map<std::string, SamplePool>& pools, const HumanScoreSet& human);

struct StyleComparison {
    std::string model;
    double mae_zero_shot = 0;
    double mae_codev = 0;
    double diff = 0;  // mae_codev - mae_zero_shot
};

/// Per-model MAE of the zero-shot finals vs the CoT-pipeline finals.
std::vector<StyleComparison> compare_styles(
    const std::map<std::string, std::map<std::string, int>>& zero_shot_finals,
    const std::map<std::string, std::map<std::string, int>>& codev_finals,
    const HumanScoreSet& human);

/// Synthetic noisy rater: per-submission true scores plus i.i.d. integer
/// offsets from a discrete distribution, clamped to [0, 100].
struct SimRaterModel {
    std::map<std::string, int> true_scores;
    std::vector<std::pair<int, double>> offset_weights;  // (offset, weight)
    std::uint64_t seed = 0;
};

SamplePool simulate_rater_pool(const SimRaterModel& sim, int q_total);

std::string format_mae(double value);  // 2 decimals, Table style
std::string render_methods_table(
    const std::map<std::string, std::map<AggregationMethod, double>>& cells);
std::string render_styles_table(const std::vector<StyleComparison>& rows);

}  // namespace codev
