#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codev/ensemble.hpp"
#include "codev/feedback.hpp"
#include "codev/prompt.hpp"

namespace codev {

/// One aggregated ensemble result for (model, style, submission), including
/// every sample so downstream stages can rebuild pools without re-querying.
struct GradeRecord {
    std::string model;
    PromptStyle style = PromptStyle::ZeroShotCoT;
    std::string problem_id;
    std::string submission_id;
    int final_score = 0;
    AggregationMethod method = AggregationMethod::Mode;
    int valid_count = 0;
    std::vector<QuerySample> samples;
    std::vector<std::string> comment_set;

    nlohmann::json to_json() const;
    static GradeRecord from_json(const nlohmann::json& j);
};

struct FeedbackRecord {
    std::string model;
    PromptStyle style = PromptStyle::ZeroShotCoT;
    std::string problem_id;
    std::string submission_id;
    SummaryComment summary;
    std::string document_path;

    nlohmann::json to_json() const;
    static FeedbackRecord from_json(const nlohmann::json& j);
};

struct GEvalRecord {
    std::string model;
    PromptStyle style = PromptStyle::ZeroShotCoT;
    std::string submission_id;
    GEvalResult result;

    nlohmann::json to_json() const;
    static GEvalRecord from_json(const nlohmann::json& j);
};

struct IccRecord {
    std::string kind;          // "icc2k" | "icc3k"
    std::string scope;         // model name for intra, "inter" otherwise
    int n = 0, k = 0;
    double estimate = 0, f_value = 0, df1 = 0, df2 = 0, p_value = 0;
    double ci95_low = 0, ci95_high = 0;

    nlohmann::json to_json() const;
    static IccRecord from_json(const nlohmann::json& j);
};

void write_ndjson(const std::filesystem::path& path,
                  const std::vector<nlohmann::json>& records);
std::vector<nlohmann::json> read_ndjson(const std::filesystem::path& path);

/// Per-run manifest: config snapshot, stage completion markers and the
/// digests of every completion a stage consumed. A completed run's manifest
/// plus the cache suffices to replay the run byte-identically.
struct RunManifest {
    std::string run_id;
    nlohmann::json config_snapshot;
    struct Stage {
        bool complete = false;
        std::set<std::string> digests;
    };
    std::map<std::string, Stage> stages;

    void mark(const std::string& stage, std::set<std::string> digests);
    void save(const std::filesystem::path& path) const;
    static RunManifest load(const std::filesystem::path& path);
};

}  // namespace codev
