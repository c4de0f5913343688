#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codev/dataset.hpp"
#include "codev/ensemble.hpp"
#include "codev/feedback.hpp"
#include "codev/gateway.hpp"
#include "codev/run_store.hpp"

namespace codev {

/// GEval settings as configured (the evaluator is referenced by endpoint
/// name and resolved against the endpoint list).
struct GEvalSettings {
    std::vector<int> score_set{1, 2, 3, 4, 5};
    std::string evaluator_name;
    ProbabilitySource probability_source = ProbabilitySource::TokenLogprobs;
    int sample_count = 20;
    double review_threshold = 0.5;
};

struct RunConfig {
    std::vector<ModelEndpoint> endpoints;
    std::filesystem::path dataset_root;
    std::vector<PromptStyle> styles{PromptStyle::ZeroShot, PromptStyle::ZeroShotCoT};
    EnsembleConfig ensemble = EnsembleConfig::with_size(10);
    GenerationParams generation;
    RetryPolicy transport;
    GEvalSettings geval;
    int parallelism = 4;
    std::uint64_t run_seed = 0;
    std::filesystem::path output_dir = "out";
    std::vector<int> stability_sizes;  // default 1..Q
    int agreement_repeats = 20;

    nlohmann::json snapshot;  // normalized config, hashed into run_id
    std::string run_id;

    const ModelEndpoint& endpoint_by_name(const std::string& name) const;
    GEvalConfig geval_config() const;
};

/// Parses and normalizes a config file; fills snapshot and run_id.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_json(const nlohmann::json& doc);

struct RunPaths {
    std::filesystem::path output_dir;
    std::filesystem::path run_dir;
    std::filesystem::path cache_dir;

    std::filesystem::path manifest() const { return run_dir / "manifest.json"; }
    std::filesystem::path grades() const { return run_dir / "grades.ndjson"; }
    std::filesystem::path feedback() const { return run_dir / "feedback.ndjson"; }
    std::filesystem::path geval() const { return run_dir / "geval.ndjson"; }
    std::filesystem::path mae() const { return run_dir / "mae.ndjson"; }
    std::filesystem::path agreement(const std::string& mode) const {
        return run_dir / ("agreement_" + mode + ".ndjson");
    }
    std::filesystem::path tables() const { return run_dir / "tables.md"; }
    std::filesystem::path agreement_report(const std::string& mode) const {
        return run_dir / ("agreement_" + mode + ".md");
    }
    std::filesystem::path review() const { return run_dir / "review.txt"; }
    std::filesystem::path report() const { return run_dir / "report.md"; }
    std::filesystem::path stability_dir() const { return run_dir / "stability"; }
    std::filesystem::path feedback_docs_dir() const { return run_dir / "feedback"; }
};

RunPaths make_run_paths(const RunConfig& config);

struct CommandOutcome {
    std::vector<std::string> warnings;
    std::vector<std::string> outputs;  // paths written, for the CLI to echo
};

/// Stage 1+2: ensembles every (model, style, submission) and summarizes the
/// ensemble comments. Per-submission failures become warnings; dataset or
/// configuration problems abort before any request is issued.
CommandOutcome cmd_grade(const RunConfig& config, Gateway& gateway);

/// MAE reports, method/style comparison tables and stability curves against
/// a human score file.
CommandOutcome cmd_benchmark(const RunConfig& config,
                             const std::filesystem::path& human_scores_path);

enum class AgreementMode { Intra, Inter };

/// Intra: repeat-queries each model (cache-backed) and reports ICC(2,k).
/// Inter: ensemble finals of >= 2 models as raters, ICC(3,k). A standalone
/// matrix file bypasses the run store entirely.
CommandOutcome cmd_agreement(const RunConfig& config, Gateway* gateway,
                             AgreementMode mode, int repeats, PromptStyle style,
                             const std::optional<std::filesystem::path>& matrix_csv);

/// Scores every stored feedback document with the configured evaluator.
CommandOutcome cmd_geval(const RunConfig& config, Gateway& gateway);

/// Renders the ordered manual-review queue from stored G-Eval results.
CommandOutcome cmd_review(const RunConfig& config);

/// Consolidated report over whatever stages have completed.
CommandOutcome cmd_report(const RunConfig& config);

}  // namespace codev
