// codev: rubric-driven LLM grading pipeline with ensemble scoring,
// agreement statistics, MAE benchmarking and feedback-quality review.

#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "codev/errors.hpp"
#include "codev/mock_provider.hpp"
#include "codev/pipeline.hpp"

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string output_override;
    std::string mock_dir;
    bool offline = false;
};

void add_global_options(CLI::App* cmd, GlobalOptions& opts) {
    cmd->add_option("--config", opts.config_path, "run configuration file (JSON)")
        ->required();
    cmd->add_option("--output", opts.output_override, "override output directory");
    cmd->add_flag("--offline", opts.offline,
                  "cache-only mode: any cache miss is an error");
    cmd->add_option("--mock", opts.mock_dir,
                    "use the fixture-driven mock provider from this directory");
}

codev::RunConfig load_config(const GlobalOptions& opts) {
    auto config = codev::load_run_config(opts.config_path);
    if (!opts.output_override.empty()) config.output_dir = opts.output_override;
    return config;
}

std::unique_ptr<codev::Gateway> make_gateway(const codev::RunConfig& config,
                                             const GlobalOptions& opts) {
    std::shared_ptr<codev::ChatProvider> provider;
    if (opts.offline) {
        provider = nullptr;
    } else if (!opts.mock_dir.empty()) {
        provider = std::make_shared<codev::MockProvider>(
            std::filesystem::path(opts.mock_dir));
    } else {
        provider = std::make_shared<codev::HttpChatProvider>();
    }
    return std::make_unique<codev::Gateway>(
        provider, codev::ResponseCache(codev::make_run_paths(config).cache_dir),
        config.transport, opts.offline);
}

int report_outcome(const codev::CommandOutcome& outcome) {
    for (const auto& out : outcome.outputs) std::cout << out << "\n";
    if (!outcome.warnings.empty()) {
        std::cout << "\nwarnings (" << outcome.warnings.size() << "):\n";
        for (const auto& w : outcome.warnings) std::cout << "  " << w << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"codev: LLM-based code grading pipeline"};
    app.require_subcommand(1);

    GlobalOptions grade_opts, bench_opts, agree_opts, geval_opts, review_opts,
        report_opts;

    auto* grade = app.add_subcommand("grade", "run the grading + feedback stages");
    add_global_options(grade, grade_opts);

    auto* bench = app.add_subcommand("benchmark",
                                     "MAE reports and stability curves vs human scores");
    add_global_options(bench, bench_opts);
    std::string human_path;
    bench->add_option("--human", human_path,
                      "human score CSV (default <dataset_root>/human_scores.csv)");

    auto* agree = app.add_subcommand("agreement", "intra/inter-model ICC tests");
    add_global_options(agree, agree_opts);
    std::string mode = "intra";
    int repeats = -1;
    std::string agree_style = "cot";
    std::string matrix_csv;
    agree->add_option("--mode", mode, "intra or inter")
        ->check(CLI::IsMember({"intra", "inter"}));
    agree->add_option("--repeats", repeats, "repeat queries per submission (intra)");
    agree->add_option("--style", agree_style, "prompt style to use")
        ->check(CLI::IsMember({"zero_shot", "cot"}));
    agree->add_option("--matrix", matrix_csv,
                      "standalone rating matrix CSV (bypasses the run store)");

    auto* geval = app.add_subcommand("geval", "score stored feedback quality");
    add_global_options(geval, geval_opts);

    auto* review = app.add_subcommand("review", "render the manual-review queue");
    add_global_options(review, review_opts);

    auto* report = app.add_subcommand("report", "consolidated run report");
    add_global_options(report, report_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (grade->parsed()) {
            auto config = load_config(grade_opts);
            auto gateway = make_gateway(config, grade_opts);
            return report_outcome(codev::cmd_grade(config, *gateway));
        }
        if (bench->parsed()) {
            auto config = load_config(bench_opts);
            auto path = human_path.empty()
                            ? config.dataset_root / "human_scores.csv"
                            : std::filesystem::path(human_path);
            return report_outcome(codev::cmd_benchmark(config, path));
        }
        if (agree->parsed()) {
            auto config = load_config(agree_opts);
            const auto agreement_mode = mode == "intra" ? codev::AgreementMode::Intra
                                                        : codev::AgreementMode::Inter;
            if (repeats <= 0) repeats = config.agreement_repeats;
            std::optional<std::filesystem::path> matrix;
            if (!matrix_csv.empty()) matrix = matrix_csv;
            std::unique_ptr<codev::Gateway> gateway;
            if (!matrix && agreement_mode == codev::AgreementMode::Intra)
                gateway = make_gateway(config, agree_opts);
            return report_outcome(codev::cmd_agreement(
                config, gateway.get(), agreement_mode, repeats,
                codev::prompt_style_from_string(agree_style), matrix));
        }
        if (geval->parsed()) {
            auto config = load_config(geval_opts);
            auto gateway = make_gateway(config, geval_opts);
            return report_outcome(codev::cmd_geval(config, *gateway));
        }
        if (review->parsed()) {
            auto config = load_config(review_opts);
            return report_outcome(codev::cmd_review(config));
        }
        if (report->parsed()) {
            auto config = load_config(report_opts);
            return report_outcome(codev::cmd_report(config));
        }
    } catch (const codev::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
