#include "codev/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include "codev/agreement.hpp"
#include "codev/errors.hpp"

namespace codev {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

const ModelEndpoint& RunConfig::endpoint_by_name(const std::string& name) const {
    for (const auto& e : endpoints)
        if (e.name == name) return e;
    throw ConfigError("no endpoint named '" + name + "' in configuration");
}

GEvalConfig RunConfig::geval_config() const {
    GEvalConfig cfg;
    cfg.score_set = geval.score_set;
    cfg.evaluator = endpoint_by_name(geval.evaluator_name);
    cfg.probability_source = geval.probability_source;
    cfg.sample_count = geval.sample_count;
    cfg.review_threshold = geval.review_threshold;
    return cfg;
}

RunConfig run_config_from_json(const json& doc) {
    RunConfig cfg;
    if (!doc.contains("endpoints") || !doc["endpoints"].is_array() ||
        doc["endpoints"].empty())
        throw ConfigError("config needs at least one endpoint");
    for (const auto& e : doc["endpoints"]) {
        ModelEndpoint ep;
        ep.name = e.value("name", "");
        ep.base_url = e.value("base_url", "");
        ep.model_id = e.value("model_id", "");
        ep.auth_ref = e.value("auth_ref", "");
        ep.supports_logprobs = e.value("supports_logprobs", false);
        if (ep.name.empty()) throw ConfigError("endpoint without a name");
        for (const auto& other : cfg.endpoints)
            if (other.name == ep.name)
                throw ConfigError("duplicate endpoint name '" + ep.name + "'");
        cfg.endpoints.push_back(std::move(ep));
    }

    cfg.dataset_root = doc.value("dataset_root", "");
    if (cfg.dataset_root.empty()) throw ConfigError("config needs dataset_root");

    if (doc.contains("styles")) {
        cfg.styles.clear();
        for (const auto& s : doc["styles"])
            cfg.styles.push_back(prompt_style_from_string(s.get<std::string>()));
        if (cfg.styles.empty()) throw ConfigError("config: styles must be non-empty");
    }

    const json ens = doc.value("ensemble", json::object());
    const int q = ens.value("size", 10);
    if (q < 1) throw ConfigError("config: ensemble size must be >= 1");
    cfg.ensemble.ensemble_size = q;
    cfg.ensemble.method = aggregation_method_from_string(ens.value("method", "mode"));
    cfg.ensemble.min_valid = ens.value("min_valid", (q + 1) / 2);
    if (cfg.ensemble.min_valid < 1 || cfg.ensemble.min_valid > q)
        throw ConfigError("config: min_valid must lie in [1, ensemble size]");

    const json gen = doc.value("generation", json::object());
    cfg.generation.temperature = gen.value("temperature", 0.7);
    cfg.generation.top_p = gen.value("top_p", 1.0);
    cfg.generation.max_tokens = gen.value("max_tokens", 2048);
    if (gen.contains("seed") && !gen["seed"].is_null())
        cfg.generation.request_seed = gen["seed"].get<long>();
    if (cfg.generation.temperature < 0.0)
        throw ConfigError("config: temperature must be non-negative");
    if (cfg.generation.temperature <= 0.0 && cfg.ensemble.ensemble_size > 1)
        throw ConfigError(
            "config: ensemble sampling needs temperature > 0 for distinct samples");
    if (cfg.generation.max_tokens < 1)
        throw ConfigError("config: max_tokens must be positive");
    if (cfg.generation.top_p <= 0.0 || cfg.generation.top_p > 1.0)
        throw ConfigError("config: top_p must lie in (0, 1]");

    const json transport = doc.value("transport", json::object());
    cfg.transport.max_retries = transport.value("retries", 3);
    cfg.transport.backoff_base_ms = transport.value("backoff_base_ms", 250);

    const json gv = doc.value("geval", json::object());
    if (gv.contains("score_set"))
        cfg.geval.score_set = gv["score_set"].get<std::vector<int>>();
    if (cfg.geval.score_set.size() < 2)
        throw ConfigError("config: geval score_set needs at least 2 values");
    for (size_t i = 1; i < cfg.geval.score_set.size(); ++i)
        if (cfg.geval.score_set[i] <= cfg.geval.score_set[i - 1])
            throw ConfigError("config: geval score_set must be strictly ascending");
    cfg.geval.evaluator_name = gv.value("evaluator", cfg.endpoints.front().name);
    cfg.geval.probability_source =
        probability_source_from_string(gv.value("probability_source", "token_logprobs"));
    cfg.geval.sample_count = gv.value("sample_count", 20);
    cfg.geval.review_threshold = gv.value("review_threshold", 0.5);
    cfg.endpoint_by_name(cfg.geval.evaluator_name);  // must resolve

    cfg.parallelism = doc.value("parallelism", 4);
    if (cfg.parallelism < 1) throw ConfigError("config: parallelism must be >= 1");
    cfg.run_seed = doc.value("run_seed", 0ULL);
    cfg.output_dir = doc.value("output_dir", "out");
    cfg.agreement_repeats = doc.value("agreement_repeats", 20);

    if (doc.contains("stability_sizes")) {
        cfg.stability_sizes = doc["stability_sizes"].get<std::vector<int>>();
    } else {
        for (int e = 1; e <= q; ++e) cfg.stability_sizes.push_back(e);
    }

    // Normalized snapshot: defaults applied, key order canonical.
    json endpoints_json = json::array();
    for (const auto& e : cfg.endpoints)
        endpoints_json.push_back(json{{"name", e.name},
                                      {"base_url", e.base_url},
                                      {"model_id", e.model_id},
                                      {"auth_ref", e.auth_ref},
                                      {"supports_logprobs", e.supports_logprobs}});
    json styles_json = json::array();
    for (auto s : cfg.styles) styles_json.push_back(to_string(s));
    cfg.snapshot = json{
        {"endpoints", endpoints_json},
        {"dataset_root", cfg.dataset_root.string()},
        {"styles", styles_json},
        {"ensemble", json{{"size", cfg.ensemble.ensemble_size},
                          {"method", to_string(cfg.ensemble.method)},
                          {"min_valid", cfg.ensemble.min_valid}}},
        {"generation",
         json{{"temperature", cfg.generation.temperature},
              {"top_p", cfg.generation.top_p},
              {"max_tokens", cfg.generation.max_tokens},
              {"seed", cfg.generation.request_seed ? json(*cfg.generation.request_seed)
                                                   : json()}}},
        {"transport", json{{"retries", cfg.transport.max_retries},
                           {"backoff_base_ms", cfg.transport.backoff_base_ms}}},
        {"geval", json{{"score_set", cfg.geval.score_set},
                       {"evaluator", cfg.geval.evaluator_name},
                       {"probability_source", to_string(cfg.geval.probability_source)},
                       {"sample_count", cfg.geval.sample_count},
                       {"review_threshold", cfg.geval.review_threshold}}},
        {"parallelism", cfg.parallelism},
        {"run_seed", cfg.run_seed},
        {"output_dir", cfg.output_dir.string()},
        {"agreement_repeats", cfg.agreement_repeats},
        {"stability_sizes", cfg.stability_sizes}};
    cfg.run_id = sha256_hex(cfg.snapshot.dump()).substr(0, 12);
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw ConfigError("invalid JSON in config file " + path.string());
    return run_config_from_json(doc);
}

RunPaths make_run_paths(const RunConfig& config) {
    RunPaths paths;
    paths.output_dir = config.output_dir;
    paths.run_dir = config.output_dir / "runs" / config.run_id;
    paths.cache_dir = config.output_dir / "cache";
    return paths;
}

// ---------------------------------------------------------------------------
// Bounded worker pool. Tasks are indexed so results land in deterministic
// slots regardless of scheduling; the first hard error is rethrown.

namespace {

void run_parallel(int parallelism, int task_count,
                  const std::function<void(int)>& task) {
    if (task_count == 0) return;
    const int workers = std::max(1, std::min(parallelism, task_count));
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < task_count; i = next.fetch_add(1))
                    task(i);
            } catch (...) {
                errors[w] = std::current_exception();
                next.store(task_count);  // drain remaining work
            }
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string sanitized(std::string name) {
    for (char& c : name)
        if (c == '/' || c == '\\' || c == ' ') c = '_';
    return name;
}

RunManifest load_or_init_manifest(const RunConfig& config, const RunPaths& paths) {
    if (std::filesystem::exists(paths.manifest())) {
        auto m = RunManifest::load(paths.manifest());
        if (m.run_id == config.run_id) return m;
    }
    RunManifest m;
    m.run_id = config.run_id;
    m.config_snapshot = config.snapshot;
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// grade

CommandOutcome cmd_grade(const RunConfig& config, Gateway& gateway) {
    const Dataset dataset = load_dataset(config.dataset_root);
    const RunPaths paths = make_run_paths(config);

    struct Task {
        const ModelEndpoint* endpoint;
        PromptStyle style;
        const ProblemEntry* problem;
        const Submission* submission;
    };
    std::vector<Task> tasks;
    for (const auto& endpoint : config.endpoints)
        for (const auto style : config.styles)
            for (const auto& problem : dataset.problems)
                for (const auto& submission : problem.submissions)
                    tasks.push_back({&endpoint, style, &problem, &submission});

    struct Slot {
        std::optional<GradeRecord> grade;
        std::optional<FeedbackRecord> feedback;
        std::string feedback_doc;
        std::vector<std::string> warnings;
    };
    std::vector<Slot> slots(tasks.size());

    run_parallel(config.parallelism, static_cast<int>(tasks.size()), [&](int i) {
        const Task& t = tasks[i];
        Slot& slot = slots[i];
        AggregatedGrade grade;
        try {
            grade = run_ensemble(gateway, t.problem->problem, *t.submission,
                                 *t.endpoint, t.style, config.generation,
                                 config.ensemble, config.transport.max_retries);
        } catch (const EnsembleFailure& e) {
            slot.warnings.push_back(std::string("ensemble failure [") +
                                    t.endpoint->name + ", " + to_string(t.style) +
                                    "]: " + e.what());
            return;
        }
        GradeRecord record;
        record.model = t.endpoint->name;
        record.style = t.style;
        record.problem_id = t.problem->problem.id;
        record.submission_id = t.submission->student_id;
        record.final_score = grade.final_score;
        record.method = grade.method;
        record.valid_count = grade.valid_count;
        record.samples = grade.samples;
        record.comment_set = grade.comment_set;
        slot.grade = std::move(record);

        try {
            const SummaryComment summary = summarize_comments(
                gateway, grade, t.problem->problem, *t.endpoint, config.generation,
                config.transport.max_retries);
            FeedbackRecord fb;
            fb.model = t.endpoint->name;
            fb.style = t.style;
            fb.problem_id = t.problem->problem.id;
            fb.submission_id = t.submission->student_id;
            fb.summary = summary;
            fb.document_path =
                (paths.feedback_docs_dir() / t.endpoint->name / to_string(t.style) /
                 (sanitized(t.submission->student_id) + ".txt"))
                    .string();
            slot.feedback_doc = render_feedback_document(
                summary, t.submission->student_id, t.endpoint->name,
                grade.final_score);
            slot.feedback = std::move(fb);
        } catch (const SummarizationFailure& e) {
            slot.warnings.push_back(std::string("summarization failure [") +
                                    t.endpoint->name + ", " + to_string(t.style) +
                                    "]: " + e.what());
        }
    });

    CommandOutcome outcome;
    std::vector<json> grade_rows, feedback_rows;
    for (const auto& slot : slots) {
        for (const auto& w : slot.warnings) outcome.warnings.push_back(w);
        if (slot.grade) grade_rows.push_back(slot.grade->to_json());
        if (slot.feedback) {
            feedback_rows.push_back(slot.feedback->to_json());
            const std::filesystem::path doc_path = slot.feedback->document_path;
            std::filesystem::create_directories(doc_path.parent_path());
            std::ofstream doc(doc_path, std::ios::binary | std::ios::trunc);
            doc << slot.feedback_doc;
        }
    }
    std::filesystem::create_directories(paths.run_dir);
    write_ndjson(paths.grades(), grade_rows);
    write_ndjson(paths.feedback(), feedback_rows);

    RunManifest manifest = load_or_init_manifest(config, paths);
    manifest.mark("grade", gateway.served_digests());
    manifest.save(paths.manifest());

    outcome.outputs.push_back(paths.grades().string());
    outcome.outputs.push_back(paths.feedback().string());
    return outcome;
}

// ---------------------------------------------------------------------------
// benchmark

namespace {

std::vector<GradeRecord> load_grades(const RunPaths& paths) {
    if (!std::filesystem::exists(paths.grades()))
        throw ConfigError("no grade results at " + paths.grades().string() +
                          "; run grade first");
    std::vector<GradeRecord> records;
    for (const auto& j : read_ndjson(paths.grades()))
        records.push_back(GradeRecord::from_json(j));
    return records;
}

std::vector<int> valid_scores_of(const GradeRecord& r) {
    std::vector<int> scores;
    for (const auto& s : r.samples)
        if (s.valid()) scores.push_back(s.response->score);
    return scores;
}

}  // namespace

CommandOutcome cmd_benchmark(const RunConfig& config,
                             const std::filesystem::path& human_scores_path) {
    const RunPaths paths = make_run_paths(config);
    const auto records = load_grades(paths);
    const HumanScoreSet human = load_human_scores(human_scores_path);

    CommandOutcome outcome;

    // (model, style) -> submission -> valid sample scores
    std::map<std::pair<std::string, PromptStyle>, SamplePool> pools;
    for (const auto& r : records)
        pools[{r.model, r.style}][r.submission_id] = valid_scores_of(r);

    std::vector<json> mae_rows;
    std::ostringstream tables;
    for (const auto style : config.styles) {
        std::map<std::string, SamplePool> by_model;
        for (const auto& [key, pool] : pools)
            if (key.second == style) by_model[key.first] = pool;
        if (by_model.empty()) continue;

        const auto cells = compare_methods(by_model, human);
        for (const auto& [model, row] : cells) {
            for (const auto& [method, value] : row) {
                mae_rows.push_back(json{{"record", "mae"},
                                        {"model", model},
                                        {"style", to_string(style)},
                                        {"method", to_string(method)},
                                        {"ensemble_size", config.ensemble.ensemble_size},
                                        {"m", by_model.at(model).size()},
                                        {"mae", value}});
            }
        }
        tables << "MAE by ensemble method, style=" << to_string(style)
               << ", Q=" << config.ensemble.ensemble_size << "\n\n"
               << render_methods_table(cells) << "\n";
    }

    // Style comparison at the configured aggregation method.
    const bool has_zero =
        std::find(config.styles.begin(), config.styles.end(), PromptStyle::ZeroShot) !=
        config.styles.end();
    const bool has_cot = std::find(config.styles.begin(), config.styles.end(),
                                   PromptStyle::ZeroShotCoT) != config.styles.end();
    if (has_zero && has_cot) {
        std::map<std::string, std::map<std::string, int>> zero_finals, cot_finals;
        for (const auto& [key, pool] : pools) {
            auto& finals = key.second == PromptStyle::ZeroShot ? zero_finals[key.first]
                                                               : cot_finals[key.first];
            for (const auto& [sid, samples] : pool)
                finals[sid] = aggregate_scores(samples, config.ensemble.method);
        }
        const auto rows = compare_styles(zero_finals, cot_finals, human);
        for (const auto& r : rows)
            mae_rows.push_back(json{{"record", "style_diff"},
                                    {"model", r.model},
                                    {"mae_zero_shot", r.mae_zero_shot},
                                    {"mae_codev", r.mae_codev},
                                    {"diff", r.diff}});
        tables << "Zero-shot vs CodEv ("
               << to_string(config.ensemble.method)
               << ", Q=" << config.ensemble.ensemble_size << ")\n\n"
               << render_styles_table(rows) << "\n";
    } else {
        outcome.warnings.push_back(
            "style comparison skipped: both zero_shot and cot styles are needed");
    }

    // Stability curves per (model, style) over submissions with full pools.
    std::filesystem::create_directories(paths.stability_dir());
    for (const auto& [key, pool] : pools) {
        SamplePool full;
        for (const auto& [sid, samples] : pool)
            if (static_cast<int>(samples.size()) == config.ensemble.ensemble_size)
                full[sid] = samples;
        if (full.size() < pool.size())
            outcome.warnings.push_back("stability curve for " + key.first + "/" +
                                       to_string(key.second) + " uses " +
                                       std::to_string(full.size()) + " of " +
                                       std::to_string(pool.size()) +
                                       " submissions (full pools only)");
        if (full.empty()) continue;
        const auto curve = worst_case_curve(full, human, config.ensemble.method,
                                            config.stability_sizes, config.run_seed);
        const auto csv_path = paths.stability_dir() /
                              (sanitized(key.first) + "_" + to_string(key.second) +
                               ".csv");
        std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
        csv << "size,mean_case_mae,worst_case_mae\n";
        for (const auto& p : curve)
            csv << p.size << "," << p.mean_case_mae << "," << p.worst_case_mae << "\n";
        outcome.outputs.push_back(csv_path.string());
    }

    write_ndjson(paths.mae(), mae_rows);
    {
        std::ofstream out(paths.tables(), std::ios::binary | std::ios::trunc);
        out << tables.str();
    }
    RunManifest manifest = load_or_init_manifest(config, paths);
    manifest.mark("benchmark", {});
    manifest.save(paths.manifest());

    outcome.outputs.push_back(paths.mae().string());
    outcome.outputs.push_back(paths.tables().string());
    return outcome;
}

// ---------------------------------------------------------------------------
// agreement

namespace {

std::string render_icc_table(const std::vector<IccRecord>& rows,
                             const std::string& label) {
    std::ostringstream out;
    out << std::left << std::setw(16) << label << " | " << std::setw(9) << "Estimate"
        << " | " << std::setw(9) << "P-value" << " | CI95%\n";
    for (const auto& r : rows) {
        std::ostringstream ci;
        ci << "[" << std::fixed << std::setprecision(2) << r.ci95_low << ", "
           << r.ci95_high << "]";
        std::ostringstream est;
        est << std::fixed << std::setprecision(3) << r.estimate;
        out << std::left << std::setw(16) << r.scope << " | " << std::setw(9)
            << est.str() << " | " << std::setw(9) << format_p_value(r.p_value) << " | "
            << ci.str() << "\n";
    }
    return out.str();
}

IccRecord icc_record_from(const IccReport& rep, const std::string& scope,
                          const RatingMatrix& m) {
    IccRecord rec;
    rec.kind = to_string(rep.kind);
    rec.scope = scope;
    rec.n = m.n();
    rec.k = m.k();
    rec.estimate = rep.estimate;
    rec.f_value = rep.f_value;
    rec.df1 = rep.df1;
    rec.df2 = rep.df2;
    rec.p_value = rep.p_value;
    rec.ci95_low = rep.ci95_low;
    rec.ci95_high = rep.ci95_high;
    return rec;
}

}  // namespace

CommandOutcome cmd_agreement(const RunConfig& config, Gateway* gateway,
                             AgreementMode mode, int repeats, PromptStyle style,
                             const std::optional<std::filesystem::path>& matrix_csv) {
    const RunPaths paths = make_run_paths(config);
    CommandOutcome outcome;
    std::vector<IccRecord> icc_rows;

    if (matrix_csv) {
        const RatingMatrix m = load_matrix_csv(*matrix_csv);
        const IccReport rep = mode == AgreementMode::Intra ? icc_2k(m) : icc_3k(m);
        icc_rows.push_back(icc_record_from(rep, matrix_csv->filename().string(), m));
    } else if (mode == AgreementMode::Intra) {
        if (!gateway)
            throw ConfigError("intra agreement needs a provider or populated cache");
        const Dataset dataset = load_dataset(config.dataset_root);

        struct Cell {
            std::string submission_id;
            std::vector<std::optional<int>> scores;
        };
        for (const auto& endpoint : config.endpoints) {
            std::vector<std::pair<const ProblemEntry*, const Submission*>> subs;
            for (const auto& p : dataset.problems)
                for (const auto& s : p.submissions) subs.push_back({&p, &s});

            std::vector<Cell> cells(subs.size());
            run_parallel(config.parallelism, static_cast<int>(subs.size()), [&](int i) {
                const auto& [problem, submission] = subs[i];
                Cell& cell = cells[i];
                cell.submission_id = submission->student_id;
                cell.scores.assign(repeats, std::nullopt);
                const RenderedPrompt prompt =
                    render_prompt(problem->problem, *submission, style);
                const bool require_reasoning = style == PromptStyle::ZeroShotCoT;
                for (int q = 0; q < repeats; ++q) {
                    for (int attempt = 0; attempt <= config.transport.max_retries;
                         ++attempt) {
                        try {
                            const auto completion = gateway->complete_chat(
                                endpoint, prompt, config.generation,
                                q + repeats * attempt);
                            cell.scores[q] =
                                parse_grade_response(completion.text, require_reasoning)
                                    .score;
                            break;
                        } catch (const ParseError&) {
                        } catch (const SchemaError&) {
                        } catch (const TransientFailure&) {
                        }
                    }
                }
            });

            std::vector<ScoreRecord> records;
            for (const auto& cell : cells)
                for (int q = 0; q < repeats; ++q)
                    if (cell.scores[q])
                        records.push_back(ScoreRecord{cell.submission_id, endpoint.name,
                                                      q, *cell.scores[q]});
            const RatingMatrix m = build_intra_matrix(records, endpoint.name, repeats);
            icc_rows.push_back(icc_record_from(icc_2k(m), endpoint.name, m));
        }
    } else {
        if (config.endpoints.size() < 2)
            throw InsufficientDataError(
                "inter-model agreement needs at least 2 endpoints (k >= 2)");
        const auto records = load_grades(paths);
        std::vector<ScoreRecord> finals;
        std::vector<std::string> models;
        for (const auto& e : config.endpoints) models.push_back(e.name);
        for (const auto& r : records)
            if (r.style == style)
                finals.push_back(ScoreRecord{r.submission_id, r.model, 0, r.final_score});
        if (finals.empty())
            throw ConfigError("no grade results for style " + to_string(style) +
                              "; run grade first");
        const RatingMatrix m = build_inter_matrix(finals, models);
        icc_rows.push_back(icc_record_from(icc_3k(m), "inter", m));
    }

    const std::string mode_name = mode == AgreementMode::Intra ? "intra" : "inter";
    std::vector<json> rows_json;
    for (const auto& r : icc_rows) rows_json.push_back(r.to_json());
    std::filesystem::create_directories(paths.run_dir);
    write_ndjson(paths.agreement(mode_name), rows_json);
    {
        std::ofstream out(paths.agreement_report(mode_name),
                          std::ios::binary | std::ios::trunc);
        if (mode == AgreementMode::Intra)
            out << "Intra-model agreement, ICC(2,k), repeats=" << repeats
                << ", style=" << to_string(style) << "\n\n"
                << render_icc_table(icc_rows, "Model");
        else
            out << "Inter-model agreement, ICC(3,k), style=" << to_string(style)
                << "\n\n"
                << render_icc_table(icc_rows, "Scope");
    }
    RunManifest manifest = load_or_init_manifest(config, paths);
    manifest.mark("agreement_" + mode_name,
                  gateway ? gateway->served_digests() : std::set<std::string>{});
    manifest.save(paths.manifest());

    outcome.outputs.push_back(paths.agreement(mode_name).string());
    outcome.outputs.push_back(paths.agreement_report(mode_name).string());
    return outcome;
}

// ---------------------------------------------------------------------------
// geval / review / report

CommandOutcome cmd_geval(const RunConfig& config, Gateway& gateway) {
    const RunPaths paths = make_run_paths(config);
    if (!std::filesystem::exists(paths.feedback()))
        throw ConfigError("no feedback results at " + paths.feedback().string() +
                          "; run grade first");
    const Dataset dataset = load_dataset(config.dataset_root);
    std::map<std::string, const ProblemEntry*> problems;
    for (const auto& p : dataset.problems) problems[p.problem.id] = &p;

    std::vector<FeedbackRecord> feedback;
    for (const auto& j : read_ndjson(paths.feedback()))
        feedback.push_back(FeedbackRecord::from_json(j));

    const GEvalConfig geval_cfg = config.geval_config();
    struct Slot {
        std::optional<GEvalRecord> record;
        std::string warning;
    };
    std::vector<Slot> slots(feedback.size());
    run_parallel(config.parallelism, static_cast<int>(feedback.size()), [&](int i) {
        const FeedbackRecord& fb = feedback[i];
        auto it = problems.find(fb.problem_id);
        if (it == problems.end()) {
            slots[i].warning = "geval: unknown problem '" + fb.problem_id + "'";
            return;
        }
        try {
            GEvalRecord rec;
            rec.model = fb.model;
            rec.style = fb.style;
            rec.submission_id = fb.submission_id;
            rec.result = geval_score(gateway, it->second->problem.statement,
                                     fb.summary, geval_cfg, config.generation,
                                     config.transport.max_retries);
            slots[i].record = std::move(rec);
        } catch (const ProbabilityExtractionError& e) {
            slots[i].warning = std::string("geval failure [") + fb.model + ", " +
                               to_string(fb.style) + ", " + fb.submission_id +
                               "]: " + e.what();
        }
    });

    CommandOutcome outcome;
    std::vector<json> rows;
    for (const auto& slot : slots) {
        if (!slot.warning.empty()) outcome.warnings.push_back(slot.warning);
        if (slot.record) rows.push_back(slot.record->to_json());
    }
    write_ndjson(paths.geval(), rows);

    RunManifest manifest = load_or_init_manifest(config, paths);
    manifest.mark("geval", gateway.served_digests());
    manifest.save(paths.manifest());

    outcome.outputs.push_back(paths.geval().string());
    return outcome;
}

CommandOutcome cmd_review(const RunConfig& config) {
    const RunPaths paths = make_run_paths(config);
    if (!std::filesystem::exists(paths.geval()))
        throw ConfigError("no geval results at " + paths.geval().string() +
                          "; run geval first");
    std::map<std::string, std::string> doc_paths;
    if (std::filesystem::exists(paths.feedback())) {
        for (const auto& j : read_ndjson(paths.feedback())) {
            const auto fb = FeedbackRecord::from_json(j);
            doc_paths[fb.model + "|" + to_string(fb.style) + "|" + fb.submission_id] =
                fb.document_path;
        }
    }

    std::vector<std::pair<std::string, GEvalResult>> results;
    for (const auto& j : read_ndjson(paths.geval())) {
        const auto rec = GEvalRecord::from_json(j);
        results.emplace_back(
            rec.model + "|" + to_string(rec.style) + "|" + rec.submission_id,
            rec.result);
    }
    const auto queue = review_queue(results);

    std::ostringstream out;
    if (queue.empty()) {
        out << "nothing to review\n";
    } else {
        out << "flagged feedback, lowest quality first:\n";
        for (const auto& [id, result] : queue) {
            out << "  " << std::fixed << std::setprecision(3) << result.normalized
                << "  " << id;
            auto it = doc_paths.find(id);
            if (it != doc_paths.end()) out << "  " << it->second;
            out << "\n";
        }
    }
    std::ofstream file(paths.review(), std::ios::binary | std::ios::trunc);
    file << out.str();

    CommandOutcome outcome;
    outcome.outputs.push_back(paths.review().string());
    outcome.outputs.push_back(out.str());
    return outcome;
}

CommandOutcome cmd_report(const RunConfig& config) {
    const RunPaths paths = make_run_paths(config);
    std::ostringstream out;
    out << "# Run " << config.run_id << "\n\n";
    if (std::filesystem::exists(paths.grades())) {
        const auto rows = read_ndjson(paths.grades());
        out << "Grades: " << rows.size() << " (model, style, submission) results\n\n";
    }
    for (const auto& path : {paths.tables(), paths.agreement_report("intra"),
                             paths.agreement_report("inter"), paths.review()}) {
        if (!std::filesystem::exists(path)) continue;
        std::ifstream in(path, std::ios::binary);
        out << "## " << path.filename().string() << "\n\n";
        out << in.rdbuf() << "\n";
    }
    std::filesystem::create_directories(paths.run_dir);
    std::ofstream file(paths.report(), std::ios::binary | std::ios::trunc);
    file << out.str();

    CommandOutcome outcome;
    outcome.outputs.push_back(paths.report().string());
    return outcome;
}

}  // namespace codev
