#include "codev/run_store.hpp"

#include <fstream>

#include "codev/errors.hpp"

namespace codev {

using json = nlohmann::json;

namespace {

json sample_to_json(const QuerySample& s) {
    json j{{"q", s.query_index}, {"digest", s.completion_digest}, {"valid", s.valid()}};
    if (s.valid()) {
        j["score"] = s.response->score;
        j["comment"] = s.response->comment;
        j["reasoning_steps"] = s.response->reasoning_steps;
    }
    return j;
}

QuerySample sample_from_json(const json& j, const std::string& submission_id) {
    QuerySample s;
    s.submission_id = submission_id;
    s.query_index = j.value("q", 0);
    s.completion_digest = j.value("digest", "");
    if (j.value("valid", false)) {
        GradeResponse r;
        r.score = j.value("score", 0);
        r.comment = j.value("comment", "");
        r.reasoning_steps = j.value("reasoning_steps", "");
        s.response = std::move(r);
    }
    return s;
}

}  // namespace

json GradeRecord::to_json() const {
    json samples_json = json::array();
    for (const auto& s : samples) samples_json.push_back(sample_to_json(s));
    return json{{"record", "grade"},
                {"model", model},
                {"style", codev::to_string(style)},
                {"problem", problem_id},
                {"submission", submission_id},
                {"final_score", final_score},
                {"method", codev::to_string(method)},
                {"valid_count", valid_count},
                {"samples", samples_json},
                {"comment_set", comment_set}};
}

GradeRecord GradeRecord::from_json(const json& j) {
    GradeRecord r;
    r.model = j.value("model", "");
    r.style = prompt_style_from_string(j.value("style", "cot"));
    r.problem_id = j.value("problem", "");
    r.submission_id = j.value("submission", "");
    r.final_score = j.value("final_score", 0);
    r.method = aggregation_method_from_string(j.value("method", "mode"));
    r.valid_count = j.value("valid_count", 0);
    for (const auto& s : j.value("samples", json::array()))
        r.samples.push_back(sample_from_json(s, r.submission_id));
    r.comment_set = j.value("comment_set", std::vector<std::string>{});
    return r;
}

json FeedbackRecord::to_json() const {
    json sections = json::array();
    for (const auto& [name, text] : summary.sections)
        sections.push_back(json{{"criterion", name}, {"text", text}});
    return json{{"record", "feedback"},
                {"model", model},
                {"style", codev::to_string(style)},
                {"problem", problem_id},
                {"submission", submission_id},
                {"sections", sections},
                {"overview", summary.overview},
                {"source_sample_count", summary.source_sample_count},
                {"document_path", document_path}};
}

FeedbackRecord FeedbackRecord::from_json(const json& j) {
    FeedbackRecord r;
    r.model = j.value("model", "");
    r.style = prompt_style_from_string(j.value("style", "cot"));
    r.problem_id = j.value("problem", "");
    r.submission_id = j.value("submission", "");
    for (const auto& s : j.value("sections", json::array()))
        r.summary.sections.emplace_back(s.value("criterion", ""), s.value("text", ""));
    r.summary.overview = j.value("overview", "");
    r.summary.source_sample_count = j.value("source_sample_count", 0);
    r.document_path = j.value("document_path", "");
    return r;
}

json GEvalRecord::to_json() const {
    json dist = json::object();
    for (const auto& [s, p] : result.distribution) dist[std::to_string(s)] = p;
    return json{{"record", "geval"},
                {"model", model},
                {"style", codev::to_string(style)},
                {"submission", submission_id},
                {"distribution", dist},
                {"raw_score", result.raw_score},
                {"normalized", result.normalized},
                {"flagged", result.flagged_for_review}};
}

GEvalRecord GEvalRecord::from_json(const json& j) {
    GEvalRecord r;
    r.model = j.value("model", "");
    r.style = prompt_style_from_string(j.value("style", "cot"));
    r.submission_id = j.value("submission", "");
    const json dist = j.value("distribution", json::object());
    for (auto it = dist.begin(); it != dist.end(); ++it)
        r.result.distribution[std::stoi(it.key())] = it.value().get<double>();
    r.result.raw_score = j.value("raw_score", 0.0);
    r.result.normalized = j.value("normalized", 0.0);
    r.result.flagged_for_review = j.value("flagged", false);
    return r;
}

json IccRecord::to_json() const {
    return json{{"record", "icc"},   {"kind", kind},         {"scope", scope},
                {"n", n},            {"k", k},               {"estimate", estimate},
                {"f_value", f_value}, {"df1", df1},           {"df2", df2},
                {"p_value", p_value}, {"ci95_low", ci95_low}, {"ci95_high", ci95_high}};
}

IccRecord IccRecord::from_json(const json& j) {
    IccRecord r;
    r.kind = j.value("kind", "");
    r.scope = j.value("scope", "");
    r.n = j.value("n", 0);
    r.k = j.value("k", 0);
    r.estimate = j.value("estimate", 0.0);
    r.f_value = j.value("f_value", 0.0);
    r.df1 = j.value("df1", 0.0);
    r.df2 = j.value("df2", 0.0);
    r.p_value = j.value("p_value", 0.0);
    r.ci95_low = j.value("ci95_low", 0.0);
    r.ci95_high = j.value("ci95_high", 0.0);
    return r;
}

void write_ndjson(const std::filesystem::path& path,
                  const std::vector<json>& records) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    for (const auto& r : records) out << r.dump() << "\n";
}

std::vector<json> read_ndjson(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::vector<json> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw ConfigError("corrupt record in " + path.string() + ": " + line);
        records.push_back(std::move(j));
    }
    return records;
}

void RunManifest::mark(const std::string& stage, std::set<std::string> digests) {
    auto& s = stages[stage];
    s.complete = true;
    s.digests.insert(digests.begin(), digests.end());
}

void RunManifest::save(const std::filesystem::path& path) const {
    json stages_json = json::object();
    for (const auto& [name, stage] : stages) {
        stages_json[name] = json{{"complete", stage.complete},
                                 {"digests", std::vector<std::string>(
                                                 stage.digests.begin(),
                                                 stage.digests.end())}};
    }
    json doc{{"run_id", run_id}, {"config", config_snapshot}, {"stages", stages_json}};
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << doc.dump(1) << "\n";
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read manifest " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("corrupt manifest " + path.string());
    RunManifest m;
    m.run_id = doc.value("run_id", "");
    m.config_snapshot = doc.value("config", json::object());
    const json stages = doc.value("stages", json::object());
    for (auto it = stages.begin(); it != stages.end(); ++it) {
        Stage s;
        s.complete = it.value().value("complete", false);
        for (const auto& d : it.value().value("digests", json::array()))
            s.digests.insert(d.get<std::string>());
        m.stages[it.key()] = std::move(s);
    }
    return m;
}

}  // namespace codev
