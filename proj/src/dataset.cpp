#include "codev/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "codev/errors.hpp"

namespace codev {

using json = nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Rubric load_rubric(const std::filesystem::path& path) {
    json doc = json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded())
        throw ConfigError("invalid JSON in rubric file " + path.string());
    Rubric rubric;
    rubric.total_scale = doc.value("total_scale", 100);
    if (!doc.contains("criteria") || !doc["criteria"].is_array())
        throw ConfigError("rubric file missing 'criteria' array: " + path.string());
    for (const auto& c : doc["criteria"]) {
        CriterionSpec spec;
        spec.name = c.value("name", "");
        spec.max_points = c.value("max_points", 0);
        spec.description = c.value("description", "");
        rubric.criteria.push_back(std::move(spec));
    }
    return rubric;
}

std::vector<std::filesystem::path> sorted_dirs(const std::filesystem::path& parent) {
    std::vector<std::filesystem::path> dirs;
    if (!std::filesystem::is_directory(parent)) return dirs;
    for (const auto& entry : std::filesystem::directory_iterator(parent))
        if (entry.is_directory()) dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& root) {
    if (!std::filesystem::is_directory(root))
        throw ConfigError("dataset root does not exist: " + root.string());

    Dataset dataset;
    for (const auto& pdir : sorted_dirs(root / "problems")) {
        const std::string pid = pdir.filename().string();
        ProblemEntry entry;
        entry.problem.id = pid;
        entry.problem.statement = read_file(pdir / "statement.txt");
        if (entry.problem.statement.find_first_not_of(" \t\r\n") == std::string::npos)
            throw ConfigError("problem '" + pid + "' has an empty statement");
        entry.problem.rubric = load_rubric(pdir / "rubric.json");
        auto validation = validate_rubric(entry.problem.rubric);
        if (!validation.ok())
            throw ConfigError("problem '" + pid + "' rubric invalid: " +
                              validation.joined());

        for (const auto& sdir : sorted_dirs(pdir / "submissions")) {
            const std::string sid = sdir.filename().string();
            Submission sub;
            sub.student_id = pid + "/" + sid;
            for (const auto& f : std::filesystem::directory_iterator(sdir)) {
                if (!f.is_regular_file()) continue;
                const std::string name = f.path().filename().string();
                if (name.rfind("code.", 0) == 0) sub.source_code = read_file(f.path());
            }
            if (sub.source_code.empty())
                throw ConfigError("submission '" + sub.student_id +
                                  "' has no code.* file (or it is empty)");
            const auto output_path = sdir / "run_output.txt";
            if (std::filesystem::exists(output_path))
                sub.execution_output = read_file(output_path);
            entry.submissions.push_back(std::move(sub));
        }
        if (entry.submissions.empty())
            throw ConfigError("problem '" + pid + "' has no submissions");
        dataset.problems.push_back(std::move(entry));
    }
    if (dataset.problems.empty())
        throw ConfigError("dataset has no problems under " +
                          (root / "problems").string());
    return dataset;
}

HumanScoreSet load_human_scores(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw ConfigError("cannot read human scores: " + csv_path.string());
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError("human scores file is empty: " + csv_path.string());
    HumanScoreSet scores;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos)
            throw ConfigError("bad human score row: " + line);
        std::string id = line.substr(0, comma);
        std::string value = line.substr(comma + 1);
        while (!value.empty() && (value.back() == '\r' || value.back() == ' '))
            value.pop_back();
        try {
            scores[id] = std::stoi(value);
        } catch (const std::exception&) {
            throw ConfigError("non-integer human score for '" + id + "': " + value);
        }
    }
    return scores;
}

}  // namespace codev
