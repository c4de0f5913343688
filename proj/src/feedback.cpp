#include "codev/feedback.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <sstream>

#include "codev/errors.hpp"

namespace codev {

namespace {

constexpr const char* kOverviewHeading = "Overview Comments";

std::string trimmed(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::string SummaryComment::full_text() const {
    std::ostringstream out;
    for (const auto& [name, text] : sections) out << name << ":\n" << text << "\n\n";
    out << kOverviewHeading << ":\n" << overview << "\n";
    return out.str();
}

std::string to_string(ProbabilitySource source) {
    return source == ProbabilitySource::TokenLogprobs ? "token_logprobs"
                                                      : "empirical_sampling";
}

ProbabilitySource probability_source_from_string(const std::string& name) {
    if (name == "token_logprobs") return ProbabilitySource::TokenLogprobs;
    if (name == "empirical_sampling") return ProbabilitySource::EmpiricalSampling;
    throw ConfigError("unknown probability source '" + name + "'");
}

RenderedPrompt build_summary_prompt(const AggregatedGrade& grade,
                                    const ProblemSpec& problem) {
    std::ostringstream user;
    user << "Below are " << grade.comment_set.size()
         << " feedback comments produced by independent reviews of one student's "
            "submission, together with the problem and grading criteria.\n\n";
    user << "problem statement:\n" << problem.statement;
    if (!problem.statement.empty() && problem.statement.back() != '\n') user << "\n";
    user << "criteria:\n";
    for (const auto& c : problem.rubric.criteria)
        user << "- " << c.name << " (0-" << c.max_points << "): " << c.description
             << "\n";
    user << "\ncomments:\n";
    for (size_t i = 0; i < grade.comment_set.size(); ++i)
        user << (i + 1) << ". " << grade.comment_set[i] << "\n";
    user << "\nSummarize these comments into one consolidated review of the "
            "submission. Respond in plain text using exactly the following "
            "section headings, in this order, each on its own line ending with "
            "a colon, with one paragraph under each heading:\n";
    for (const auto& c : problem.rubric.criteria) user << c.name << ":\n";
    user << kOverviewHeading << ":\n";
    user << "Do not add any other headings or any text outside the sections.";

    RenderedPrompt prompt;
    prompt.system_text =
        "You are an experienced programming instructor consolidating code-review "
        "feedback for a student.";
    prompt.user_text = user.str();
    prompt.style = PromptStyle::ZeroShot;
    prompt.response_schema_version = kSummarySchemaVersion;
    return prompt;
}

SummaryComment parse_summary_sections(const std::string& text, const Rubric& rubric) {
    std::vector<std::string> headings;
    for (const auto& c : rubric.criteria) headings.push_back(c.name);
    headings.push_back(kOverviewHeading);

    // Locate each heading at a line start, in order.
    std::vector<size_t> starts(headings.size(), std::string::npos);
    size_t from = 0;
    for (size_t h = 0; h < headings.size(); ++h) {
        const std::string needle = headings[h] + ":";
        size_t pos = from;
        while (true) {
            pos = text.find(needle, pos);
            if (pos == std::string::npos) break;
            const bool at_line_start = pos == 0 || text[pos - 1] == '\n';
            if (at_line_start) break;
            pos += needle.size();
        }
        if (pos == std::string::npos)
            throw SchemaError("summary reply is missing section '" + headings[h] + "'",
                              text);
        starts[h] = pos;
        from = pos + needle.size();
    }

    SummaryComment out;
    for (size_t h = 0; h < headings.size(); ++h) {
        const size_t body_start = starts[h] + headings[h].size() + 1;
        const size_t body_end = h + 1 < headings.size() ? starts[h + 1] : text.size();
        const std::string body = trimmed(text.substr(body_start, body_end - body_start));
        if (h + 1 < headings.size())
            out.sections.emplace_back(headings[h], body);
        else
            out.overview = body;
    }
    return out;
}

SummaryComment summarize_comments(Gateway& gateway, const AggregatedGrade& grade,
                                  const ProblemSpec& problem,
                                  const ModelEndpoint& endpoint,
                                  const GenerationParams& params, int max_retries) {
    if (grade.comment_set.empty())
        throw SummarizationFailure("no valid comments to summarize for submission '" +
                                       grade.submission_id + "'",
                                   "");
    const RenderedPrompt prompt = build_summary_prompt(grade, problem);
    std::string last_raw;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        try {
            const RawCompletion completion =
                gateway.complete_chat(endpoint, prompt, params, attempt);
            SummaryComment summary = parse_summary_sections(completion.text,
                                                            problem.rubric);
            summary.source_sample_count = grade.valid_count;
            return summary;
        } catch (const SchemaError& e) {
            last_raw = e.raw_text;
        } catch (const TransientFailure& e) {
            last_raw = e.what();
        }
    }
    throw SummarizationFailure("summary for submission '" + grade.submission_id +
                                   "' was malformed after " +
                                   std::to_string(max_retries) + " retries",
                               last_raw);
}

RenderedPrompt build_geval_prompt(const std::string& task_description,
                                  const std::string& feedback_text,
                                  const std::vector<int>& score_set) {
    const int lo = score_set.front();
    const int hi = score_set.back();
    std::ostringstream user;
    user << "Rate the quality of the code-review feedback below on a scale from "
         << lo << " to " << hi << ", where " << lo << " is very poor and " << hi
         << " is excellent. Consider whether the feedback is specific, accurate "
            "with respect to the task, constructive, and clearly written.\n\n";
    user << "task description:\n" << task_description;
    if (!task_description.empty() && task_description.back() != '\n') user << "\n";
    user << "\nfeedback:\n" << feedback_text;
    if (!feedback_text.empty() && feedback_text.back() != '\n') user << "\n";
    user << "\nRespond with a single score from " << lo << " to " << hi
         << ". Output only the number.";

    RenderedPrompt prompt;
    prompt.system_text = "You are a strict evaluator of code-review feedback quality.";
    prompt.user_text = user.str();
    prompt.style = PromptStyle::ZeroShot;
    prompt.response_schema_version = kGevalSchemaVersion;
    return prompt;
}

GEvalResult geval_from_distribution(const std::map<int, double>& mass,
                                    const std::vector<int>& score_set,
                                    double review_threshold) {
    if (score_set.size() < 2)
        throw ConfigError("geval: score set needs at least 2 values");
    for (size_t i = 1; i < score_set.size(); ++i)
        if (score_set[i] <= score_set[i - 1])
            throw ConfigError("geval: score set must be strictly ascending");

    double total = 0;
    for (int s : score_set) {
        auto it = mass.find(s);
        if (it != mass.end()) {
            if (it->second < 0) throw ConfigError("geval: negative probability mass");
            total += it->second;
        }
    }
    if (total <= 0)
        throw ProbabilityExtractionError(
            "geval: no probability mass on any score-set member");

    GEvalResult out;
    double raw = 0;
    for (int s : score_set) {
        auto it = mass.find(s);
        const double p = it == mass.end() ? 0.0 : it->second / total;
        out.distribution[s] = p;
        raw += p * s;
    }
    out.raw_score = raw;
    const int lo = score_set.front();
    const int hi = score_set.back();
    out.normalized = (raw - lo) / static_cast<double>(hi - lo);
    out.flagged_for_review = out.normalized < review_threshold;
    return out;
}

namespace {

// First integer appearing in the text, if any.
std::optional<int> first_integer(const std::string& text) {
    for (size_t i = 0; i < text.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(text[i]))) {
            size_t end = i;
            while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end])))
                ++end;
            try {
                return std::stoi(text.substr(i, end - i));
            } catch (const std::exception&) {
                return std::nullopt;
            }
        }
    }
    return std::nullopt;
}

std::optional<int> score_token_value(const std::string& token,
                                     const std::vector<int>& score_set) {
    const std::string t = trimmed(token);
    for (int s : score_set)
        if (t == std::to_string(s)) return s;
    return std::nullopt;
}

std::map<int, double> mass_from_logprobs(const RawCompletion& completion,
                                         const std::vector<int>& score_set) {
    if (!completion.token_logprobs)
        throw ProbabilityExtractionError(
            "geval: evaluator response carries no token log-probabilities");
    for (const auto& tok : *completion.token_logprobs) {
        if (!score_token_value(tok.token, score_set)) continue;
        // Score position found: collect mass over the alternatives (which
        // include the sampled token itself in chat-completions replies).
        std::map<int, double> mass;
        for (const auto& [alt, lp] : tok.alternatives)
            if (auto s = score_token_value(alt, score_set))
                mass[*s] += std::exp(lp);
        if (mass.empty()) mass[*score_token_value(tok.token, score_set)] = 1.0;
        return mass;
    }
    throw ProbabilityExtractionError(
        "geval: no token matching a score-set member in the evaluator reply");
}

}  // namespace

GEvalResult geval_score(Gateway& gateway, const std::string& task_description,
                        const SummaryComment& feedback, const GEvalConfig& config,
                        const GenerationParams& params, int max_retries) {
    const RenderedPrompt prompt =
        build_geval_prompt(task_description, feedback.full_text(), config.score_set);

    if (config.probability_source == ProbabilitySource::TokenLogprobs) {
        const RawCompletion completion =
            gateway.complete_chat(config.evaluator, prompt, params, 0);
        const auto mass = mass_from_logprobs(completion, config.score_set);
        return geval_from_distribution(mass, config.score_set, config.review_threshold);
    }

    // Empirical sampling: N independent draws, per-slot retry on replies
    // that carry no usable score.
    std::map<int, double> counts;
    int valid = 0;
    for (int nth = 0; nth < config.sample_count; ++nth) {
        for (int attempt = 0; attempt <= max_retries; ++attempt) {
            const int sample_index = nth + config.sample_count * attempt;
            try {
                const RawCompletion completion =
                    gateway.complete_chat(config.evaluator, prompt, params, sample_index);
                auto score = first_integer(completion.text);
                if (!score || std::find(config.score_set.begin(), config.score_set.end(),
                                        *score) == config.score_set.end())
                    continue;
                counts[*score] += 1.0;
                ++valid;
                break;
            } catch (const TransientFailure&) {
            }
        }
    }
    if (valid == 0)
        throw ProbabilityExtractionError(
            "geval: no evaluator sample produced a score in the score set");
    return geval_from_distribution(counts, config.score_set, config.review_threshold);
}

std::vector<std::pair<std::string, GEvalResult>> review_queue(
    const std::vector<std::pair<std::string, GEvalResult>>& results) {
    std::vector<std::pair<std::string, GEvalResult>> flagged;
    for (const auto& r : results)
        if (r.second.flagged_for_review) flagged.push_back(r);
    std::sort(flagged.begin(), flagged.end(), [](const auto& a, const auto& b) {
        if (a.second.normalized != b.second.normalized)
            return a.second.normalized < b.second.normalized;
        return a.first < b.first;
    });
    return flagged;
}

std::string render_feedback_document(const SummaryComment& summary,
                                     const std::string& submission_id,
                                     const std::string& model, int final_score) {
    std::ostringstream out;
    out << "submission: " << submission_id << "\n";
    out << "graded by: " << model << "\n";
    out << "final score: " << final_score << "\n";
    out << "summarized from " << summary.source_sample_count << " review samples\n\n";
    out << summary.full_text();
    return out.str();
}

}  // namespace codev
