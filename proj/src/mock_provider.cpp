#include "codev/mock_provider.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "codev/errors.hpp"

namespace codev {

using json = nlohmann::json;

namespace {

json load_manifest(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.json";
    std::ifstream in(path);
    if (!in) throw ConfigError("mock fixtures: cannot open " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw ConfigError("mock fixtures: invalid JSON in " + path.string());
    return doc;
}

std::string substitute(std::string text, const std::string& digest,
                       const std::string& model, int query_index) {
    auto replace_all = [&text](const std::string& from, const std::string& to) {
        for (size_t pos = text.find(from); pos != std::string::npos;
             pos = text.find(from, pos + to.size()))
            text.replace(pos, from.size(), to);
    };
    replace_all("{digest8}", digest.substr(0, 8));
    replace_all("{q}", std::to_string(query_index));
    replace_all("{model}", model);
    return text;
}

uint64_t digest_to_u64(const std::string& digest) {
    return std::stoull(digest.substr(0, 16), nullptr, 16);
}

int resolve_score(const json& spec, const std::string& digest) {
    if (spec.is_number_integer()) return spec.get<int>();
    if (spec.is_object() && spec.contains("hash_range")) {
        const int lo = spec["hash_range"][0].get<int>();
        const int hi = spec["hash_range"][1].get<int>();
        return lo + static_cast<int>(digest_to_u64(digest) %
                                     static_cast<uint64_t>(hi - lo + 1));
    }
    throw ConfigError("mock fixtures: bad grade score spec: " + spec.dump());
}

json chat_body(const std::string& model, const std::string& digest,
               const std::string& content, const json& logprobs) {
    json choice{{"index", 0},
                {"message", json{{"role", "assistant"}, {"content", content}}},
                {"finish_reason", "stop"}};
    if (!logprobs.is_null()) choice["logprobs"] = logprobs;
    return json{{"id", "mock-" + digest.substr(0, 8)},
                {"object", "chat.completion"},
                {"model", model},
                {"choices", json::array({choice})}};
}

// Builds a logprobs block whose first token is the highest-probability
// member of the given score distribution, with the rest as alternatives.
json logprobs_from_distribution(const json& dist) {
    std::string best;
    double best_p = -1;
    json alts = json::array();
    for (auto it = dist.begin(); it != dist.end(); ++it) {
        const double p = it.value().get<double>();
        alts.push_back(json{{"token", it.key()}, {"logprob", std::log(p)}});
        if (p > best_p) {
            best_p = p;
            best = it.key();
        }
    }
    json entry{{"token", best}, {"logprob", std::log(best_p)}, {"top_logprobs", alts}};
    return json{{"content", json::array({entry})}};
}

// user_contains accepts a string or an array of strings (all must appear).
bool contains_all(const std::string& text, const json& needles) {
    if (needles.is_string())
        return text.find(needles.get<std::string>()) != std::string::npos;
    for (const auto& n : needles)
        if (text.find(n.get<std::string>()) == std::string::npos) return false;
    return true;
}

bool matches(const json& match, const std::string& digest, const std::string& model,
             const RenderedPrompt& prompt, int query_index) {
    if (match.contains("digest") && match["digest"].get<std::string>() != digest)
        return false;
    if (match.contains("model") && match["model"].get<std::string>() != model)
        return false;
    if (match.contains("query_index") && match["query_index"].get<int>() != query_index)
        return false;
    if (match.contains("user_contains") &&
        !contains_all(prompt.user_text, match["user_contains"]))
        return false;
    if (match.contains("system_contains") &&
        !contains_all(prompt.system_text, match["system_contains"]))
        return false;
    return true;
}

}  // namespace

MockProvider::MockProvider(const std::filesystem::path& fixtures_dir)
    : MockProvider(load_manifest(fixtures_dir)) {}

MockProvider::MockProvider(json manifest) {
    if (!manifest.contains("rules") || !manifest["rules"].is_array())
        throw ConfigError("mock fixtures: manifest needs a 'rules' array");
    for (const auto& r : manifest["rules"]) {
        Rule rule;
        rule.match = r.value("match", json::object());
        rule.respond = r.value("respond", json::object());
        rule.is_default = r.value("default", false);
        rules_.push_back(std::move(rule));
    }
}

ProviderResult MockProvider::render_response(const json& respond,
                                             const std::string& digest,
                                             const std::string& model,
                                             int query_index, Rule& rule) {
    if (respond.contains("script")) {
        const auto& steps = respond["script"];
        const int idx = std::min(rule.calls - 1, static_cast<int>(steps.size()) - 1);
        return render_response(steps[idx], digest, model, query_index, rule);
    }
    if (respond.contains("transport_error")) {
        return ProviderResult{0, "", 0, "mock: connection refused"};
    }
    if (respond.contains("status") && respond["status"].get<int>() != 200) {
        return ProviderResult{respond["status"].get<int>(),
                              respond.value("body_text", ""), 0, ""};
    }

    std::string content;
    json logprobs;
    if (respond.contains("body")) {
        return ProviderResult{200, respond["body"].dump(), 0, ""};
    }
    if (respond.contains("grade")) {
        const auto& g = respond["grade"];
        const int score = resolve_score(g.value("score", json(80)), digest);
        json reply{{"reasoning_steps",
                    substitute(g.value("reasoning", std::string("Step-by-step breakdown "
                                                                "of the evaluation "
                                                                "process: sample {q}.")),
                               digest, model, query_index)},
                   {"comment", substitute(g.value("comment", std::string(
                                                                 "Mock comment {digest8}.")),
                                          digest, model, query_index)},
                   {"score", score}};
        content = reply.dump();
    } else if (respond.contains("content")) {
        content = substitute(respond["content"].get<std::string>(), digest, model,
                             query_index);
        if (respond.contains("score_logprobs"))
            logprobs = logprobs_from_distribution(respond["score_logprobs"]);
    } else if (respond.contains("raw_content")) {
        content = substitute(respond["raw_content"].get<std::string>(), digest, model,
                             query_index);
    } else {
        throw ConfigError("mock fixtures: rule has no usable respond spec: " +
                          respond.dump());
    }
    return ProviderResult{200, chat_body(model, digest, content, logprobs).dump(), 0, ""};
}

ProviderResult MockProvider::complete(const ModelEndpoint& endpoint,
                                      const RenderedPrompt& prompt,
                                      const GenerationParams& params,
                                      int query_index) {
    const std::string digest = request_digest(endpoint, prompt, params, query_index);
    std::lock_guard<std::mutex> lock(mutex_);
    ++call_count_;
    for (auto& rule : rules_) {
        if (rule.is_default ||
            matches(rule.match, digest, endpoint.model_id, prompt, query_index)) {
            ++rule.calls;
            return render_response(rule.respond, digest, endpoint.model_id, query_index,
                                   rule);
        }
    }
    throw FixtureMissError("mock fixtures: no rule matches digest " + digest +
                           " (model " + endpoint.model_id + ", q=" +
                           std::to_string(query_index) + ")");
}

}  // namespace codev
