#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codev/gateway.hpp"

namespace codev {

/// Fixture-driven provider for deterministic runs without a model server.
///
/// A fixtures directory holds manifest.json:
///
///   {"rules": [
///     {"match": {"user_contains": "..."} , "respond": {...}},
///     {"default": true, "respond": {"grade": {"score": {"hash_range": [60, 95]},
///                                             "comment": "c-{digest8}"}}}
///   ]}
///
/// match keys (all present must hold): digest, model, query_index,
/// user_contains, system_contains. Respond kinds:
///   body            verbatim chat-completions response object
///   content         assistant text (body synthesized); optional
///                   score_logprobs {"4": 0.5, ...} attaches logprobs
///   grade           synthesized grading JSON; score is an integer or
///                   {"hash_range": [lo, hi]} derived from the digest
///   raw_content     like content but without any JSON wrapping conveniences
///   status          forced HTTP status (e.g. 503) with empty body
///   transport_error simulated unreachable endpoint
///   script          array of respond objects applied per call, last repeats
///
/// Templates in text fields substitute {digest8}, {q} and {model}.
class MockProvider : public ChatProvider {
public:
    explicit MockProvider(const std::filesystem::path& fixtures_dir);
    explicit MockProvider(nlohmann::json manifest);

    ProviderResult complete(const ModelEndpoint& endpoint,
                            const RenderedPrompt& prompt,
                            const GenerationParams& params,
                            int query_index) override;

    long call_count() const { return call_count_; }

private:
    struct Rule {
        nlohmann::json match;
        nlohmann::json respond;
        bool is_default = false;
        int calls = 0;  // for script sequencing
    };

    ProviderResult render_response(const nlohmann::json& respond,
                                   const std::string& digest,
                                   const std::string& model, int query_index,
                                   Rule& rule);

    std::vector<Rule> rules_;
    std::mutex mutex_;
    long call_count_ = 0;
};

}  // namespace codev
