#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "codev/prompt.hpp"

namespace codev {

struct ModelEndpoint {
    std::string name;
    std::string base_url;
    std::string model_id;
    std::string auth_ref;  // env var holding the bearer token; empty = no auth
    bool supports_logprobs = false;
};

struct GenerationParams {
    double temperature = 0.7;
    int max_tokens = 2048;
    double top_p = 1.0;
    std::optional<long> request_seed;
};

/// Log-probability record for one sampled token: the token, its logprob and
/// the top alternatives at the same position.
struct TokenLogprob {
    std::string token;
    double logprob = 0;
    std::vector<std::pair<std::string, double>> alternatives;
};

struct RawCompletion {
    std::string text;
    std::optional<std::vector<TokenLogprob>> token_logprobs;
    long latency_ms = 0;
    std::string request_digest;
};

/// SHA-256 over the canonical serialization of the request tuple
/// (endpoint name, model id, full prompt, params, query index).
std::string request_digest(const ModelEndpoint& endpoint,
                           const RenderedPrompt& prompt,
                           const GenerationParams& params, int query_index);

/// nlohmann dump of the tuple that request_digest hashes (exposed so tests
/// can verify the digest independently).
std::string request_digest_preimage(const ModelEndpoint& endpoint,
                                    const RenderedPrompt& prompt,
                                    const GenerationParams& params,
                                    int query_index);

std::string sha256_hex(const std::string& data);

/// Content-addressed store of verbatim response bodies, one file per digest
/// at <dir>/<first-2-hex>/<digest>.resp. Writers go through a temp file and
/// rename, so concurrent writers of identical content are safe.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    struct Entry {
        std::string body;
        long latency_ms = 0;
    };

    std::optional<Entry> get(const std::string& digest) const;
    void put(const std::string& digest, const std::string& endpoint_name,
             const std::string& model_id, int query_index, const Entry& entry) const;

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

/// What a provider returns for a single attempt. status 0 = transport error.
struct ProviderResult {
    int status = 0;
    std::string body;
    long latency_ms = 0;
    std::string error;  // transport error description when status == 0
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual ProviderResult complete(const ModelEndpoint& endpoint,
                                    const RenderedPrompt& prompt,
                                    const GenerationParams& params,
                                    int query_index) = 0;
};

/// OpenAI-compatible chat-completions client (POST <base_url>/chat/completions,
/// bearer token from the endpoint's auth env var).
class HttpChatProvider : public ChatProvider {
public:
    explicit HttpChatProvider(int connect_timeout_s = 10, int read_timeout_s = 120);
    ProviderResult complete(const ModelEndpoint& endpoint,
                            const RenderedPrompt& prompt,
                            const GenerationParams& params,
                            int query_index) override;

private:
    int connect_timeout_s_;
    int read_timeout_s_;
};

struct RetryPolicy {
    int max_retries = 3;  // attempts = max_retries + 1
    int backoff_base_ms = 250;
    double backoff_factor = 2.0;
};

struct GatewayStats {
    std::atomic<long> provider_calls{0};
    std::atomic<long> cache_hits{0};
    std::atomic<long> retries{0};
};

/// Front door for all completions: content-addressed caching, retry with
/// exponential backoff, and offline (cache-only) operation. Thread safe up
/// to the orchestrator's parallelism bound.
class Gateway {
public:
    Gateway(std::shared_ptr<ChatProvider> provider, ResponseCache cache,
            RetryPolicy retry = {}, bool offline = false);

    /// Cache hit: returns the stored completion without touching the
    /// provider. Miss: performs the request (with retries), persists the
    /// verbatim body, then returns it.
    RawCompletion complete_chat(const ModelEndpoint& endpoint,
                                const RenderedPrompt& prompt,
                                const GenerationParams& params, int query_index);

    GatewayStats& stats() { return stats_; }
    const ResponseCache& cache() const { return cache_; }

    /// Digests of every completion served (hit or miss) since construction;
    /// the pipeline snapshots these into the run manifest.
    std::set<std::string> served_digests() const;

private:
    std::shared_ptr<ChatProvider> provider_;
    ResponseCache cache_;
    RetryPolicy retry_;
    bool offline_;
    GatewayStats stats_;
    mutable std::mutex served_mutex_;
    std::set<std::string> served_;
};

/// Pulls assistant text and (when present) token logprobs out of a verbatim
/// chat-completions response body.
RawCompletion completion_from_body(const std::string& body, long latency_ms,
                                   const std::string& digest);

}  // namespace codev
