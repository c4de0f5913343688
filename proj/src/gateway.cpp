#include "codev/gateway.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "codev/errors.hpp"

namespace codev {

using json = nlohmann::json;

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string request_digest_preimage(const ModelEndpoint& endpoint,
                                    const RenderedPrompt& prompt,
                                    const GenerationParams& params,
                                    int query_index) {
    json tuple{{"endpoint", endpoint.name},
               {"model", endpoint.model_id},
               {"system", prompt.system_text},
               {"user", prompt.user_text},
               {"style", to_string(prompt.style)},
               {"schema", prompt.response_schema_version},
               {"temperature", params.temperature},
               {"top_p", params.top_p},
               {"max_tokens", params.max_tokens},
               {"seed", params.request_seed ? json(*params.request_seed) : json()},
               {"query_index", query_index}};
    return tuple.dump();
}

std::string request_digest(const ModelEndpoint& endpoint,
                           const RenderedPrompt& prompt,
                           const GenerationParams& params, int query_index) {
    return sha256_hex(request_digest_preimage(endpoint, prompt, params, query_index));
}

// ---------------------------------------------------------------------------
// ResponseCache

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

namespace {

std::filesystem::path entry_path(const std::filesystem::path& dir,
                                 const std::string& digest) {
    return dir / digest.substr(0, 2) / (digest + ".resp");
}

}  // namespace

std::optional<ResponseCache::Entry> ResponseCache::get(const std::string& digest) const {
    const auto path = entry_path(dir_, digest);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream buf;
    buf << in.rdbuf();
    json doc = json::parse(buf.str(), nullptr, false);
    if (doc.is_discarded() || !doc.contains("body")) return std::nullopt;
    Entry e;
    e.body = doc["body"].get<std::string>();
    e.latency_ms = doc.value("latency_ms", 0L);
    return e;
}

void ResponseCache::put(const std::string& digest, const std::string& endpoint_name,
                        const std::string& model_id, int query_index,
                        const Entry& entry) const {
    const auto path = entry_path(dir_, digest);
    std::filesystem::create_directories(path.parent_path());
    json doc{{"digest", digest},
             {"endpoint", endpoint_name},
             {"model", model_id},
             {"query_index", query_index},
             {"latency_ms", entry.latency_ms},
             {"body", entry.body}};
    // Unique temp name per writer, then rename: concurrent writers of the
    // same digest carry identical content, so last-rename-wins is harmless.
    static std::atomic<unsigned> counter{0};
    auto tmp = path;
    tmp += ".tmp" + std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary);
        out << doc.dump();
    }
    std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// HttpChatProvider

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path prefix, possibly empty
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("endpoint base_url must include a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_start), prefix};
}

}  // namespace

HttpChatProvider::HttpChatProvider(int connect_timeout_s, int read_timeout_s)
    : connect_timeout_s_(connect_timeout_s), read_timeout_s_(read_timeout_s) {}

ProviderResult HttpChatProvider::complete(const ModelEndpoint& endpoint,
                                          const RenderedPrompt& prompt,
                                          const GenerationParams& params,
                                          int query_index) {
    const auto url = split_url(endpoint.base_url);

    json body{{"model", endpoint.model_id},
              {"messages",
               json::array({json{{"role", "system"}, {"content", prompt.system_text}},
                            json{{"role", "user"}, {"content", prompt.user_text}}})},
              {"temperature", params.temperature},
              {"top_p", params.top_p},
              {"max_tokens", params.max_tokens}};
    // A fixed seed would make every ensemble slot return the same bytes on
    // seed-honoring providers, so the slot index shifts it.
    if (params.request_seed) body["seed"] = *params.request_seed + query_index;
    if (endpoint.supports_logprobs) {
        body["logprobs"] = true;
        body["top_logprobs"] = 5;
    }

    httplib::Headers headers;
    if (!endpoint.auth_ref.empty()) {
        const char* key = std::getenv(endpoint.auth_ref.c_str());
        if (!key)
            throw ConfigError("auth environment variable '" + endpoint.auth_ref +
                              "' is not set for endpoint '" + endpoint.name + "'");
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    httplib::Client client(url.origin);
    client.set_connection_timeout(connect_timeout_s_, 0);
    client.set_read_timeout(read_timeout_s_, 0);

    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post(url.prefix + "/chat/completions", headers, body.dump(),
                           "application/json");
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start)
                             .count();

    ProviderResult out;
    out.latency_ms = elapsed;
    if (!res) {
        out.status = 0;
        out.error = httplib::to_string(res.error());
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::shared_ptr<ChatProvider> provider, ResponseCache cache,
                 RetryPolicy retry, bool offline)
    : provider_(std::move(provider)),
      cache_(std::move(cache)),
      retry_(retry),
      offline_(offline) {}

RawCompletion completion_from_body(const std::string& body, long latency_ms,
                                   const std::string& digest) {
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty())
        throw SchemaError("completion body has no choices", body);
    const auto& choice = doc["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content"))
        throw SchemaError("completion body has no message content", body);

    RawCompletion out;
    out.text = choice["message"]["content"].get<std::string>();
    out.latency_ms = latency_ms;
    out.request_digest = digest;

    if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
        choice["logprobs"].contains("content") &&
        choice["logprobs"]["content"].is_array()) {
        std::vector<TokenLogprob> tokens;
        for (const auto& item : choice["logprobs"]["content"]) {
            TokenLogprob t;
            t.token = item.value("token", "");
            t.logprob = item.value("logprob", 0.0);
            if (item.contains("top_logprobs")) {
                for (const auto& alt : item["top_logprobs"])
                    t.alternatives.emplace_back(alt.value("token", ""),
                                                alt.value("logprob", 0.0));
            }
            tokens.push_back(std::move(t));
        }
        out.token_logprobs = std::move(tokens);
    }
    return out;
}

std::set<std::string> Gateway::served_digests() const {
    std::lock_guard<std::mutex> lock(served_mutex_);
    return served_;
}

RawCompletion Gateway::complete_chat(const ModelEndpoint& endpoint,
                                     const RenderedPrompt& prompt,
                                     const GenerationParams& params,
                                     int query_index) {
    const std::string digest = request_digest(endpoint, prompt, params, query_index);
    {
        std::lock_guard<std::mutex> lock(served_mutex_);
        served_.insert(digest);
    }

    if (auto cached = cache_.get(digest)) {
        stats_.cache_hits.fetch_add(1);
        return completion_from_body(cached->body, cached->latency_ms, digest);
    }
    if (offline_)
        throw CacheMissError("offline run: no cached response for digest " + digest);
    if (!provider_)
        throw ConfigError("no provider configured and no cache entry for digest " +
                          digest);

    std::string last_error;
    for (int attempt = 0; attempt <= retry_.max_retries; ++attempt) {
        if (attempt > 0) {
            stats_.retries.fetch_add(1);
            const double factor = std::pow(retry_.backoff_factor, attempt - 1);
            const auto delay = std::chrono::milliseconds(
                static_cast<long>(retry_.backoff_base_ms * factor));
            std::this_thread::sleep_for(delay);
        }
        stats_.provider_calls.fetch_add(1);
        const ProviderResult res = provider_->complete(endpoint, prompt, params,
                                                       query_index);
        if (res.status == 200) {
            // Reject bodies the extractor cannot read before caching them;
            // a truncated 200 is treated like any other transient fault.
            try {
                auto completion = completion_from_body(res.body, res.latency_ms, digest);
                cache_.put(digest, endpoint.name, endpoint.model_id, query_index,
                           {res.body, res.latency_ms});
                return completion;
            } catch (const SchemaError& e) {
                last_error = e.what();
                continue;
            }
        }
        if (res.status >= 400 && res.status < 500)
            throw ConfigError("endpoint '" + endpoint.name + "' returned HTTP " +
                              std::to_string(res.status) + ": " + res.body);
        last_error = res.status == 0 ? res.error
                                     : "HTTP " + std::to_string(res.status);
    }
    throw TransientFailure("request to endpoint '" + endpoint.name + "' failed after " +
                               std::to_string(retry_.max_retries) +
                               " retries: " + last_error,
                           retry_.max_retries);
}

}  // namespace codev
