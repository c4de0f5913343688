#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "codev/errors.hpp"
#include "codev/gateway.hpp"
#include "codev/grade_response.hpp"
#include "codev/mock_provider.hpp"
#include "codev/prompt.hpp"
#include "test_support.hpp"

using namespace codev;
using json = nlohmann::json;

namespace {

RenderedPrompt sample_prompt(PromptStyle style = PromptStyle::ZeroShotCoT) {
    return render_prompt(testsupport::sample_problem(),
                         testsupport::sample_submission(), style);
}

}  // namespace

// --------------------------------------------------------------------------
// parse_grade_response

TEST_CASE("parses a bare grading object") {
    const auto r = parse_grade_response(
        R"({"reasoning_steps":"steps...","comment":"ok","score":85})");
    CHECK(r.reasoning_steps == "steps...");
    CHECK(r.comment == "ok");
    CHECK(r.score == 85);
}

TEST_CASE("parses fenced and prose-wrapped replies") {
    const std::string fenced =
        "Here is my evaluation:\n```json\n"
        R"({"reasoning_steps":"r","comment":"ok","score":85})"
        "\n```\nHope this helps!";
    CHECK(parse_grade_response(fenced).score == 85);

    const std::string nested =
        R"(The student wrote {"x": 1} badly. {"reasoning_steps":"r","comment":"c","score":72})";
    // first balanced object that parses wins; it has no grading fields
    CHECK_THROWS_AS(parse_grade_response(nested), SchemaError);

    const std::string prose =
        R"(Sure! {"reasoning_steps":"r {with braces}","comment":"fine","score":64} done.)";
    CHECK(parse_grade_response(prose).score == 64);
}

TEST_CASE("round-then-clamp rules") {
    CHECK(parse_grade_response(R"({"comment":"c","score":84.6})").score == 85);
    CHECK(parse_grade_response(R"({"comment":"c","score":112})").score == 100);
    CHECK(parse_grade_response(R"({"comment":"c","score":-3})").score == 0);
    CHECK(parse_grade_response(R"({"comment":"c","score":84.5})").score == 85);
    CHECK(round_and_clamp_score(84.6) == 85);
    CHECK(round_and_clamp_score(112) == 100);
    CHECK(round_and_clamp_score(-3) == 0);
    CHECK(round_and_clamp_score(-0.5) == 0);
}

TEST_CASE("numeric strings are accepted, junk is not") {
    CHECK(parse_grade_response(R"({"comment":"c","score":"85"})").score == 85);
    CHECK_THROWS_AS(parse_grade_response(R"({"comment":"c","score":"A+"})"),
                    SchemaError);
}

TEST_CASE("error classes carry the raw text") {
    try {
        parse_grade_response("no json here at all");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.raw_text == "no json here at all");
    }
    try {
        parse_grade_response(R"({"comment":"only comment"})");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.raw_text.find("only comment") != std::string::npos);
    }
}

TEST_CASE("reasoning is optional unless required") {
    const std::string no_reasoning = R"({"comment":"c","score":50})";
    CHECK(parse_grade_response(no_reasoning).reasoning_steps.empty());
    CHECK_THROWS_AS(parse_grade_response(no_reasoning, /*require_reasoning=*/true),
                    SchemaError);
}

TEST_CASE("parse is idempotent over its own serialization") {
    const auto original = parse_grade_response(
        R"({"reasoning_steps":"Step 1: looks right.","comment":"solid","score":91.4})");
    const auto reparsed = parse_grade_response(original.to_json_text());
    CHECK(reparsed == original);
}

// --------------------------------------------------------------------------
// digest + cache

TEST_CASE("digest separates query indices and matches an independent hash") {
    const auto endpoint = testsupport::mock_endpoint();
    const auto prompt = sample_prompt();
    GenerationParams params;

    const auto d0 = request_digest(endpoint, prompt, params, 0);
    const auto d1 = request_digest(endpoint, prompt, params, 1);
    CHECK(d0 != d1);
    CHECK(d0.size() == 64);

    // Independent reconstruction of the documented tuple.
    json tuple{{"endpoint", endpoint.name},
               {"model", endpoint.model_id},
               {"system", prompt.system_text},
               {"user", prompt.user_text},
               {"style", "cot"},
               {"schema", prompt.response_schema_version},
               {"temperature", params.temperature},
               {"top_p", params.top_p},
               {"max_tokens", params.max_tokens},
               {"seed", nullptr},
               {"query_index", 0}};
    CHECK(sha256_hex(tuple.dump()) == d0);

    auto other_params = params;
    other_params.temperature = 0.9;
    CHECK(request_digest(endpoint, prompt, other_params, 0) != d0);
}

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("cache round trip under the documented layout") {
    testsupport::TempDir tmp("cache");
    ResponseCache cache(tmp.path());
    const std::string digest(64, 'a');
    CHECK_FALSE(cache.get(digest).has_value());
    cache.put(digest, "ep", "model", 3, {"{\"x\":1}", 42});
    const auto entry = cache.get(digest);
    REQUIRE(entry.has_value());
    CHECK(entry->body == "{\"x\":1}");
    CHECK(entry->latency_ms == 42);
    CHECK(std::filesystem::exists(tmp.path() / "aa" / (digest + ".resp")));
}

// --------------------------------------------------------------------------
// gateway with the mock provider

TEST_CASE("second identical call is served from cache with no provider call") {
    testsupport::TempDir tmp("gw_cache");
    auto gateway = testsupport::mock_gateway(testsupport::default_grade_manifest(),
                                             tmp.path());
    const auto endpoint = testsupport::mock_endpoint();
    const auto prompt = sample_prompt();
    GenerationParams params;

    const auto first = gateway.complete_chat(endpoint, prompt, params, 0);
    CHECK(gateway.stats().provider_calls.load() == 1);
    const auto second = gateway.complete_chat(endpoint, prompt, params, 0);
    CHECK(gateway.stats().provider_calls.load() == 1);
    CHECK(gateway.stats().cache_hits.load() == 1);
    CHECK(first.text == second.text);
    CHECK(first.request_digest == second.request_digest);
}

TEST_CASE("distinct query indices produce distinct cache entries") {
    testsupport::TempDir tmp("gw_fanout");
    auto gateway = testsupport::mock_gateway(testsupport::default_grade_manifest(),
                                             tmp.path());
    const auto endpoint = testsupport::mock_endpoint();
    const auto prompt = sample_prompt();
    GenerationParams params;

    std::set<std::string> digests;
    for (int q = 0; q < 10; ++q)
        digests.insert(gateway.complete_chat(endpoint, prompt, params, q).request_digest);
    CHECK(digests.size() == 10);
    CHECK(gateway.stats().provider_calls.load() == 10);
}

TEST_CASE("unreachable endpoint fails after exactly R retries") {
    testsupport::TempDir tmp("gw_retry");
    json manifest{{"rules", json::array({json{{"default", true},
                                              {"respond", {{"transport_error", true}}}}})}};
    auto provider = std::make_shared<MockProvider>(manifest);
    Gateway gateway(provider, ResponseCache(tmp.path()), RetryPolicy{3, 0, 2.0});

    try {
        gateway.complete_chat(testsupport::mock_endpoint(), sample_prompt(), {}, 0);
        FAIL("expected TransientFailure");
    } catch (const TransientFailure& e) {
        CHECK(e.retries == 3);
    }
    CHECK(provider->call_count() == 4);  // initial attempt + 3 retries
    CHECK(gateway.stats().retries.load() == 3);
}

TEST_CASE("scripted fail-twice-then-succeed recovers on the third attempt") {
    testsupport::TempDir tmp("gw_script");
    json ok_body = json{{"choices", json::array({json{
                            {"message", json{{"role", "assistant"},
                                             {"content", "{\"comment\":\"c\",\"score\":77}"}}}}})}};
    json manifest{
        {"rules",
         json::array({json{
             {"default", true},
             {"respond",
              {{"script", json::array({json{{"status", 503}}, json{{"status", 503}},
                                       json{{"body", ok_body}}})}}}}})}};
    auto provider = std::make_shared<MockProvider>(manifest);
    Gateway gateway(provider, ResponseCache(tmp.path()), RetryPolicy{3, 0, 2.0});

    const auto completion =
        gateway.complete_chat(testsupport::mock_endpoint(), sample_prompt(), {}, 0);
    CHECK(parse_grade_response(completion.text).score == 77);
    CHECK(provider->call_count() == 3);
    CHECK(gateway.stats().retries.load() == 2);
}

TEST_CASE("4xx responses raise ConfigError without retries") {
    testsupport::TempDir tmp("gw_4xx");
    json manifest{{"rules", json::array({json{
                      {"default", true},
                      {"respond", {{"status", 404}, {"body_text", "no such model"}}}}})}};
    auto provider = std::make_shared<MockProvider>(manifest);
    Gateway gateway(provider, ResponseCache(tmp.path()), RetryPolicy{3, 0, 2.0});
    CHECK_THROWS_AS(
        gateway.complete_chat(testsupport::mock_endpoint(), sample_prompt(), {}, 0),
        ConfigError);
    CHECK(provider->call_count() == 1);
}

TEST_CASE("fixture miss is reported as such") {
    testsupport::TempDir tmp("gw_miss");
    json manifest{{"rules", json::array({json{{"match", {{"model", "other-model"}}},
                                              {"respond", {{"raw_content", "x"}}}}})}};
    auto gateway = testsupport::mock_gateway(manifest, tmp.path());
    CHECK_THROWS_AS(
        gateway.complete_chat(testsupport::mock_endpoint(), sample_prompt(), {}, 0),
        FixtureMissError);
}

TEST_CASE("offline gateway serves hits and rejects misses") {
    testsupport::TempDir tmp("gw_offline");
    const auto endpoint = testsupport::mock_endpoint();
    const auto prompt = sample_prompt();
    GenerationParams params;
    {
        auto warm = testsupport::mock_gateway(testsupport::default_grade_manifest(),
                                              tmp.path());
        warm.complete_chat(endpoint, prompt, params, 0);
    }
    auto offline = testsupport::mock_gateway({}, tmp.path(), {3, 0, 2.0},
                                             /*offline=*/true);
    CHECK_NOTHROW(offline.complete_chat(endpoint, prompt, params, 0));
    CHECK_THROWS_AS(offline.complete_chat(endpoint, prompt, params, 1),
                    CacheMissError);
}

TEST_CASE("concurrent completes agree and cache exactly one body per digest") {
    testsupport::TempDir tmp("gw_conc");
    auto gateway = testsupport::mock_gateway(testsupport::default_grade_manifest(),
                                             tmp.path());
    const auto endpoint = testsupport::mock_endpoint();
    const auto prompt = sample_prompt();
    GenerationParams params;

    std::vector<std::thread> threads;
    std::atomic<int> failures{0};
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            try {
                for (int q = 0; q < 16; ++q)
                    gateway.complete_chat(endpoint, prompt, params, q % 4);
            } catch (...) {
                failures.fetch_add(1);
            }
        });
    }
    for (auto& t : threads) t.join();
    CHECK(failures.load() == 0);
    // every thread saw a value for each of the 4 digests; re-reads are stable
    for (int q = 0; q < 4; ++q)
        CHECK_NOTHROW(gateway.complete_chat(endpoint, prompt, params, q));
}

// --------------------------------------------------------------------------
// HTTP provider against a local OpenAI-shaped server

TEST_CASE("http provider round trip, auth header and logprob extraction") {
    httplib::Server server;
    std::atomic<int> hits{0};
    std::string seen_auth, seen_model;
    server.Post("/v1/chat/completions",
                [&](const httplib::Request& req, httplib::Response& res) {
                    hits.fetch_add(1);
                    seen_auth = req.get_header_value("Authorization");
                    seen_model = json::parse(req.body)["model"].get<std::string>();
                    json body{
                        {"choices",
                         json::array({json{
                             {"message",
                              json{{"role", "assistant"},
                                   {"content", "{\"comment\":\"via http\",\"score\":66}"}}},
                             {"logprobs",
                              json{{"content",
                                    json::array({json{{"token", "{"},
                                                      {"logprob", -0.01},
                                                      {"top_logprobs", json::array()}}})}}}}})}};
                    res.set_content(body.dump(), "application/json");
                });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("CODEV_TEST_KEY", "secret-token", 1);
    ModelEndpoint endpoint;
    endpoint.name = "local";
    endpoint.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    endpoint.model_id = "test-model";
    endpoint.auth_ref = "CODEV_TEST_KEY";
    endpoint.supports_logprobs = true;

    testsupport::TempDir tmp("http");
    Gateway gateway(std::make_shared<HttpChatProvider>(), ResponseCache(tmp.path()),
                    RetryPolicy{1, 0, 2.0});
    const auto completion = gateway.complete_chat(endpoint, sample_prompt(), {}, 0);
    CHECK(parse_grade_response(completion.text).score == 66);
    CHECK(completion.token_logprobs.has_value());
    CHECK(seen_auth == "Bearer secret-token");
    CHECK(seen_model == "test-model");
    CHECK(hits.load() == 1);

    // replay hits the cache, not the server
    gateway.complete_chat(endpoint, sample_prompt(), {}, 0);
    CHECK(hits.load() == 1);

    server.stop();
    server_thread.join();
}

TEST_CASE("unset auth variable is a configuration error") {
    ModelEndpoint endpoint;
    endpoint.name = "local";
    endpoint.base_url = "http://127.0.0.1:1/v1";
    endpoint.model_id = "m";
    endpoint.auth_ref = "CODEV_DEFINITELY_UNSET_VAR";

    testsupport::TempDir tmp("http_auth");
    Gateway gateway(std::make_shared<HttpChatProvider>(), ResponseCache(tmp.path()),
                    RetryPolicy{0, 0, 2.0});
    CHECK_THROWS_AS(gateway.complete_chat(endpoint, sample_prompt(), {}, 0),
                    ConfigError);
}
