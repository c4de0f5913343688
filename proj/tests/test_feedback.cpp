#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "codev/errors.hpp"
#include "codev/feedback.hpp"
#include "test_support.hpp"

using namespace codev;
using json = nlohmann::json;

namespace {

AggregatedGrade grade_with_comments(int count) {
    AggregatedGrade grade;
    grade.submission_id = "p1/s1";
    grade.final_score = 82;
    grade.valid_count = count;
    for (int i = 0; i < count; ++i)
        grade.comment_set.push_back("Comment " + std::to_string(i) +
                                    ": the loop bound is off by one.");
    return grade;
}

std::string well_formed_summary() {
    return "Correctness of Output:\nHandles the main cases correctly.\n\n"
           "Code Readability:\nNames are clear; spacing is consistent.\n\n"
           "Functionality:\nAll requirements are met.\n\n"
           "Overview Comments:\nSolid submission with minor edge-case gaps.";
}

json summary_manifest(const std::string& text) {
    return json{{"rules", json::array({json{{"default", true},
                                            {"respond", {{"raw_content", text}}}}})}};
}

}  // namespace

TEST_CASE("summary prompt embeds every comment and the section skeleton") {
    const auto grade = grade_with_comments(10);
    const auto prompt = build_summary_prompt(grade, testsupport::sample_problem());
    CHECK(prompt.response_schema_version == std::string(kSummarySchemaVersion));
    for (const auto& comment : grade.comment_set)
        CHECK(prompt.user_text.find(comment) != std::string::npos);
    CHECK(prompt.user_text.find("Correctness of Output:") != std::string::npos);
    CHECK(prompt.user_text.find("Overview Comments:") != std::string::npos);
}

TEST_CASE("summary sections parse in rubric order") {
    const auto summary =
        parse_summary_sections(well_formed_summary(), testsupport::fig2_rubric());
    REQUIRE(summary.sections.size() == 3);
    CHECK(summary.sections[0].first == "Correctness of Output");
    CHECK(summary.sections[0].second == "Handles the main cases correctly.");
    CHECK(summary.sections[2].first == "Functionality");
    CHECK(summary.overview == "Solid submission with minor edge-case gaps.");
}

TEST_CASE("a missing section is a schema error naming the section") {
    const std::string text =
        "Correctness of Output:\nfine\n\nFunctionality:\nfine\n\n"
        "Overview Comments:\nfine";
    CHECK_THROWS_WITH_AS(parse_summary_sections(text, testsupport::fig2_rubric()),
                         doctest::Contains("Code Readability"), SchemaError);
}

TEST_CASE("summarize_comments produces a cached, replayable summary") {
    testsupport::TempDir tmp("fb_sum");
    const auto grade = grade_with_comments(10);
    std::string first_text, second_text;
    {
        auto gateway = testsupport::mock_gateway(summary_manifest(well_formed_summary()),
                                                 tmp.path());
        const auto summary =
            summarize_comments(gateway, grade, testsupport::sample_problem(),
                               testsupport::mock_endpoint(), {});
        CHECK(summary.source_sample_count == 10);
        REQUIRE(summary.sections.size() == 3);
        first_text = summary.full_text();
    }
    {
        auto gateway = testsupport::mock_gateway({}, tmp.path(), {3, 0, 2.0},
                                                 /*offline=*/true);
        const auto summary =
            summarize_comments(gateway, grade, testsupport::sample_problem(),
                               testsupport::mock_endpoint(), {});
        second_text = summary.full_text();
        CHECK(gateway.stats().provider_calls.load() == 0);
    }
    CHECK(first_text == second_text);
}

TEST_CASE("a single comment still summarizes") {
    testsupport::TempDir tmp("fb_single");
    auto gateway = testsupport::mock_gateway(summary_manifest(well_formed_summary()),
                                             tmp.path());
    const auto grade = grade_with_comments(1);
    const auto summary = summarize_comments(gateway, grade,
                                            testsupport::sample_problem(),
                                            testsupport::mock_endpoint(), {});
    CHECK(summary.source_sample_count == 1);
}

TEST_CASE("persistently malformed summaries fail after the retry budget") {
    testsupport::TempDir tmp("fb_bad");
    auto gateway = testsupport::mock_gateway(summary_manifest("no headings here"),
                                             tmp.path());
    try {
        summarize_comments(gateway, grade_with_comments(3),
                           testsupport::sample_problem(), testsupport::mock_endpoint(),
                           {}, 2);
        FAIL("expected SummarizationFailure");
    } catch (const SummarizationFailure& e) {
        CHECK(e.raw_text.find("no headings") != std::string::npos);
    }
    CHECK(gateway.stats().provider_calls.load() == 3);  // initial + 2 re-queries
}

TEST_CASE("geval arithmetic on the documented fixtures") {
    const std::vector<int> score_set{1, 2, 3, 4, 5};

    const auto point_mass = geval_from_distribution({{5, 1.0}}, score_set, 0.5);
    CHECK(point_mass.raw_score == doctest::Approx(5.0));
    CHECK(point_mass.normalized == doctest::Approx(1.0));
    CHECK_FALSE(point_mass.flagged_for_review);

    const auto mixed =
        geval_from_distribution({{3, 0.2}, {4, 0.5}, {5, 0.3}}, score_set, 0.5);
    CHECK(mixed.raw_score == doctest::Approx(4.1).epsilon(1e-12));
    CHECK(mixed.normalized == doctest::Approx(0.775).epsilon(1e-12));
    CHECK_FALSE(mixed.flagged_for_review);

    // brute-force weighted sum cross-check
    double expected = 0;
    for (const auto& [s, p] : mixed.distribution) expected += s * p;
    CHECK(mixed.raw_score == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("geval renormalizes unnormalized mass to exactly 1") {
    const auto result = geval_from_distribution({{3, 2.0}, {4, 5.0}, {5, 3.0}},
                                                {1, 2, 3, 4, 5}, 0.5);
    double total = 0;
    for (const auto& [s, p] : result.distribution) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(result.raw_score == doctest::Approx(4.1).epsilon(1e-12));
}

TEST_CASE("flag boundary: exactly the threshold is not flagged") {
    // normalized 0.5 with threshold 0.5 -> raw 3.0 on {1..5}
    const auto boundary = geval_from_distribution({{3, 1.0}}, {1, 2, 3, 4, 5}, 0.5);
    CHECK(boundary.normalized == doctest::Approx(0.5));
    CHECK_FALSE(boundary.flagged_for_review);

    const auto below = geval_from_distribution({{2, 0.5}, {3, 0.5}}, {1, 2, 3, 4, 5},
                                               0.5);
    CHECK(below.normalized == doctest::Approx(0.375));
    CHECK(below.flagged_for_review);
}

TEST_CASE("geval rejects mass that misses the score set") {
    CHECK_THROWS_AS(geval_from_distribution({{7, 1.0}}, {1, 2, 3, 4, 5}, 0.5),
                    ProbabilityExtractionError);
    CHECK_THROWS_AS(geval_from_distribution({}, {1, 2, 3, 4, 5}, 0.5),
                    ProbabilityExtractionError);
}

TEST_CASE("token-logprob source reads the score position") {
    testsupport::TempDir tmp("fb_geval_lp");
    json manifest{{"rules",
                   json::array({json{
                       {"default", true},
                       {"respond",
                        {{"content", "4"},
                         {"score_logprobs", {{"3", 0.2}, {"4", 0.5}, {"5", 0.3}}}}}}})}};
    auto gateway = testsupport::mock_gateway(manifest, tmp.path());

    GEvalConfig config;
    config.evaluator = testsupport::mock_endpoint("judge");
    config.probability_source = ProbabilitySource::TokenLogprobs;

    SummaryComment feedback;
    feedback.sections = {{"Correctness of Output", "ok"}};
    feedback.overview = "fine";
    const auto result = geval_score(gateway, "grade this task", feedback, config, {});
    CHECK(result.raw_score == doctest::Approx(4.1).epsilon(1e-9));
    CHECK(result.normalized == doctest::Approx(0.775).epsilon(1e-9));
}

TEST_CASE("token-logprob source without usable tokens raises an extraction error") {
    testsupport::TempDir tmp("fb_geval_none");
    json manifest{{"rules", json::array({json{{"default", true},
                                              {"respond", {{"content", "great job"}}}}})}};
    auto gateway = testsupport::mock_gateway(manifest, tmp.path());
    GEvalConfig config;
    config.evaluator = testsupport::mock_endpoint("judge");
    SummaryComment feedback;
    feedback.overview = "fine";
    CHECK_THROWS_AS(geval_score(gateway, "task", feedback, config, {}),
                    ProbabilityExtractionError);
}

TEST_CASE("empirical sampling builds frequencies over N samples") {
    testsupport::TempDir tmp("fb_geval_emp");
    // samples alternate between 4 and 5 by query index parity
    json manifest{{"rules", json::array()}};
    for (int n = 0; n < 20; ++n)
        manifest["rules"].push_back(json{{"match", {{"query_index", n}}},
                                         {"respond", {{"content",
                                                       n % 2 == 0 ? "4" : "5"}}}});
    auto gateway = testsupport::mock_gateway(manifest, tmp.path());

    GEvalConfig config;
    config.evaluator = testsupport::mock_endpoint("judge");
    config.probability_source = ProbabilitySource::EmpiricalSampling;
    config.sample_count = 20;

    SummaryComment feedback;
    feedback.overview = "fine";
    const auto result = geval_score(gateway, "task", feedback, config, {});
    CHECK(result.distribution.at(4) == doctest::Approx(0.5));
    CHECK(result.distribution.at(5) == doctest::Approx(0.5));
    CHECK(result.raw_score == doctest::Approx(4.5));
    double total = 0;
    for (const auto& [s, p] : result.distribution) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("review queue orders flagged items by score then id") {
    GEvalResult low, mid, high;
    low.normalized = 0.2;
    low.flagged_for_review = true;
    mid.normalized = 0.3;
    mid.flagged_for_review = true;
    high.normalized = 0.6;
    high.flagged_for_review = false;

    const auto queue = review_queue({{"a", mid}, {"b", high}, {"c", low}});
    REQUIRE(queue.size() == 2);
    CHECK(queue[0].first == "c");
    CHECK(queue[1].first == "a");

    CHECK(review_queue({{"b", high}}).empty());

    GEvalResult tie = low;
    const auto tied = review_queue({{"z", tie}, {"a", tie}, {"m", tie}});
    REQUIRE(tied.size() == 3);
    CHECK(tied[0].first == "a");
    CHECK(tied[1].first == "m");
    CHECK(tied[2].first == "z");
}

TEST_CASE("feedback document mirrors the section skeleton") {
    SummaryComment summary;
    summary.sections = {{"Correctness of Output", "Right answers."},
                        {"Code Readability", "Tidy."},
                        {"Functionality", "Complete."}};
    summary.overview = "Good work.";
    summary.source_sample_count = 10;
    const auto doc = render_feedback_document(summary, "p1/s1", "mock-model", 82);
    CHECK(doc.find("Correctness of Output:\nRight answers.") != std::string::npos);
    CHECK(doc.find("Overview Comments:\nGood work.") != std::string::npos);
    CHECK(doc.find("final score: 82") != std::string::npos);
}
