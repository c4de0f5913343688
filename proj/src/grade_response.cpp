#include "codev/grade_response.hpp"

#include <cctype>
#include <cmath>
#include <optional>

#include <nlohmann/json.hpp>

#include "codev/errors.hpp"

namespace codev {

using json = nlohmann::json;

int round_and_clamp_score(double x) {
    const double rounded = std::round(x);  // halves away from zero
    if (rounded < 0.0) return 0;
    if (rounded > 100.0) return 100;
    return static_cast<int>(rounded);
}

namespace {

// Returns the substring spanning the balanced object starting at `open`
// (which must index a '{'), honoring JSON string literals and escapes.
std::optional<std::string> balanced_object_at(const std::string& text, size_t open) {
    int depth = 0;
    bool in_string = false;
    for (size_t i = open; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\')
                ++i;
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}') {
            if (--depth == 0) return text.substr(open, i - open + 1);
        }
    }
    return std::nullopt;
}

std::optional<json> first_parseable_object(const std::string& text) {
    for (size_t pos = text.find('{'); pos != std::string::npos;
         pos = text.find('{', pos + 1)) {
        auto candidate = balanced_object_at(text, pos);
        if (!candidate) continue;
        json parsed = json::parse(*candidate, nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) return parsed;
    }
    return std::nullopt;
}

std::optional<double> numeric_value(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        size_t idx = 0;
        try {
            const double parsed = std::stod(s, &idx);
            while (idx < s.size() && std::isspace(static_cast<unsigned char>(s[idx])))
                ++idx;
            if (idx == s.size()) return parsed;
        } catch (const std::exception&) {
        }
    }
    return std::nullopt;
}

}  // namespace

GradeResponse parse_grade_response(const std::string& text, bool require_reasoning) {
    auto obj = first_parseable_object(text);
    if (!obj)
        throw ParseError("no balanced JSON object found in model reply", text);

    GradeResponse out;
    if (obj->contains("reasoning_steps")) {
        const auto& r = (*obj)["reasoning_steps"];
        if (!r.is_string())
            throw SchemaError("reasoning_steps is not a string", text);
        out.reasoning_steps = r.get<std::string>();
    }
    if (require_reasoning && out.reasoning_steps.empty())
        throw SchemaError("reasoning_steps missing or empty in CoT reply", text);

    if (!obj->contains("comment") || !(*obj)["comment"].is_string())
        throw SchemaError("comment field missing or not a string", text);
    out.comment = (*obj)["comment"].get<std::string>();

    if (!obj->contains("score"))
        throw SchemaError("score field missing", text);
    auto score = numeric_value((*obj)["score"]);
    if (!score)
        throw SchemaError("score field is non-numeric", text);
    out.score = round_and_clamp_score(*score);
    return out;
}

std::string GradeResponse::to_json_text() const {
    return json{{"reasoning_steps", reasoning_steps},
                {"comment", comment},
                {"score", score}}
        .dump();
}

}  // namespace codev
