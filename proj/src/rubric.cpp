#include "codev/rubric.hpp"

#include <numeric>
#include <set>
#include <sstream>

namespace codev {

std::string RubricValidation::joined() const {
    std::ostringstream out;
    for (size_t i = 0; i < violations.size(); ++i) {
        if (i) out << "; ";
        out << violations[i];
    }
    return out.str();
}

RubricValidation validate_rubric(const Rubric& rubric) {
    RubricValidation result;
    if (rubric.criteria.empty()) {
        result.violations.push_back("no criteria");
        return result;
    }
    std::set<std::string> seen;
    int sum = 0;
    for (const auto& c : rubric.criteria) {
        if (c.name.empty())
            result.violations.push_back("criterion with empty name");
        if (c.max_points <= 0)
            result.violations.push_back("criterion '" + c.name +
                                        "' has non-positive max_points");
        if (!seen.insert(c.name).second)
            result.violations.push_back("duplicate criterion name '" + c.name + "'");
        sum += c.max_points;
    }
    if (sum != rubric.total_scale)
        result.violations.push_back("points sum " + std::to_string(sum) + " != " +
                                    std::to_string(rubric.total_scale));
    if (rubric.total_scale != 100)
        result.warnings.push_back("total_scale " + std::to_string(rubric.total_scale) +
                                  " != 100; downstream scales assume 0-100");
    return result;
}

}  // namespace codev
