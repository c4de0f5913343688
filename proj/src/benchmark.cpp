#include "codev/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "codev/errors.hpp"

namespace codev {

namespace {

std::vector<std::string> key_difference(const std::map<std::string, int>& a,
                                        const HumanScoreSet& b) {
    std::vector<std::string> ids;
    for (const auto& [k, _] : a)
        if (!b.count(k)) ids.push_back(k + " (no human score)");
    for (const auto& [k, _] : b)
        if (!a.count(k)) ids.push_back(k + " (no aggregate)");
    return ids;
}

double uniform01(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Sample e distinct indices from [0, n) via partial Fisher-Yates; the
// hand-rolled draw keeps pools reproducible across standard libraries.
std::vector<int> sample_indices(int n, int e, std::mt19937_64& eng) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < e; ++i) {
        const int j = i + static_cast<int>(uniform01(eng) * (n - i));
        std::swap(idx[i], idx[std::min(j, n - 1)]);
    }
    idx.resize(e);
    return idx;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

double mae(const std::map<std::string, int>& finals, const HumanScoreSet& human) {
    auto missing = key_difference(finals, human);
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "mae: submission sets differ (" << missing.size()
            << " mismatched): " << missing.front();
        throw KeyMismatchError(msg.str(), missing);
    }
    if (finals.empty()) throw KeyMismatchError("mae: no submissions", {});
    double sum = 0;
    for (const auto& [sid, score] : finals) sum += std::abs(score - human.at(sid));
    return sum / static_cast<double>(finals.size());
}

std::vector<int> worst_subset(const std::vector<int>& samples, int human, int e) {
    std::vector<int> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const int ea = std::abs(samples[a] - human);
        const int eb = std::abs(samples[b] - human);
        if (ea != eb) return ea > eb;
        if (samples[a] != samples[b]) return samples[a] > samples[b];
        return a < b;
    });
    std::vector<int> out;
    out.reserve(e);
    for (int i = 0; i < e; ++i) out.push_back(samples[order[i]]);
    return out;
}

StabilityCurve worst_case_curve(const SamplePool& pool, const HumanScoreSet& human,
                                AggregationMethod method,
                                const std::vector<int>& sizes, std::uint64_t seed,
                                int t_draws) {
    if (pool.empty()) throw KeyMismatchError("stability curve: empty pool", {});
    int q_total = -1;
    for (const auto& [sid, samples] : pool) {
        if (!human.count(sid))
            throw KeyMismatchError("stability curve: no human score for " + sid, {sid});
        if (q_total < 0) q_total = static_cast<int>(samples.size());
        if (static_cast<int>(samples.size()) != q_total)
            throw ConfigError("stability curve: uneven pool sizes");
    }
    for (size_t i = 1; i < sizes.size(); ++i)
        if (sizes[i] <= sizes[i - 1])
            throw ConfigError("stability curve: sizes must be strictly increasing");
    if (!sizes.empty() && sizes.back() > q_total)
        throw ConfigError("stability curve: size " + std::to_string(sizes.back()) +
                          " exceeds pool of " + std::to_string(q_total));

    StabilityCurve curve;
    const double m = static_cast<double>(pool.size());
    for (int e : sizes) {
        StabilityPoint point;
        point.size = e;

        double worst_err = 0;
        for (const auto& [sid, samples] : pool) {
            const auto subset = worst_subset(samples, human.at(sid), e);
            worst_err += std::abs(aggregate_scores(subset, method) - human.at(sid));
        }
        point.worst_case_mae = worst_err / m;

        // Mean case: t_draws seeded draws; each draw samples one subset per
        // submission, in sorted submission order.
        std::mt19937_64 eng(seed ^ (0x9e3779b97f4a7c15ULL * (e + 1)));
        double total = 0;
        for (int t = 0; t < t_draws; ++t) {
            double err = 0;
            for (const auto& [sid, samples] : pool) {
                const auto idx = sample_indices(q_total, e, eng);
                std::vector<int> subset;
                subset.reserve(e);
                for (int i : idx) subset.push_back(samples[i]);
                err += std::abs(aggregate_scores(subset, method) - human.at(sid));
            }
            total += err / m;
        }
        point.mean_case_mae = total / t_draws;
        curve.push_back(point);
    }
    return curve;
}

std::map<std::string, std::map<AggregationMethod, double>> compare_methods(
    const std::map<std::string, SamplePool>& pools, const HumanScoreSet& human) {
    std::map<std::string, std::map<AggregationMethod, double>> out;
    for (const auto& [model, pool] : pools) {
        for (auto method : {AggregationMethod::Mode, AggregationMethod::Mean,
                            AggregationMethod::Median}) {
            std::map<std::string, int> finals;
            for (const auto& [sid, samples] : pool)
                finals[sid] = aggregate_scores(samples, method);
            out[model][method] = mae(finals, human);
        }
    }
    return out;
}

std::vector<StyleComparison> compare_styles(
    const std::map<std::string, std::map<std::string, int>>& zero_shot_finals,
    const std::map<std::string, std::map<std::string, int>>& codev_finals,
    const HumanScoreSet& human) {
    std::vector<StyleComparison> rows;
    for (const auto& [model, zs] : zero_shot_finals) {
        auto it = codev_finals.find(model);
        if (it == codev_finals.end())
            throw KeyMismatchError("compare_styles: model '" + model +
                                       "' has no CoT results",
                                   {model});
        StyleComparison row;
        row.model = model;
        row.mae_zero_shot = mae(zs, human);
        row.mae_codev = mae(it->second, human);
        row.diff = row.mae_codev - row.mae_zero_shot;
        rows.push_back(row);
    }
    return rows;
}

SamplePool simulate_rater_pool(const SimRaterModel& sim, int q_total) {
    double total_weight = 0;
    for (const auto& [_, w] : sim.offset_weights) total_weight += w;
    if (total_weight <= 0)
        throw ConfigError("simulate_rater_pool: offset distribution has no mass");

    SamplePool pool;
    for (const auto& [sid, true_score] : sim.true_scores) {
        std::mt19937_64 eng(sim.seed ^ fnv1a(sid));
        std::vector<int>& samples = pool[sid];
        samples.reserve(q_total);
        for (int q = 0; q < q_total; ++q) {
            const double u = uniform01(eng) * total_weight;
            double cum = 0;
            int offset = sim.offset_weights.back().first;
            for (const auto& [off, w] : sim.offset_weights) {
                cum += w;
                if (u < cum) {
                    offset = off;
                    break;
                }
            }
            samples.push_back(std::clamp(true_score + offset, 0, 100));
        }
    }
    return pool;
}

std::string format_mae(double value) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << value;
    return out.str();
}

namespace {

const char* method_column_name(AggregationMethod m) {
    // Column labels mirror the benchmark table convention.
    switch (m) {
        case AggregationMethod::Mean: return "Average";
        case AggregationMethod::Mode: return "Sampling and Voting";
        case AggregationMethod::Median: return "Median";
    }
    return "";
}

}  // namespace

std::string render_methods_table(
    const std::map<std::string, std::map<AggregationMethod, double>>& cells) {
    std::ostringstream out;
    out << std::left << std::setw(16) << "Model";
    for (auto m : {AggregationMethod::Mean, AggregationMethod::Mode,
                   AggregationMethod::Median})
        out << " | " << std::setw(19) << method_column_name(m);
    out << "\n";
    for (const auto& [model, row] : cells) {
        out << std::left << std::setw(16) << model;
        for (auto m : {AggregationMethod::Mean, AggregationMethod::Mode,
                       AggregationMethod::Median})
            out << " | " << std::setw(19) << format_mae(row.at(m));
        out << "\n";
    }
    return out.str();
}

std::string render_styles_table(const std::vector<StyleComparison>& rows) {
    std::ostringstream out;
    out << std::left << std::setw(16) << "Model" << " | " << std::setw(9)
        << "Zero-Shot" << " | " << std::setw(9) << "CodEv" << " | diff\n";
    for (const auto& r : rows) {
        std::ostringstream diff;
        diff << std::showpos << std::fixed << std::setprecision(2) << r.diff;
        out << std::left << std::setw(16) << r.model << " | " << std::setw(9)
            << format_mae(r.mae_zero_shot) << " | " << std::setw(9)
            << format_mae(r.mae_codev) << " | " << diff.str() << "\n";
    }
    return out.str();
}

}  // namespace codev
