#include "codev/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "codev/errors.hpp"
#include "codev/fstats.hpp"

namespace codev {

std::string to_string(IccKind kind) {
    return kind == IccKind::Icc2k ? "icc2k" : "icc3k";
}

void RatingMatrix::validate() const {
    const size_t expected = static_cast<size_t>(n()) * static_cast<size_t>(k());
    if (values.size() != expected)
        throw InsufficientDataError("rating matrix is not complete: " +
                                    std::to_string(values.size()) + " cells for " +
                                    std::to_string(n()) + "x" + std::to_string(k()));
    if (n() < 2 || k() < 2)
        throw InsufficientDataError("rating matrix needs n >= 2 subjects and k >= 2 "
                                    "raters, got " +
                                    std::to_string(n()) + "x" + std::to_string(k()));
    for (double v : values)
        if (!std::isfinite(v))
            throw InsufficientDataError("rating matrix contains a non-finite value");
}

AnovaDecomposition anova_decompose(const RatingMatrix& m) {
    m.validate();
    const int n = m.n(), k = m.k();

    double total = 0;
    std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0;
        for (int j = 0; j < k; ++j) s += m.at(i, j);
        row_mean[i] = s / k;
        total += s;
    }
    for (int j = 0; j < k; ++j) {
        double s = 0;
        for (int i = 0; i < n; ++i) s += m.at(i, j);
        col_mean[j] = s / n;
    }
    const double grand = total / (static_cast<double>(n) * k);

    AnovaDecomposition d;
    for (int i = 0; i < n; ++i) d.ssr += (row_mean[i] - grand) * (row_mean[i] - grand);
    d.ssr *= k;
    for (int j = 0; j < k; ++j) d.ssc += (col_mean[j] - grand) * (col_mean[j] - grand);
    d.ssc *= n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) {
            const double r = m.at(i, j) - row_mean[i] - col_mean[j] + grand;
            d.sse += r * r;
        }
    d.df_rows = n - 1;
    d.df_cols = k - 1;
    d.df_err = static_cast<double>(n - 1) * (k - 1);
    d.msr = d.ssr / d.df_rows;
    d.msc = d.ssc / d.df_cols;
    d.mse = d.sse / d.df_err;
    return d;
}

namespace {

// Shared F test for both average-measures forms (H0: ICC = 0).
void fill_f_test(IccReport& rep, const AnovaDecomposition& d) {
    rep.df1 = d.df_rows;
    rep.df2 = d.df_err;
    if (d.mse == 0.0) {
        rep.f_value = std::numeric_limits<double>::infinity();
        rep.p_value = 0.0;
    } else {
        rep.f_value = d.msr / d.mse;
        rep.p_value = f_upper_tail(rep.f_value, rep.df1, rep.df2);
    }
}

void check_not_degenerate(const AnovaDecomposition& d) {
    if (d.msr == 0.0)
        throw DegenerateMatrixError(
            d.msc == 0.0 && d.mse == 0.0
                ? "constant matrix: ICC undefined"
                : "no between-subject variance: ICC undefined");
}

}  // namespace

IccReport icc_2k(const RatingMatrix& m, double alpha) {
    const auto d = anova_decompose(m);
    check_not_degenerate(d);
    const double n = m.n(), k = m.k();

    IccReport rep;
    rep.kind = IccKind::Icc2k;
    rep.estimate = (d.msr - d.mse) / (d.msr + (d.msc - d.mse) / n);
    fill_f_test(rep, d);

    if (d.mse == 0.0) {
        // Exact agreement up to additive rater effects: the interval collapses.
        rep.ci95_low = rep.estimate;
        rep.ci95_high = rep.estimate;
        return rep;
    }

    // McGraw & Wong: CI for the single-measure ICC(A,1) with Satterthwaite
    // degrees of freedom, stepped up to average measures via Spearman-Brown.
    const double r1 =
        (d.msr - d.mse) / (d.msr + (k - 1) * d.mse + k * (d.msc - d.mse) / n);
    const double fj = d.msc / d.mse;
    const double df1 = d.df_rows, df2 = d.df_err;
    const double base = n * (1 + (k - 1) * r1) - k * r1;
    const double vn = df2 * (k * r1 * fj + base) * (k * r1 * fj + base);
    const double vd = df1 * k * k * r1 * r1 * fj * fj + base * base;
    const double v = vn / vd;
    const double fu = f_quantile(1 - alpha / 2, v, df1);
    const double fl = f_quantile(1 - alpha / 2, df1, v);
    const double denom_w = k * d.msc + (k * n - k - n) * d.mse;
    const double low1 = n * (d.msr - fu * d.mse) / (fu * denom_w + n * d.msr);
    const double up1 = n * (fl * d.msr - d.mse) / (denom_w + n * fl * d.msr);
    rep.ci95_low = low1 * k / (1 + (k - 1) * low1);
    rep.ci95_high = up1 * k / (1 + (k - 1) * up1);
    return rep;
}

IccReport icc_3k(const RatingMatrix& m, double alpha) {
    const auto d = anova_decompose(m);
    check_not_degenerate(d);

    IccReport rep;
    rep.kind = IccKind::Icc3k;
    rep.estimate = (d.msr - d.mse) / d.msr;
    fill_f_test(rep, d);

    if (d.mse == 0.0) {
        rep.ci95_low = rep.estimate;
        rep.ci95_high = rep.estimate;
        return rep;
    }
    const double fl = rep.f_value / f_quantile(1 - alpha / 2, rep.df1, rep.df2);
    const double fu = rep.f_value * f_quantile(1 - alpha / 2, rep.df2, rep.df1);
    rep.ci95_low = 1.0 - 1.0 / fl;
    rep.ci95_high = 1.0 - 1.0 / fu;
    return rep;
}

RatingMatrix build_intra_matrix(std::span<const ScoreRecord> records,
                                const std::string& model, int repeats) {
    std::map<std::string, std::map<int, double>> by_submission;
    for (const auto& r : records) {
        if (r.model != model) continue;
        if (r.index < 0 || r.index >= repeats) continue;
        by_submission[r.submission_id][r.index] = r.score;
    }
    std::vector<std::string> gaps;
    RatingMatrix m;
    for (int q = 0; q < repeats; ++q) m.rater_ids.push_back("q" + std::to_string(q));
    for (const auto& [sid, cells] : by_submission) {
        m.subject_ids.push_back(sid);
        for (int q = 0; q < repeats; ++q) {
            auto it = cells.find(q);
            if (it == cells.end()) {
                gaps.push_back(sid + ":q" + std::to_string(q));
                m.values.push_back(0);
            } else {
                m.values.push_back(it->second);
            }
        }
    }
    if (!gaps.empty()) {
        std::ostringstream msg;
        msg << "intra matrix for model '" << model << "' is missing " << gaps.size()
            << " cell(s): " << gaps.front();
        if (gaps.size() > 1) msg << " ...";
        throw IncompleteMatrixError(msg.str(), gaps);
    }
    return m;
}

RatingMatrix build_inter_matrix(std::span<const ScoreRecord> records,
                                const std::vector<std::string>& models) {
    std::set<std::string> sids;
    std::map<std::string, std::map<std::string, double>> cell;  // sid -> model -> score
    for (const auto& r : records) {
        sids.insert(r.submission_id);
        cell[r.submission_id][r.model] = r.score;
    }
    std::vector<std::string> gaps;
    RatingMatrix m;
    m.rater_ids = models;
    for (const auto& sid : sids) {
        m.subject_ids.push_back(sid);
        for (const auto& model : models) {
            auto it = cell[sid].find(model);
            if (it == cell[sid].end()) {
                gaps.push_back(sid + ":" + model);
                m.values.push_back(0);
            } else {
                m.values.push_back(it->second);
            }
        }
    }
    if (!gaps.empty()) {
        std::ostringstream msg;
        msg << "inter matrix is missing " << gaps.size()
            << " cell(s): " << gaps.front();
        if (gaps.size() > 1) msg << " ...";
        throw IncompleteMatrixError(msg.str(), gaps);
    }
    return m;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        // trim surrounding whitespace
        size_t b = field.find_first_not_of(" \t\r");
        size_t e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    return out;
}

}  // namespace

RatingMatrix load_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open matrix file " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw InsufficientDataError("matrix file is empty: " + path.string());
    auto header = split_csv_line(line);
    if (header.size() < 3)
        throw InsufficientDataError("matrix header needs at least two rater columns");

    RatingMatrix m;
    m.rater_ids.assign(header.begin() + 1, header.end());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw InsufficientDataError("row '" + line + "' has " +
                                        std::to_string(fields.size()) +
                                        " fields, expected " +
                                        std::to_string(header.size()));
        m.subject_ids.push_back(fields[0]);
        for (size_t j = 1; j < fields.size(); ++j) m.values.push_back(std::stod(fields[j]));
    }
    m.validate();
    return m;
}

std::string format_p_value(double p) {
    if (p < 1e-12) return "<1e-12";
    std::ostringstream out;
    out.precision(3);
    out << p;
    return out.str();
}

}  // namespace codev
