#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace codev {

/// Complete n x k grid of scores: n subjects (rows) rated by k raters
/// (columns). For intra-model tests the raters are repeated queries; for
/// inter-model tests they are models.
struct RatingMatrix {
    std::vector<double> values;  // row-major, n * k
    std::vector<std::string> subject_ids;
    std::vector<std::string> rater_ids;

    int n() const { return static_cast<int>(subject_ids.size()); }
    int k() const { return static_cast<int>(rater_ids.size()); }
    double at(int i, int j) const { return values[static_cast<size_t>(i) * k() + j]; }

    /// Throws InsufficientDataError unless n >= 2, k >= 2, all cells finite
    /// and the grid is complete.
    void validate() const;
};

struct AnovaDecomposition {
    double msr = 0;  // between-subjects mean square
    double msc = 0;  // between-raters mean square
    double mse = 0;  // residual mean square
    double ssr = 0, ssc = 0, sse = 0;
    double df_rows = 0, df_cols = 0, df_err = 0;
};

enum class IccKind { Icc2k, Icc3k };

struct IccReport {
    IccKind kind = IccKind::Icc2k;
    double estimate = 0;
    double f_value = 0;
    double df1 = 0, df2 = 0;
    double p_value = 1;
    double ci95_low = 0, ci95_high = 0;
};

std::string to_string(IccKind kind);

/// Two-way crossed decomposition: SSR + SSC + SSE equals the total sum of
/// squares (up to floating rounding).
AnovaDecomposition anova_decompose(const RatingMatrix& matrix);

/// ICC(2,k): two-way random model, average measures, absolute agreement.
/// Throws DegenerateMatrixError when there is no between-subject variance.
IccReport icc_2k(const RatingMatrix& matrix, double alpha = 0.05);

/// ICC(3,k): two-way fixed (mixed) model, average measures, consistency.
IccReport icc_3k(const RatingMatrix& matrix, double alpha = 0.05);

/// One per-query score, used to assemble intra-model matrices.
struct ScoreRecord {
    std::string submission_id;
    std::string model;
    int index = 0;  // repeat/query index, or unused for finals
    int score = 0;
};

/// Rows = submissions (sorted), columns = repeat indices q0..q{repeats-1}.
/// Throws IncompleteMatrixError listing every missing (submission, repeat).
RatingMatrix build_intra_matrix(std::span<const ScoreRecord> records,
                                const std::string& model, int repeats);

/// Rows = submissions (sorted), columns = models in the given order, cell =
/// that model's ensemble final score.
RatingMatrix build_inter_matrix(std::span<const ScoreRecord> records,
                                const std::vector<std::string>& models);

/// Delimited text import: header row carries rater ids (first header cell is
/// a label and ignored), first column carries subject ids.
RatingMatrix load_matrix_csv(const std::filesystem::path& path);

/// Report rendering used by the agreement tables: full precision is kept in
/// stored records; displayed p-values below 1e-12 render as "<1e-12".
std::string format_p_value(double p);

}  // namespace codev
