// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "latentem/errors.hpp"

namespace latentem {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Absolute tolerance on the smallest eigenvalue when deciding positive
/// semi-definiteness.
inline constexpr double kPsdTolerance = 1e-10;

/// Normalized two-way frequency table. Entries are non-negative, the grand
/// total is 1, and row/column margins are cached at construction. A square
/// table doubles as the weighted adjacency of a directed network, with
/// row margins as out-weights and column margins as in-weights.
///
/// Immutable after construction; safe to share across concurrent fitters.
class ContingencyTable {
  public:
    /// Builds a table from raw non-negative counts, dividing by the grand
    /// total. Rejects any all-zero row or column: every fitter divides by
    /// margins, so zero lines have no usable representation here.
    ///
    /// Inputs whose total is already within 1e-12 of 1 are kept bit-identical,
    /// which makes normalization exactly idempotent.
    static ContingencyTable normalize(Matrix raw,
                                      std::vector<std::string> row_labels = {},
                                      std::vector<std::string> col_labels = {}) {
        check_entries(raw);
        reject_zero_lines(raw);
        return ContingencyTable(scale_to_unit(std::move(raw)),
                                std::move(row_labels), std::move(col_labels));
    }

    /// Lenient construction used by the ingestion readers, where zero rows or
    /// columns arise naturally (a vertex with no out-edges, a symbol that only
    /// ends the text). Entries must still be non-negative with positive total.
    static ContingencyTable from_frequencies(Matrix raw,
                                             std::vector<std::string> row_labels = {},
                                             std::vector<std::string> col_labels = {}) {
        check_entries(raw);
        return ContingencyTable(scale_to_unit(std::move(raw)),
                                std::move(row_labels), std::move(col_labels));
    }

    const Matrix& values() const { return values_; }
    Eigen::Index rows() const { return values_.rows(); }
    Eigen::Index cols() const { return values_.cols(); }

    /// f_i = F(i, .)
    const Vector& row_margins() const { return row_margins_; }
    /// f_k = F(., k)
    const Vector& col_margins() const { return col_margins_; }

    const std::vector<std::string>& row_labels() const { return row_labels_; }
    const std::vector<std::string>& col_labels() const { return col_labels_; }

    bool square() const { return values_.rows() == values_.cols(); }

    bool symmetric(double tol = 1e-12) const {
        if (!square()) return false;
        return (values_ - values_.transpose()).cwiseAbs().maxCoeff() <= tol;
    }

    /// max_i |F(i,.) - F(.,i)|; zero for exactly marginally homogeneous tables.
    double mh_deviation() const {
        if (!square()) throw NotSquareError("mh_deviation requires a square table");
        return (row_margins_ - col_margins_).cwiseAbs().maxCoeff();
    }

  private:
    ContingencyTable(Matrix values, std::vector<std::string> row_labels,
                     std::vector<std::string> col_labels)
        : values_(std::move(values)),
          row_margins_(values_.rowwise().sum()),
          col_margins_(values_.colwise().sum()),
          row_labels_(std::move(row_labels)),
          col_labels_(std::move(col_labels)) {
        if (!row_labels_.empty() &&
            row_labels_.size() != static_cast<std::size_t>(values_.rows()))
            throw ParseError("row label count does not match row count");
        if (!col_labels_.empty() &&
            col_labels_.size() != static_cast<std::size_t>(values_.cols()))
            throw ParseError("column label count does not match column count");
    }

    static void check_entries(const Matrix& raw) {
        if (raw.rows() == 0 || raw.cols() == 0)
            throw ZeroTableError("table has no cells");
        for (Eigen::Index i = 0; i < raw.rows(); ++i)
            for (Eigen::Index k = 0; k < raw.cols(); ++k) {
                const double v = raw(i, k);
                if (std::isnan(v) || v < 0.0)
                    throw NegativeEntryError("negative entry at (" + std::to_string(i) +
                                             ", " + std::to_string(k) + ")");
            }
        if (!(raw.sum() > 0.0)) throw ZeroTableError("table total is zero");
    }

    static void reject_zero_lines(const Matrix& raw) {
        for (Eigen::Index i = 0; i < raw.rows(); ++i)
            if (raw.row(i).sum() == 0.0)
                throw ZeroLineError("row " + std::to_string(i) + " is all zero");
        for (Eigen::Index k = 0; k < raw.cols(); ++k)
            if (raw.col(k).sum() == 0.0)
                throw ZeroLineError("column " + std::to_string(k) + " is all zero");
    }

    static Matrix scale_to_unit(Matrix raw) {
        const double total = raw.sum();
        if (std::abs(total - 1.0) > 1e-12) raw /= total;
        return raw;
    }

    Matrix values_;
    Vector row_margins_;
    Vector col_margins_;
    std::vector<std::string> row_labels_;
    std::vector<std::string> col_labels_;
};

/// (F + F') / 2. Margins become the average of row and column margins.
inline ContingencyTable symmetrize(const ContingencyTable& table) {
    if (!table.square()) throw NotSquareError("symmetrize requires a square table");
    Matrix sym = (table.values() + table.values().transpose()) / 2.0;
    return ContingencyTable::from_frequencies(std::move(sym), table.row_labels(),
                                              table.col_labels());
}

/// Bounds on the diagonal inflation factor: `nonneg` keeps every inflated
/// entry non-negative, `psd` keeps the inflated table positive semi-definite.
/// Either bound may be infinite (diagonal tables admit any factor), and
/// neither dominates the other in general.
struct LambdaBounds {
    double nonneg;
    double psd;
};

namespace detail {

inline double min_eigenvalue_sym(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

inline Matrix inflate_values(const ContingencyTable& table, double lambda) {
    Matrix inflated = lambda * table.values();
    inflated.diagonal() += (1.0 - lambda) * table.row_margins();
    return inflated;
}

}  // namespace detail

namespace detail {

// Inflation only drives diagonal entries toward zero; entry i stays
// non-negative for lambda <= f_i / (f_i - F_ii) whenever f_i > F_ii.
inline double nonneg_inflation_bound(const ContingencyTable& table) {
    double bound = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
        const double fi = table.row_margins()(i);
        const double diag = table.values()(i, i);
        if (fi > diag) bound = std::min(bound, fi / (fi - diag));
    }
    return bound;
}

}  // namespace detail

inline LambdaBounds lambda_bounds(const ContingencyTable& table) {
    if (!table.symmetric())
        throw NotSymmetricError("lambda_bounds requires a symmetric table");
    const double inf = std::numeric_limits<double>::infinity();
    const double nonneg = detail::nonneg_inflation_bound(table);

    // The smallest eigenvalue of the inflated table is concave in lambda and
    // the table at lambda = 0 is diagonal, hence PSD; the admissible set is an
    // interval found by doubling then bisection.
    Matrix deviation = table.values();
    deviation.diagonal() -= table.row_margins();
    double psd = inf;
    if (deviation.cwiseAbs().maxCoeff() > 0.0) {
        auto admissible = [&](double lambda) {
            return detail::min_eigenvalue_sym(detail::inflate_values(table, lambda)) >=
                   -kPsdTolerance;
        };
        double lo = 0.0;
        double hi = 1.0;
        int doublings = 0;
        while (admissible(hi) && doublings < 60) {
            lo = hi;
            hi *= 2.0;
            ++doublings;
        }
        if (doublings >= 60) {
            psd = inf;
        } else {
            for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
                const double mid = 0.5 * (lo + hi);
                (admissible(mid) ? lo : hi) = mid;
            }
            psd = lo;
        }
    }
    return {nonneg, psd};
}

/// Rescales off-diagonal flow by lambda while keeping margins fixed:
/// the entry (i,j) becomes lambda*F_ij + (1-lambda)*delta_ij*f_i.
/// Throws once any inflated entry would turn negative; exceeding the PSD
/// bound is legal here and left to the caller to diagnose.
inline ContingencyTable diagonal_inflation(const ContingencyTable& table, double lambda) {
    if (!table.square()) throw NotSquareError("diagonal_inflation requires a square table");
    if (!table.symmetric())
        throw NotSymmetricError("diagonal_inflation requires a symmetric table");
    if (lambda < 1.0)
        throw LambdaOutOfRangeError("inflation factor must be >= 1");
    if (lambda == 1.0) return table;
    const double nonneg = detail::nonneg_inflation_bound(table);
    if (lambda > nonneg)
        throw LambdaOutOfRangeError("inflation factor " + std::to_string(lambda) +
                                    " exceeds the non-negativity bound " +
                                    std::to_string(nonneg));
    return ContingencyTable::from_frequencies(detail::inflate_values(table, lambda),
                                              table.row_labels(), table.col_labels());
}

/// Eigenvalue and margin diagnostics of a square table. Eigenvalues are taken
/// on the symmetrized table when the input is asymmetric; diffusivity (all
/// eigenvalues non-negative) is only claimed for symmetric input.
struct SpectralReport {
    double min_eigenvalue;
    bool is_diffusive;
    bool is_symmetric;
    double mh_deviation;
};

inline SpectralReport spectral_report(const ContingencyTable& table) {
    if (!table.square()) throw NotSquareError("spectral_report requires a square table");
    const bool sym = table.symmetric();
    const Matrix sym_values =
        sym ? table.values()
            : Matrix((table.values() + table.values().transpose()) / 2.0);
    const double min_eig = detail::min_eigenvalue_sym(sym_values);
    return SpectralReport{min_eig, sym && min_eig >= -kPsdTolerance, sym,
                          table.mh_deviation()};
}

}  // namespace latentem
