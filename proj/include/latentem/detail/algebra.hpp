// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "latentem/errors.hpp"

namespace latentem::detail {

using Eigen::Index;

/// Elementwise F/P ratio with the EM zero conventions: cells with F = 0
/// yield 0 regardless of P, and F > 0 over P <= 0 is a support violation.
inline Eigen::MatrixXd support_ratio(const Eigen::MatrixXd& observed,
                                     const Eigen::MatrixXd& model) {
    Eigen::MatrixXd ratio = Eigen::MatrixXd::Zero(observed.rows(), observed.cols());
    for (Index i = 0; i < observed.rows(); ++i)
        for (Index k = 0; k < observed.cols(); ++k) {
            const double f = observed(i, k);
            if (f == 0.0) continue;
            const double p = model(i, k);
            if (!(p > 0.0))
                throw SupportMismatchError("model has no mass at (" + std::to_string(i) +
                                           ", " + std::to_string(k) +
                                           ") where the table does");
            ratio(i, k) = f / p;
        }
    return ratio;
}

// Zero-sum lines are left untouched: a group whose mass vanished stays dead
// instead of poisoning the model with NaNs.
inline void normalize_columns(Eigen::MatrixXd& m) {
    for (Index g = 0; g < m.cols(); ++g) {
        const double total = m.col(g).sum();
        if (total > 0.0) m.col(g) /= total;
    }
}

inline void normalize_rows(Eigen::MatrixXd& m) {
    for (Index i = 0; i < m.rows(); ++i) {
        const double total = m.row(i).sum();
        if (total > 0.0) m.row(i) /= total;
    }
}

/// Additive smoothing followed by renormalization. Multiplicative updates
/// cannot leave an exact zero, so hard initializations are lifted off the
/// boundary before fitting.
inline void smooth_columns(Eigen::MatrixXd& m, double eps) {
    m.array() += eps;
    normalize_columns(m);
}

inline void smooth_rows(Eigen::MatrixXd& m, double eps) {
    m.array() += eps;
    normalize_rows(m);
}

inline void smooth(Eigen::VectorXd& v, double eps) {
    v.array() += eps;
    v /= v.sum();
}

/// Smoothing for a jointly normalized matrix (total mass 1).
inline void smooth_total(Eigen::MatrixXd& m, double eps) {
    m.array() += eps;
    m /= m.sum();
}

/// Row-wise argmax with ties resolved toward the lowest index.
inline std::vector<int> argmax_rows(const Eigen::MatrixXd& m) {
    std::vector<int> winners(static_cast<std::size_t>(m.rows()), 0);
    for (Index i = 0; i < m.rows(); ++i) {
        int best = 0;
        for (Index g = 1; g < m.cols(); ++g)
            if (m(i, g) > m(i, best)) best = static_cast<int>(g);
        winners[static_cast<std::size_t>(i)] = best;
    }
    return winners;
}

inline void require_finite_nonnegative(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite() || (m.array() < 0.0).any())
        throw Error(std::string(what) + " must be finite and non-negative");
}

}  // namespace latentem::detail
