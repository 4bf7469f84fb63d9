// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "latentem/contingency_table.hpp"
#include "latentem/detail/algebra.hpp"
#include "latentem/detail/random.hpp"
#include "latentem/divergence.hpp"
#include "latentem/errors.hpp"
#include "latentem/fit_trace.hpp"
#include "latentem/latent.hpp"

namespace latentem {

/// Co-clustering model with separate row and column latent variables coupled
/// by a joint distribution: P_ik = sum_uv C(u,v) * A(i,u) * B(k,v). C is
/// m1 x m2 with total 1; columns of A (n x m1) and B (p x m2) sum to 1.
struct CoLatentModel {
    Matrix C;
    Matrix A;
    Matrix B;

    int row_groups() const { return static_cast<int>(C.rows()); }
    int col_groups() const { return static_cast<int>(C.cols()); }
};

inline void validate(const CoLatentModel& model) {
    detail::require_finite_nonnegative(model.C, "joint latent distribution");
    detail::require_finite_nonnegative(model.A, "row emissions");
    detail::require_finite_nonnegative(model.B, "column emissions");
    if (model.A.cols() != model.C.rows() || model.B.cols() != model.C.cols())
        throw Error("emission matrices and joint latent distribution disagree on shape");
    if (std::abs(model.C.sum() - 1.0) > 1e-12)
        throw Error("joint latent distribution must sum to 1");
    for (Eigen::Index u = 0; u < model.A.cols(); ++u)
        if (std::abs(model.A.col(u).sum() - 1.0) > 1e-12)
            throw Error("row emission column does not sum to 1");
    for (Eigen::Index v = 0; v < model.B.cols(); ++v)
        if (std::abs(model.B.col(v).sum() - 1.0) > 1e-12)
            throw Error("column emission column does not sum to 1");
}

/// P = A C B'.
inline Matrix reconstruct(const CoLatentModel& model) {
    return model.A * model.C * model.B.transpose();
}

namespace detail {

inline void colatent_update(CoLatentModel& model, const Matrix& ratio) {
    const Matrix coupling = model.A.transpose() * ratio * model.B;        // m1 x m2
    const Matrix row_gain = ratio * (model.B * model.C.transpose());      // n x m1
    const Matrix col_gain = ratio.transpose() * (model.A * model.C);      // p x m2

    model.C = model.C.cwiseProduct(coupling);
    model.C /= model.C.sum();
    model.A = model.A.cwiseProduct(row_gain);
    model.B = model.B.cwiseProduct(col_gain);
    normalize_columns(model.A);
    normalize_columns(model.B);
}

}  // namespace detail

inline CoLatentModel em_step(const ContingencyTable& table, const CoLatentModel& model) {
    const Matrix ratio = detail::support_ratio(table.values(), reconstruct(model));
    CoLatentModel updated = model;
    detail::colatent_update(updated, ratio);
    return updated;
}

/// Random hard start mirroring the latent one: rows to row groups, columns to
/// column groups, C from the induced block aggregation, eps-smoothing on top.
inline CoLatentModel random_hard_init(const ContingencyTable& table, int m1, int m2,
                                      std::uint64_t seed, double eps = 1e-8) {
    if (m1 < 1 || m2 < 1) throw ConfigError("group counts must be >= 1");
    detail::Rng rng(seed);
    std::vector<int> row_group(static_cast<std::size_t>(table.rows()));
    std::vector<int> col_group(static_cast<std::size_t>(table.cols()));
    for (auto& g : row_group) g = rng.uniform_int(m1);
    for (auto& g : col_group) g = rng.uniform_int(m2);

    CoLatentModel model;
    model.A = Matrix::Zero(table.rows(), m1);
    model.B = Matrix::Zero(table.cols(), m2);
    model.C = Matrix::Zero(m1, m2);
    for (Eigen::Index i = 0; i < table.rows(); ++i)
        model.A(i, row_group[static_cast<std::size_t>(i)]) = table.row_margins()(i);
    for (Eigen::Index k = 0; k < table.cols(); ++k)
        model.B(k, col_group[static_cast<std::size_t>(k)]) = table.col_margins()(k);
    for (Eigen::Index i = 0; i < table.rows(); ++i)
        for (Eigen::Index k = 0; k < table.cols(); ++k)
            model.C(row_group[static_cast<std::size_t>(i)],
                    col_group[static_cast<std::size_t>(k)]) += table.values()(i, k);

    detail::smooth_columns(model.A, eps);
    detail::smooth_columns(model.B, eps);
    detail::smooth_total(model.C, eps);
    return model;
}

struct CoLatentFit {
    CoLatentModel model;
    FitTrace trace;
};

inline CoLatentFit fit(const ContingencyTable& table, CoLatentModel init,
                       const FitOptions& options = {}) {
    const double initial_kl = kl_divergence(table, reconstruct(init));
    FitTrace trace = detail::iterate_em(
        init, initial_kl,
        [&table](CoLatentModel& model) {
            detail::colatent_update(model,
                                    detail::support_ratio(table.values(), reconstruct(model)));
            return kl_divergence(table, reconstruct(model));
        },
        options);
    return {std::move(init), std::move(trace)};
}

/// M-step-optimal hard co-clustering for given row and column partitions
/// (group ids 0..m-1, every group non-empty). Returns the block model and its
/// divergence, which equals I(X:Y) - I(U:V).
inline std::pair<CoLatentModel, double> hard_block_model(const ContingencyTable& table,
                                                         const std::vector<int>& row_partition,
                                                         const std::vector<int>& col_partition) {
    if (row_partition.size() != static_cast<std::size_t>(table.rows()) ||
        col_partition.size() != static_cast<std::size_t>(table.cols()))
        throw ConfigError("partition length does not match table shape");
    auto group_count = [](const std::vector<int>& partition) {
        int m = 0;
        for (int g : partition) {
            if (g < 0) throw ConfigError("group ids must be non-negative");
            m = std::max(m, g + 1);
        }
        std::vector<int> counts(static_cast<std::size_t>(m), 0);
        for (int g : partition) ++counts[static_cast<std::size_t>(g)];
        for (int u = 0; u < m; ++u)
            if (counts[static_cast<std::size_t>(u)] == 0)
                throw EmptyGroupError("group " + std::to_string(u) + " is empty");
        return m;
    };
    const int m1 = group_count(row_partition);
    const int m2 = group_count(col_partition);

    CoLatentModel model;
    model.C = Matrix::Zero(m1, m2);
    for (Eigen::Index i = 0; i < table.rows(); ++i)
        for (Eigen::Index k = 0; k < table.cols(); ++k)
            model.C(row_partition[static_cast<std::size_t>(i)],
                    col_partition[static_cast<std::size_t>(k)]) += table.values()(i, k);

    const Vector row_group_mass = model.C.rowwise().sum();
    const Vector col_group_mass = model.C.colwise().sum();
    model.A = Matrix::Zero(table.rows(), m1);
    model.B = Matrix::Zero(table.cols(), m2);
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
        const int u = row_partition[static_cast<std::size_t>(i)];
        model.A(i, u) = table.row_margins()(i) / row_group_mass(u);
    }
    for (Eigen::Index k = 0; k < table.cols(); ++k) {
        const int v = col_partition[static_cast<std::size_t>(k)];
        model.B(k, v) = table.col_margins()(k) / col_group_mass(v);
    }
    const double kl = kl_divergence(table, reconstruct(model));
    return {std::move(model), kl};
}

/// Hidden-state chain implied by a square joint latent distribution: the
/// transition matrix W(u,v) = C(u,v)/C(u,.) and its stationary distribution.
/// A reducible W admits several stationary distributions; the row margins of
/// C are then reported with the flag set.
struct LatentMarkovSummary {
    Matrix W;
    Vector pi;
    double mh_deviation;
    bool multiple_stationary = false;
};

inline LatentMarkovSummary latent_markov_summary(const Matrix& joint) {
    if (joint.rows() != joint.cols())
        throw SquareOnlyError("latent transition matrix needs m1 = m2");
    const Eigen::Index m = joint.rows();
    const Vector row_mass = joint.rowwise().sum();
    const Vector col_mass = joint.colwise().sum();
    for (Eigen::Index u = 0; u < m; ++u)
        if (!(row_mass(u) > 0.0))
            throw ZeroRowGroupError("latent group " + std::to_string(u) +
                                    " has zero row mass");

    LatentMarkovSummary summary;
    summary.W = row_mass.cwiseInverse().asDiagonal() * joint;
    summary.mh_deviation = (row_mass - col_mass).cwiseAbs().maxCoeff();

    // Stationary distribution: solve (W' - I) pi = 0 with sum(pi) = 1 as a
    // stacked least-squares system. Works for periodic chains where power
    // iteration would oscillate; rank deficiency signals multiple solutions.
    Matrix system(m + 1, m);
    system.topRows(m) = summary.W.transpose() - Matrix::Identity(m, m);
    system.bottomRows(1).setOnes();
    Vector rhs = Vector::Zero(m + 1);
    rhs(m) = 1.0;
    Eigen::CompleteOrthogonalDecomposition<Matrix> solver(system);
    solver.setThreshold(1e-10);
    if (solver.rank() < m) {
        summary.multiple_stationary = true;
        summary.pi = row_mass / row_mass.sum();
    } else {
        summary.pi = solver.solve(rhs);
        summary.pi = summary.pi.cwiseMax(0.0);
        summary.pi /= summary.pi.sum();
    }
    return summary;
}

inline LatentMarkovSummary latent_markov_summary(const CoLatentModel& model) {
    return latent_markov_summary(model.C);
}

/// Posterior group probabilities under the co-latent model, with the joint
/// latent margins playing the role of group weights.
inline Memberships memberships(const CoLatentModel& model) {
    auto posterior = [](const Matrix& emissions, const Vector& weights) {
        Matrix post = emissions * weights.asDiagonal();
        for (Eigen::Index i = 0; i < post.rows(); ++i) {
            const double total = post.row(i).sum();
            if (!(total > 0.0))
                throw Error("category " + std::to_string(i) +
                            " has no mass under the model");
            post.row(i) /= total;
        }
        return post;
    };
    return {posterior(model.A, model.C.rowwise().sum()),
            posterior(model.B, model.C.colwise().sum())};
}

}  // namespace latentem
