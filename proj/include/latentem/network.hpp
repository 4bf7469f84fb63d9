// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "latentem/colatent.hpp"
#include "latentem/contingency_table.hpp"
#include "latentem/detail/algebra.hpp"
#include "latentem/detail/random.hpp"
#include "latentem/divergence.hpp"
#include "latentem/errors.hpp"
#include "latentem/fit_trace.hpp"

namespace latentem {

/// Soft clustering of an unoriented weighted network in membership form:
/// P_ij = f_i f_j sum_g Z(i,g) Z(j,g) / rho_g. Rows of Z sum to 1, f holds
/// the vertex weights (the symmetric table's margins), and
/// rho_g = sum_i f_i Z(i,g).
struct NetworkLatentModel {
    Matrix Z;
    Vector rho;
    Vector f;

    int groups() const { return static_cast<int>(rho.size()); }
};

inline void validate(const NetworkLatentModel& model) {
    detail::require_finite_nonnegative(model.Z, "memberships");
    detail::require_finite_nonnegative(model.rho, "group weights");
    detail::require_finite_nonnegative(model.f, "vertex weights");
    if (model.Z.rows() != model.f.size() || model.Z.cols() != model.rho.size())
        throw Error("membership matrix shape disagrees with weights");
    for (Eigen::Index i = 0; i < model.Z.rows(); ++i)
        if (std::abs(model.Z.row(i).sum() - 1.0) > 1e-12)
            throw Error("membership row does not sum to 1");
    if (std::abs(model.rho.sum() - 1.0) > 1e-12)
        throw Error("group weights must sum to 1");
    if ((model.rho - model.Z.transpose() * model.f).cwiseAbs().maxCoeff() > 1e-12)
        throw Error("group weights are not the membership-weighted vertex weights");
}

/// P = diag(f) Z diag(1/rho) Z' diag(f); a Gram matrix, hence positive
/// semi-definite. Groups with zero weight carry zero membership mass and
/// contribute nothing.
inline Matrix reconstruct_latent(const NetworkLatentModel& model) {
    Vector inv_rho(model.rho.size());
    for (Eigen::Index g = 0; g < model.rho.size(); ++g)
        inv_rho(g) = model.rho(g) > 0.0 ? 1.0 / model.rho(g) : 0.0;
    const Matrix weighted = model.f.asDiagonal() * model.Z;
    return weighted * inv_rho.asDiagonal() * weighted.transpose();
}

namespace detail {

inline void network_update(NetworkLatentModel& model, const Matrix& ratio) {
    Vector inv_rho(model.rho.size());
    for (Eigen::Index g = 0; g < model.rho.size(); ++g)
        inv_rho(g) = model.rho(g) > 0.0 ? 1.0 / model.rho(g) : 0.0;
    const Matrix gain = ratio * model.f.asDiagonal() * model.Z * inv_rho.asDiagonal();
    model.Z = model.Z.cwiseProduct(gain);
    // Rows of the updated Z sum to 1 by the algebra of the update whenever
    // f matches the table margins; no renormalization is applied.
    model.rho = model.Z.transpose() * model.f;
}

}  // namespace detail

inline NetworkLatentModel network_em_step(const ContingencyTable& table,
                                          const NetworkLatentModel& model) {
    if (!table.symmetric())
        throw NotSymmetricError("network step requires a symmetric table");
    if (model.f.size() != table.rows())
        throw MarginMismatchError("vertex weight count does not match the table");
    if ((model.f - table.row_margins()).cwiseAbs().maxCoeff() > 1e-10)
        throw MarginMismatchError("vertex weights do not match the table margins");
    const Matrix ratio = detail::support_ratio(table.values(), reconstruct_latent(model));
    NetworkLatentModel updated = model;
    detail::network_update(updated, ratio);
    return updated;
}

/// Random hard start: each vertex joins one uniform group, smoothed off the
/// boundary; weights follow from the table margins.
inline NetworkLatentModel random_hard_init_network(const ContingencyTable& table, int m,
                                                   std::uint64_t seed, double eps = 1e-8) {
    if (m < 1) throw ConfigError("group count must be >= 1");
    if (!table.square()) throw NotSquareError("network models need a square table");
    detail::Rng rng(seed);
    NetworkLatentModel model;
    model.Z = Matrix::Zero(table.rows(), m);
    for (Eigen::Index i = 0; i < table.rows(); ++i)
        model.Z(i, rng.uniform_int(m)) = 1.0;
    detail::smooth_rows(model.Z, eps);
    model.f = table.row_margins();
    model.rho = model.Z.transpose() * model.f;
    return model;
}

struct NetworkFit {
    NetworkLatentModel model;
    FitTrace trace;
    ContingencyTable fitted_table;  // after symmetrization and inflation
    bool symmetrized_input;
    double lambda;
};

/// Fit driver on an already symmetric table with a caller-supplied start.
inline NetworkFit fit_network_from(const ContingencyTable& table, NetworkLatentModel init,
                                   const FitOptions& options = {}) {
    const double initial_kl = kl_divergence(table, reconstruct_latent(init));
    FitTrace trace = detail::iterate_em(
        init, initial_kl,
        [&table](NetworkLatentModel& model) {
            detail::network_update(
                model, detail::support_ratio(table.values(), reconstruct_latent(model)));
            return kl_divergence(table, reconstruct_latent(model));
        },
        options);
    return {std::move(init), std::move(trace), table, false, 1.0};
}

/// Full network workflow: symmetrize an asymmetric input, inflate the
/// diagonal when lambda > 1 (checked against the non-negativity bound), then
/// run the membership iteration from a seeded random hard start. The
/// divergence trace refers to the table actually fitted.
inline NetworkFit fit_network(const ContingencyTable& table, int m, double lambda,
                              std::uint64_t seed, const FitOptions& options = {}) {
    if (!table.square()) throw NotSquareError("network models need a square table");
    const bool needs_symmetrizing = !table.symmetric();
    ContingencyTable working = needs_symmetrizing ? symmetrize(table) : table;
    if (lambda != 1.0) working = diagonal_inflation(working, lambda);
    NetworkFit result =
        fit_network_from(working, random_hard_init_network(working, m, seed), options);
    result.symmetrized_input = needs_symmetrizing;
    result.lambda = lambda;
    return result;
}

enum class NetworkVariant { general, symmetric, marginally_homogeneous };

inline const char* to_string(NetworkVariant variant) {
    switch (variant) {
        case NetworkVariant::general: return "general";
        case NetworkVariant::symmetric: return "symmetric";
        default: return "mh";
    }
}

/// Shared-emission co-clustering model of a square table:
/// P_ij = sum_uv C(u,v) A(i,u) A(j,v). The variant records the model family:
/// `symmetric` constrains C = C', `marginally_homogeneous` targets
/// C(u,.) = C(.,u) (monitored during fitting rather than enforced).
struct NetworkCoModel {
    Matrix C;
    Matrix A;
    NetworkVariant variant = NetworkVariant::general;

    int groups() const { return static_cast<int>(C.rows()); }
};

inline void validate(const NetworkCoModel& model) {
    detail::require_finite_nonnegative(model.C, "joint latent distribution");
    detail::require_finite_nonnegative(model.A, "emissions");
    if (model.C.rows() != model.C.cols())
        throw SquareOnlyError("shared-emission models need a square joint distribution");
    if (model.A.cols() != model.C.rows())
        throw Error("emissions and joint latent distribution disagree on group count");
    if (std::abs(model.C.sum() - 1.0) > 1e-12)
        throw Error("joint latent distribution must sum to 1");
    for (Eigen::Index u = 0; u < model.A.cols(); ++u)
        if (std::abs(model.A.col(u).sum() - 1.0) > 1e-12)
            throw Error("emission column does not sum to 1");
    if (model.variant == NetworkVariant::symmetric &&
        (model.C - model.C.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw SymmetryViolationError("joint latent distribution is not symmetric");
    // Marginal homogeneity of C is a monitored target, not a hard invariant;
    // use check_marginal_homogeneity to enforce it explicitly.
}

inline void check_marginal_homogeneity(const NetworkCoModel& model, double tolerance) {
    const Vector gap = model.C.rowwise().sum() - model.C.colwise().sum().transpose();
    if (gap.cwiseAbs().maxCoeff() > tolerance)
        throw Error("joint latent distribution is not marginally homogeneous");
}

/// P = A C A'.
inline Matrix reconstruct_co(const NetworkCoModel& model) {
    return model.A * model.C * model.A.transpose();
}

namespace detail {

inline void network_co_update(NetworkCoModel& model, const Matrix& ratio) {
    const Matrix coupling = model.A.transpose() * ratio * model.A;
    Matrix gain;
    if (model.variant == NetworkVariant::symmetric) {
        // With symmetric data and a symmetric C the two additive halves of
        // the general numerator coincide; one side suffices and C stays
        // symmetric from step to step.
        gain = ratio * (model.A * model.C.transpose());
    } else {
        gain = ratio * (model.A * model.C.transpose()) +
               ratio.transpose() * (model.A * model.C);
    }
    model.C = model.C.cwiseProduct(coupling);
    model.C /= model.C.sum();
    model.A = model.A.cwiseProduct(gain);
    normalize_columns(model.A);
}

}  // namespace detail

inline NetworkCoModel network_co_em_step(const ContingencyTable& table,
                                         const NetworkCoModel& model) {
    if (!table.square()) throw NotSquareError("network models need a square table");
    if (model.variant == NetworkVariant::symmetric) {
        if (!table.symmetric())
            throw SymmetryViolationError("symmetric variant requires a symmetric table");
        if ((model.C - model.C.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw SymmetryViolationError("symmetric variant requires a symmetric C");
    }
    const Matrix ratio = detail::support_ratio(table.values(), reconstruct_co(model));
    NetworkCoModel updated = model;
    detail::network_co_update(updated, ratio);
    return updated;
}

/// Random hard start with one vertex partition: emissions carry the
/// group-conditional vertex weights (mean of in- and out-margins), C is the
/// induced block aggregation of the table.
inline NetworkCoModel random_hard_init_network_co(const ContingencyTable& table, int m,
                                                  NetworkVariant variant, std::uint64_t seed,
                                                  double eps = 1e-8) {
    if (m < 1) throw ConfigError("group count must be >= 1");
    if (!table.square()) throw NotSquareError("network models need a square table");
    detail::Rng rng(seed);
    std::vector<int> group(static_cast<std::size_t>(table.rows()));
    for (auto& g : group) g = rng.uniform_int(m);

    NetworkCoModel model;
    model.variant = variant;
    const Vector weight = 0.5 * (table.row_margins() + table.col_margins());
    model.A = Matrix::Zero(table.rows(), m);
    for (Eigen::Index i = 0; i < table.rows(); ++i)
        model.A(i, group[static_cast<std::size_t>(i)]) = weight(i);
    model.C = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < table.rows(); ++i)
        for (Eigen::Index j = 0; j < table.cols(); ++j)
            model.C(group[static_cast<std::size_t>(i)],
                    group[static_cast<std::size_t>(j)]) += table.values()(i, j);

    detail::smooth_columns(model.A, eps);
    detail::smooth_total(model.C, eps);
    if (variant == NetworkVariant::symmetric)
        model.C = 0.5 * (model.C + model.C.transpose());
    return model;
}

struct NetworkCoFit {
    NetworkCoModel model;
    FitTrace trace;
    LatentMarkovSummary markov;
    std::vector<double> mh_deviation_per_iteration;
};

namespace detail {

inline double c_margin_gap(const Matrix& c) {
    return (c.rowwise().sum() - c.colwise().sum().transpose()).cwiseAbs().maxCoeff();
}

/// Projects a joint latent distribution onto the marginally homogeneous set
/// by alternately scaling rows and columns toward the averaged margins.
/// Total mass is preserved by each pass.
inline void project_marginal_homogeneity(Matrix& c) {
    for (int round = 0; round < 100 && c_margin_gap(c) > 1e-13; ++round) {
        const Vector row = c.rowwise().sum();
        const Vector col = c.colwise().sum().transpose();
        const Vector target = 0.5 * (row + col);
        for (Eigen::Index u = 0; u < c.rows(); ++u)
            if (row(u) > 0.0) c.row(u) *= target(u) / row(u);
        const Vector row2 = c.rowwise().sum();
        const Vector col2 = c.colwise().sum().transpose();
        const Vector target2 = 0.5 * (row2 + col2);
        for (Eigen::Index v = 0; v < c.cols(); ++v)
            if (col2(v) > 0.0) c.col(v) *= target2(v) / col2(v);
    }
    c /= c.sum();
}

}  // namespace detail

/// `project_mh_every` > 0 re-projects C onto the marginally homogeneous set
/// every that many iterations; the default leaves C free and only monitors
/// the gap.
inline NetworkCoFit fit_network_co_from(const ContingencyTable& table, NetworkCoModel init,
                                        const FitOptions& options = {},
                                        int project_mh_every = 0) {
    if (init.variant == NetworkVariant::symmetric && !table.symmetric())
        throw SymmetryViolationError("symmetric variant requires a symmetric table");
    std::vector<double> mh_per_iteration{detail::c_margin_gap(init.C)};
    const double initial_kl = kl_divergence(table, reconstruct_co(init));
    int iteration = 0;
    FitTrace trace = detail::iterate_em(
        init, initial_kl,
        [&table, &mh_per_iteration, &iteration, project_mh_every](NetworkCoModel& model) {
            detail::network_co_update(
                model, detail::support_ratio(table.values(), reconstruct_co(model)));
            ++iteration;
            if (project_mh_every > 0 && iteration % project_mh_every == 0)
                detail::project_marginal_homogeneity(model.C);
            mh_per_iteration.push_back(detail::c_margin_gap(model.C));
            return kl_divergence(table, reconstruct_co(model));
        },
        options);
    LatentMarkovSummary markov = latent_markov_summary(init.C);
    return {std::move(init), std::move(trace), std::move(markov),
            std::move(mh_per_iteration)};
}

inline NetworkCoFit fit_network_co(const ContingencyTable& table, int m,
                                   NetworkVariant variant, std::uint64_t seed,
                                   const FitOptions& options = {},
                                   int project_mh_every = 0) {
    return fit_network_co_from(table, random_hard_init_network_co(table, m, variant, seed),
                               options, project_mh_every);
}

/// Posterior group probabilities of each vertex under the shared-emission
/// model. A vertex acts as both source and target, so the group weights are
/// the averaged row and column margins of C.
inline Matrix memberships(const NetworkCoModel& model) {
    const Vector weights =
        0.5 * (model.C.rowwise().sum() + model.C.colwise().sum().transpose());
    Matrix post = model.A * weights.asDiagonal();
    for (Eigen::Index i = 0; i < post.rows(); ++i) {
        const double total = post.row(i).sum();
        if (!(total > 0.0))
            throw Error("vertex " + std::to_string(i) + " has no mass under the model");
        post.row(i) /= total;
    }
    return post;
}

/// Membership recovery for marginally homogeneous data: solves
/// sum_g rho_g A(i,g) = f_i for a non-negative rho summing to 1 (least
/// squares, equality constraint handled exactly, negativity by active set),
/// then Z(i,g) = rho_g A(i,g) / f_i.
struct MhRecovery {
    Vector rho;
    Matrix Z;
    double residual;       // max_i |(A rho)_i - f_i|
    bool non_unique = false;
};

inline MhRecovery mh_membership_recovery(const Matrix& emissions, const Vector& frequencies,
                                         double infeasible_threshold = 1e-3) {
    const Eigen::Index n = emissions.rows();
    const Eigen::Index m = emissions.cols();
    if (frequencies.size() != n)
        throw ConfigError("frequency vector length does not match emissions");
    if ((frequencies.array() <= 0.0).any())
        throw ConfigError("frequencies must be strictly positive");

    // Equality-constrained least squares via the KKT system
    // [A'A 1; 1' 0][rho; mu] = [A'f; 1], re-solved with the most negative
    // coordinate pinned to zero until feasible. Minimum-norm solves make the
    // rank-deficient case (duplicate emission columns) deterministic and
    // symmetric across the tied groups.
    const Matrix gram = emissions.transpose() * emissions;
    const Vector target = emissions.transpose() * frequencies;
    std::vector<bool> pinned(static_cast<std::size_t>(m), false);
    Vector rho = Vector::Zero(m);
    bool non_unique = false;
    for (int round = 0; round <= m; ++round) {
        std::vector<Eigen::Index> free_idx;
        for (Eigen::Index g = 0; g < m; ++g)
            if (!pinned[static_cast<std::size_t>(g)]) free_idx.push_back(g);
        if (free_idx.empty()) throw InfeasibleWeightsError("all weights pinned to zero");
        const Eigen::Index k = static_cast<Eigen::Index>(free_idx.size());
        Matrix kkt = Matrix::Zero(k + 1, k + 1);
        Vector rhs = Vector::Zero(k + 1);
        for (Eigen::Index a = 0; a < k; ++a) {
            for (Eigen::Index b = 0; b < k; ++b) kkt(a, b) = gram(free_idx[a], free_idx[b]);
            kkt(a, k) = 1.0;
            kkt(k, a) = 1.0;
            rhs(a) = target(free_idx[a]);
        }
        rhs(k) = 1.0;
        Eigen::CompleteOrthogonalDecomposition<Matrix> solver(kkt);
        solver.setThreshold(1e-10);
        if (solver.rank() < k + 1) non_unique = true;
        const Vector solution = solver.solve(rhs);

        rho.setZero();
        Eigen::Index worst = -1;
        double most_negative = -1e-12;
        for (Eigen::Index a = 0; a < k; ++a) {
            rho(free_idx[a]) = solution(a);
            if (solution(a) < most_negative) {
                most_negative = solution(a);
                worst = free_idx[a];
            }
        }
        if (worst < 0) break;
        pinned[static_cast<std::size_t>(worst)] = true;
    }
    rho = rho.cwiseMax(0.0);
    rho /= rho.sum();

    const double residual = (emissions * rho - frequencies).cwiseAbs().maxCoeff();
    if (residual > infeasible_threshold)
        throw InfeasibleWeightsError("emissions cannot reproduce the frequencies; residual " +
                                     std::to_string(residual));
    Matrix memberships = emissions * rho.asDiagonal();
    memberships.array().colwise() /= frequencies.array();
    return {std::move(rho), std::move(memberships), residual, non_unique};
}

}  // namespace latentem
