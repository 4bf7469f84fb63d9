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

namespace latentem {

/// Mixture of m groups making rows and columns conditionally independent:
/// P_ik = sum_g rho_g * A(i,g) * B(k,g). Group weights rho sum to 1 and each
/// column of the emission matrices A (n x m) and B (p x m) sums to 1.
struct LatentModel {
    Vector rho;
    Matrix A;
    Matrix B;

    int groups() const { return static_cast<int>(rho.size()); }
};

inline void validate(const LatentModel& model) {
    detail::require_finite_nonnegative(model.rho, "group weights");
    detail::require_finite_nonnegative(model.A, "row emissions");
    detail::require_finite_nonnegative(model.B, "column emissions");
    if (model.A.cols() != model.rho.size() || model.B.cols() != model.rho.size())
        throw Error("emission matrices and group weights disagree on group count");
    if (std::abs(model.rho.sum() - 1.0) > 1e-12)
        throw Error("group weights must sum to 1");
    for (Eigen::Index g = 0; g < model.rho.size(); ++g) {
        if (std::abs(model.A.col(g).sum() - 1.0) > 1e-12)
            throw Error("row emission column does not sum to 1");
        if (std::abs(model.B.col(g).sum() - 1.0) > 1e-12)
            throw Error("column emission column does not sum to 1");
    }
}

/// P = A diag(rho) B'.
inline Matrix reconstruct(const LatentModel& model) {
    return model.A * model.rho.asDiagonal() * model.B.transpose();
}

/// Per-step correction factors and divergence bracket of one EM step.
/// kappa_g is the total reweighted mass seen by group g; sum_g rho_g kappa_g
/// equals the table total, i.e. 1. Groups whose weight collapsed below the
/// freezing floor during the step are listed in frozen_groups.
struct StepDiagnostics {
    Vector kappa;
    double kl_before;
    double kl_after;
    std::vector<int> frozen_groups;
};

/// Weight floor below which a group is frozen: emissions kept, weight
/// clamped. Keeps the group count fixed instead of renormalizing groups away.
inline constexpr double kGroupFreezeFloor = 1e-12;

namespace detail {

/// One multiplicative EM update given the precomputed ratio R = F/P.
/// Column sums of the updated emissions equal kappa_g algebraically, so the
/// column renormalization both applies the kappa division and absorbs
/// floating-point drift. Returns kappa.
inline Vector latent_update(LatentModel& model, const Matrix& ratio,
                            std::vector<int>* frozen_out = nullptr) {
    const Matrix ratio_b = ratio * model.B;                 // n x m
    const Matrix ratio_t_a = ratio.transpose() * model.A;   // p x m
    Vector kappa(model.rho.size());
    for (Eigen::Index g = 0; g < kappa.size(); ++g)
        kappa(g) = model.A.col(g).dot(ratio_b.col(g));

    Vector new_rho = model.rho.cwiseProduct(kappa);
    Matrix new_a = model.A.cwiseProduct(ratio_b);
    Matrix new_b = model.B.cwiseProduct(ratio_t_a);
    for (Eigen::Index g = 0; g < new_rho.size(); ++g) {
        if (new_rho(g) >= kGroupFreezeFloor) continue;
        new_rho(g) = kGroupFreezeFloor;
        new_a.col(g) = model.A.col(g);
        new_b.col(g) = model.B.col(g);
        if (frozen_out) frozen_out->push_back(static_cast<int>(g));
    }
    model.rho = new_rho / new_rho.sum();
    model.A = std::move(new_a);
    model.B = std::move(new_b);
    normalize_columns(model.A);
    normalize_columns(model.B);
    return kappa;
}

}  // namespace detail

inline std::pair<LatentModel, StepDiagnostics> em_step(const ContingencyTable& table,
                                                       const LatentModel& model) {
    const Matrix p_before = reconstruct(model);
    const Matrix ratio = detail::support_ratio(table.values(), p_before);
    StepDiagnostics diag;
    diag.kl_before = kl_divergence(table, p_before);
    LatentModel updated = model;
    diag.kappa = detail::latent_update(updated, ratio, &diag.frozen_groups);
    diag.kl_after = kl_divergence(table, reconstruct(updated));
    return {std::move(updated), std::move(diag)};
}

/// Saturated construction reproducing the table exactly: with m = min(n, p)
/// groups, one emission matrix is the identity and the other carries the
/// group-conditional table columns. Already a fixed point of em_step.
inline LatentModel saturated_init(const ContingencyTable& table) {
    const Eigen::Index n = table.rows();
    const Eigen::Index p = table.cols();
    LatentModel model;
    if (p <= n) {
        for (Eigen::Index g = 0; g < p; ++g)
            if (table.col_margins()(g) <= 0.0)
                throw ZeroLineError("saturated construction needs positive column margins");
        model.rho = table.col_margins();
        model.B = Matrix::Identity(p, p);
        model.A = table.values().array().rowwise() /
                  table.col_margins().transpose().array();
    } else {
        for (Eigen::Index g = 0; g < n; ++g)
            if (table.row_margins()(g) <= 0.0)
                throw ZeroLineError("saturated construction needs positive row margins");
        model.rho = table.row_margins();
        model.A = Matrix::Identity(n, n);
        model.B = table.values().transpose().array().rowwise() /
                  table.row_margins().transpose().array();
    }
    return model;
}

/// Random hard start: every row and every column is assigned to one uniform
/// group, emissions are the group-conditional margins, and everything is
/// eps-smoothed to keep the support full.
inline LatentModel random_hard_init(const ContingencyTable& table, int m,
                                    std::uint64_t seed, double eps = 1e-8) {
    if (m < 1) throw ConfigError("group count must be >= 1");
    detail::Rng rng(seed);
    LatentModel model;
    model.A = Matrix::Zero(table.rows(), m);
    model.B = Matrix::Zero(table.cols(), m);
    Vector row_mass = Vector::Zero(m);
    Vector col_mass = Vector::Zero(m);
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
        const int g = rng.uniform_int(m);
        model.A(i, g) = table.row_margins()(i);
        row_mass(g) += table.row_margins()(i);
    }
    for (Eigen::Index k = 0; k < table.cols(); ++k) {
        const int g = rng.uniform_int(m);
        model.B(k, g) = table.col_margins()(k);
        col_mass(g) += table.col_margins()(k);
    }
    model.rho = 0.5 * (row_mass + col_mass);
    detail::smooth_columns(model.A, eps);
    detail::smooth_columns(model.B, eps);
    detail::smooth(model.rho, eps);
    return model;
}

struct LatentFit {
    LatentModel model;
    FitTrace trace;
};

inline LatentFit fit(const ContingencyTable& table, LatentModel init,
                     const FitOptions& options = {}) {
    const double initial_kl = kl_divergence(table, reconstruct(init));
    FitTrace trace = detail::iterate_em(
        init, initial_kl,
        [&table](LatentModel& model) {
            detail::latent_update(model,
                                  detail::support_ratio(table.values(), reconstruct(model)));
            return kl_divergence(table, reconstruct(model));
        },
        options);
    return {std::move(init), std::move(trace)};
}

/// Posterior group probabilities p(g|row i) and p(g|column k) under the model.
struct Memberships {
    Matrix rows;  // n x m, rows sum to 1
    Matrix cols;  // p x m, rows sum to 1
};

/// Row-wise argmax of a membership matrix; ties go to the lowest group.
inline std::vector<int> hard_assignment(const Matrix& memberships) {
    return detail::argmax_rows(memberships);
}

inline Memberships memberships(const LatentModel& model) {
    auto posterior = [&model](const Matrix& emissions) {
        Matrix post = emissions * model.rho.asDiagonal();
        for (Eigen::Index i = 0; i < post.rows(); ++i) {
            const double total = post.row(i).sum();
            if (!(total > 0.0))
                throw Error("category " + std::to_string(i) +
                            " has no mass under the model");
            post.row(i) /= total;
        }
        return post;
    };
    return {posterior(model.A), posterior(model.B)};
}

}  // namespace latentem
