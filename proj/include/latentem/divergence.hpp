// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <string>

#include "latentem/contingency_table.hpp"
#include "latentem/errors.hpp"

namespace latentem {

/// Kullback-Leibler divergence sum_ik F_ik * ln(F_ik / P_ik) in nats.
/// Cells with F_ik = 0 contribute nothing; a cell with F_ik > 0 but
/// P_ik <= 0 raises SupportMismatchError.
inline double kl_divergence(const Matrix& observed, const Matrix& model) {
    if (observed.rows() != model.rows() || observed.cols() != model.cols())
        throw SupportMismatchError("shape mismatch between table and model");
    double total = 0.0;
    for (Eigen::Index i = 0; i < observed.rows(); ++i)
        for (Eigen::Index k = 0; k < observed.cols(); ++k) {
            const double f = observed(i, k);
            if (f == 0.0) continue;
            const double p = model(i, k);
            if (!(p > 0.0))
                throw SupportMismatchError("model has no mass at (" + std::to_string(i) +
                                           ", " + std::to_string(k) +
                                           ") where the table does");
            total += f * std::log(f / p);
        }
    return total;
}

inline double kl_divergence(const ContingencyTable& table, const Matrix& model) {
    return kl_divergence(table.values(), model);
}

/// Mutual information I(X:Y) of a joint table, computed as the divergence
/// from the independence product of its margins.
inline double mutual_information(const Matrix& joint) {
    const Vector row = joint.rowwise().sum();
    const Vector col = joint.colwise().sum();
    return kl_divergence(joint, Matrix(row * col.transpose()));
}

inline double mutual_information(const ContingencyTable& table) {
    return kl_divergence(table.values(),
                         Matrix(table.row_margins() * table.col_margins().transpose()));
}

}  // namespace latentem
