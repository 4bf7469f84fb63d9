// Apache License, Version 2.0, refer to LICENSE.txt

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "latentem/divergence.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using latentem::ContingencyTable;
using latentem::Matrix;
using test_support::matrix2;

TEST_CASE("divergence of a table from itself is zero") {
    const auto table = ContingencyTable::normalize(matrix2(4, 1, 1, 4));
    REQUIRE(latentem::kl_divergence(table, table.values()) == 0.0);
}

TEST_CASE("divergence against the uniform model is analytic") {
    const auto diag = ContingencyTable::normalize(matrix2(1, 0, 0, 1));
    const Matrix uniform = Matrix::Constant(2, 2, 0.25);
    REQUIRE(latentem::kl_divergence(diag, uniform) ==
            Catch::Approx(std::log(2.0)).margin(1e-15));

    const auto table = ContingencyTable::normalize(matrix2(4, 1, 1, 4));
    const double direct = 0.8 * std::log(1.6) + 0.2 * std::log(0.4);
    REQUIRE(latentem::kl_divergence(table, uniform) ==
            Catch::Approx(direct).margin(1e-15));
    REQUIRE(latentem::kl_divergence(table, uniform) ==
            Catch::Approx(0.192745).margin(1e-6));
}

TEST_CASE("support violations are errors, not infinities") {
    const auto table = ContingencyTable::normalize(matrix2(4, 1, 1, 4));
    REQUIRE_THROWS_AS(latentem::kl_divergence(table, matrix2(0.25, 0, 0.25, 0.5)),
                      latentem::SupportMismatchError);
    REQUIRE_THROWS_AS(latentem::kl_divergence(table, Matrix::Constant(2, 3, 0.1)),
                      latentem::SupportMismatchError);
}

TEST_CASE("mutual information vanishes exactly on product tables") {
    Eigen::VectorXd r(2), c(2);
    r << 0.3, 0.7;
    c << 0.6, 0.4;
    const auto product = ContingencyTable::normalize(Matrix(r * c.transpose()));
    REQUIRE(std::abs(latentem::mutual_information(product)) <= 1e-15);
}

TEST_CASE("mutual information of hard association is log 2") {
    const auto diag = ContingencyTable::normalize(matrix2(1, 0, 0, 1));
    REQUIRE(latentem::mutual_information(diag) ==
            Catch::Approx(std::log(2.0)).margin(1e-15));
}

TEST_CASE("mutual information shares the divergence code path") {
    const auto table = ContingencyTable::normalize(matrix2(4, 1, 1, 4));
    const Matrix independence =
        table.row_margins() * table.col_margins().transpose();
    REQUIRE(latentem::mutual_information(table) ==
            latentem::kl_divergence(table, independence));
    REQUIRE(latentem::mutual_information(table) ==
            Catch::Approx(oracles::mutual_information(table.values())).margin(1e-15));
}

TEST_CASE("divergence is non-negative and detects any difference") {
    std::mt19937_64 gen(21);
    for (int rep = 0; rep < 25; ++rep) {
        const auto table = test_support::random_table(gen, 4, 5);
        const auto other = test_support::random_table(gen, 4, 5);
        const double kl = latentem::kl_divergence(table, other.values());
        REQUIRE(kl >= 0.0);
        REQUIRE(kl > 0.0);  // distinct tables with full support
        REQUIRE(kl == Catch::Approx(oracles::kl(table.values(), other.values()))
                          .margin(1e-14));
        REQUIRE(latentem::kl_divergence(table, table.values()) == 0.0);
    }
}
