#include "fixtures.hpp"

#include <catch_amalgamated.hpp>

using namespace mjls;
using Catch::Approx;

namespace {
GridPtr solar_grid() {
    return GridSpace::build({{1, 0.0, 1.0, 100}, {2, 0.0, 1.0, 100}});
}
}  // namespace

TEST_CASE("norm_one") {
    GridPtr g = solar_grid();
    CHECK(norm_one(MatrixField::zero(g, 2, 2)) == 0.0);
    CHECK(norm_one(MatrixField::identity(g, 3)) == Approx(2.0));

    GridPtr one = GridSpace::build({{1, 0.0, 1.0, 4}});
    Eigen::MatrixXd d = Eigen::Vector2d(3.0, 4.0).asDiagonal();
    CHECK(norm_one(MatrixField::constant(one, d, true)) == Approx(4.0));
}

TEST_CASE("norm_inf") {
    GridPtr g = solar_grid();
    CHECK(norm_inf(MatrixField::zero(g, 2, 2)) == 0.0);
    CHECK(norm_inf(MatrixField::identity(g, 2)) == Approx(1.0));

    Eigen::MatrixXd A11(2, 2);
    A11 << 2, -1, 0, 0;
    CHECK(spectral_norm(A11) == Approx(std::sqrt(5.0)));
    CHECK(norm_inf(MatrixField::constant(g, A11)) == Approx(std::sqrt(5.0)));
}

TEST_CASE("pairing basics and brute-force oracle") {
    GridPtr g = solar_grid();
    MatrixField I2 = MatrixField::identity(g, 2);
    CHECK(pairing(MatrixField::zero(g, 2, 2), I2) == 0.0);
    CHECK(pairing(I2, I2) == Approx(4.0));

    GridPtr small = GridSpace::build({{1, 0.0, 1.0, 4}});
    std::mt19937_64 rng(7);
    MatrixField V = mjls::testing::random_field(small, 3, 2, rng);
    MatrixField U = mjls::testing::random_field(small, 3, 2, rng);
    double brute = 0;
    for (long l = 0; l < small->size(); ++l)
        for (long i = 0; i < 3; ++i)
            for (long j = 0; j < 2; ++j) brute += V[l](i, j) * U[l](i, j) * small->weight(l);
    CHECK(pairing(V, U) == Approx(brute).margin(1e-13));

    MatrixField W = mjls::testing::random_field(small, 2, 2, rng);
    CHECK_THROWS_AS(pairing(V, W), std::invalid_argument);
}

TEST_CASE("pairing is bilinear and symmetric") {
    GridPtr g = GridSpace::build({{1, 0.0, 1.0, 6}});
    std::mt19937_64 rng(11);
    MatrixField V = mjls::testing::random_field(g, 3, 3, rng, true);
    MatrixField U = mjls::testing::random_field(g, 3, 3, rng, true);
    MatrixField W = mjls::testing::random_field(g, 3, 3, rng, true);
    CHECK(pairing(V, U) == Approx(pairing(U, V)).margin(1e-12));
    CHECK(pairing(V + W, U) == Approx(pairing(V, U) + pairing(W, U)).margin(1e-12));
    CHECK(pairing(2.5 * V, U) == Approx(2.5 * pairing(V, U)).margin(1e-12));
}

TEST_CASE("uniform_psd_margin") {
    GridPtr g = solar_grid();
    CHECK(uniform_psd_margin(MatrixField::identity(g, 2)).min_eigenvalue_over_nodes ==
          Approx(1.0));
    CHECK(uniform_psd_margin(MatrixField::zero(g, 2, 2)).min_eigenvalue_over_nodes ==
          Approx(0.0).margin(1e-15));

    // Lyapunov certificate matrices from the two-mode example are positive definite.
    Eigen::MatrixXd Y1(2, 2), Y2(2, 2);
    Y1 << 1343.8, -617.7, -617.7, 450.1;
    Y2 << 110.4, -4.4, -4.4, 1387.3;
    auto c1 = uniform_psd_margin(MatrixField::constant(g, Y1, true));
    auto c2 = uniform_psd_margin(MatrixField::constant(g, Y2, true));
    CHECK(c1.min_eigenvalue_over_nodes > 0.0);
    CHECK(c2.min_eigenvalue_over_nodes > 0.0);
    CHECK(c1.min_eigenvalue_over_nodes ==
          Approx(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Y1).eigenvalues()(0)));

    CHECK_THROWS_AS(uniform_psd_margin(MatrixField::zero(g, 2, 3)), std::invalid_argument);
}

TEST_CASE("Hoelder-type bound on random PSD fields") {
    std::mt19937_64 rng(23);
    GridPtr g = GridSpace::build({{1, 0.0, 1.0, 5}, {2, 0.0, 1.0, 3}});
    for (int trial = 0; trial < 20; ++trial) {
        MatrixField V = mjls::testing::random_psd_field(g, 3, rng);
        MatrixField U = mjls::testing::random_psd_field(g, 3, rng);
        CHECK(std::abs(pairing(V, U)) <= norm_one(V) * norm_inf(U) * 3 + 1e-12);
    }
}

TEST_CASE("psd margin is superadditive (Weyl)") {
    std::mt19937_64 rng(29);
    GridPtr g = GridSpace::build({{1, 0.0, 1.0, 8}});
    for (int trial = 0; trial < 20; ++trial) {
        MatrixField P = mjls::testing::random_field(g, 3, 3, rng, true);
        MatrixField Q = mjls::testing::random_field(g, 3, 3, rng, true);
        const double lhs = uniform_psd_margin(P + Q).min_eigenvalue_over_nodes;
        const double rhs = uniform_psd_margin(P).min_eigenvalue_over_nodes +
                           uniform_psd_margin(Q).min_eigenvalue_over_nodes;
        CHECK(lhs >= rhs - 1e-10);
    }
}

TEST_CASE("field construction guards") {
    GridPtr g = GridSpace::build({{1, 0.0, 1.0, 2}});
    Eigen::MatrixXd asym(2, 2);
    asym << 0, 1, 0, 0;
    CHECK_THROWS_AS(MatrixField::constant(g, asym, true), std::invalid_argument);

    std::vector<Eigen::MatrixXd> ragged = {Eigen::MatrixXd::Zero(2, 2),
                                           Eigen::MatrixXd::Zero(3, 3)};
    CHECK_THROWS_AS(MatrixField(g, ragged), std::invalid_argument);

    std::vector<Eigen::MatrixXd> short_list = {Eigen::MatrixXd::Zero(2, 2)};
    CHECK_THROWS_AS(MatrixField(g, short_list), std::invalid_argument);
}

TEST_CASE("symmetrize suppresses drift and sets the flag") {
    GridPtr g = GridSpace::build({{1, 0.0, 1.0, 3}});
    std::mt19937_64 rng(31);
    MatrixField f = mjls::testing::random_field(g, 2, 2, rng);
    MatrixField s = symmetrize(f);
    CHECK(s.symmetric());
    for (long l = 0; l < s.size(); ++l)
        CHECK((s[l] - s[l].transpose()).cwiseAbs().maxCoeff() < 1e-15);
}
