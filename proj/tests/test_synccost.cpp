#include <gtest/gtest.h>

#include <cmath>

#include "gridsync/error.hpp"
#include "gridsync/synccost.hpp"
#include "test_support.hpp"

using namespace gridsync;

namespace {

ModalBasis basis_for(const Grid& grid, const Eigen::VectorXd& f) {
    return modal_decompose(scaled_laplacian(build_laplacian(grid), f), f);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

/// m -> 0 limit of the turbine cross term.
double turbine_low_inertia_limit(double d, double r, double tau, double lk, double ll) {
    const double num = 2 * d * (d + r) + tau * (2 * d + r) * (lk + ll) + 2 * lk * ll * tau * tau;
    const double den = 2 * d * (d + r) * (d + r) * (lk + ll) + d * tau * (2 * d + r) * (lk + ll) * (lk + ll) +
                       2 * d * tau * lk * ll * (2 * r + tau * (lk + ll));
    return num / den;
}

struct Draw {
    double m, d, r, tau, lk, ll;
};

Draw random_draw(std::mt19937_64& gen) {
    return {support::log_uniform(gen, 0.1, 10), support::log_uniform(gen, 0.1, 10),
            support::log_uniform(gen, 0.1, 10), support::log_uniform(gen, 0.1, 10),
            support::log_uniform(gen, 0.01, 100), support::log_uniform(gen, 0.01, 100)};
}

}  // namespace

TEST(InnerProduct, SylvesterExamples) {
    EXPECT_NEAR(inner_product_sylvester(SwingMachine{1, 1}, 2, 2), 0.25, 1e-15);
    EXPECT_NEAR(inner_product_sylvester(SwingMachine{1, 1}, 1, 3), 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(inner_product_sylvester(TurbineMachine{1, 1, 1, 1}, 2, 2), 1.0 / 6.0, 1e-15);
    EXPECT_THROW(inner_product_sylvester(SwingMachine{1, 1}, 0, 1), Error);
}

TEST(InnerProduct, ClosedFormExamples) {
    EXPECT_DOUBLE_EQ(inner_product_swing_closed(1, 1, 1, 3), 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(inner_product_swing_closed(1, 2, 5, 5), 1.0 / 20.0);
    EXPECT_DOUBLE_EQ(hnorm_turbine_closed(1, 1, 1, 1, 2), 1.0 / 6.0);
    EXPECT_NEAR(inner_product_turbine_closed(1, 1, 1, 1, 1, 3), 92.0 / 664.0, 1e-16);
    EXPECT_NEAR(inner_product_sylvester(TurbineMachine{1, 1, 1, 1}, 1, 3), 92.0 / 664.0, 1e-15);
}

TEST(InnerProduct, SylvesterAgreesWithEigenbasisSolve) {
    std::mt19937_64 gen(51);
    for (int trial = 0; trial < 200; ++trial) {
        const Draw p = random_draw(gen);
        const SwingMachine swing{p.m, p.d};
        const TurbineMachine turbine{p.m, p.d, p.r, p.tau};
        EXPECT_LT(rel(inner_product_sylvester(swing, p.lk, p.ll), support::sylvester_by_eigen(swing, p.lk, p.ll)),
                  1e-8);
        EXPECT_LT(rel(inner_product_sylvester(turbine, p.lk, p.ll),
                      support::sylvester_by_eigen(turbine, p.lk, p.ll)),
                  1e-8);
    }
}

TEST(InnerProduct, FrequencyDomainQuadrature) {
    std::mt19937_64 gen(52);
    for (int trial = 0; trial < 10; ++trial) {
        const double m = support::log_uniform(gen, 0.5, 5), d = support::log_uniform(gen, 0.5, 5);
        const double lk = support::log_uniform(gen, 0.1, 10), ll = support::log_uniform(gen, 0.1, 10);
        const TurbineMachine turbine{m, d, support::log_uniform(gen, 0.5, 5), support::log_uniform(gen, 0.5, 5)};
        EXPECT_LT(rel(inner_product_swing_closed(m, d, lk, ll),
                      support::inner_product_quadrature(SwingMachine{m, d}, lk, ll)),
                  1e-7);
        EXPECT_LT(rel(inner_product_closed(turbine, lk, ll), support::inner_product_quadrature(turbine, lk, ll)),
                  1e-7);
    }
}

TEST(InnerProduct, ClosedFormsMatchSylvester) {
    std::mt19937_64 gen(53);
    for (int trial = 0; trial < 200; ++trial) {
        const Draw p = random_draw(gen);
        EXPECT_LT(rel(inner_product_swing_closed(p.m, p.d, p.lk, p.ll),
                      inner_product_sylvester(SwingMachine{p.m, p.d}, p.lk, p.ll)),
                  1e-10);
        const TurbineMachine turbine{p.m, p.d, p.r, p.tau};
        EXPECT_LT(rel(hnorm_turbine_closed(p.m, p.d, p.r, p.tau, p.lk), inner_product_sylvester(turbine, p.lk, p.lk)),
                  1e-10);
        EXPECT_LT(rel(inner_product_turbine_closed(p.m, p.d, p.r, p.tau, p.lk, p.ll),
                      inner_product_sylvester(turbine, p.lk, p.ll)),
                  1e-9);
    }
}

TEST(InnerProduct, CrossTermReducesToNorm) {
    std::mt19937_64 gen(54);
    for (int trial = 0; trial < 100; ++trial) {
        const Draw p = random_draw(gen);
        EXPECT_LT(rel(inner_product_turbine_closed(p.m, p.d, p.r, p.tau, p.lk, p.lk),
                      hnorm_turbine_closed(p.m, p.d, p.r, p.tau, p.lk)),
                  1e-9);
    }
}

TEST(InnerProduct, InertiaLimits) {
    std::mt19937_64 gen(55);
    for (int trial = 0; trial < 50; ++trial) {
        const Draw p = random_draw(gen);
        EXPECT_LT(rel(inner_product_turbine_closed(1e-8, p.d, p.r, p.tau, p.lk, p.ll),
                      turbine_low_inertia_limit(p.d, p.r, p.tau, p.lk, p.ll)),
                  1e-4);
        EXPECT_LT(rel(hnorm_turbine_closed(1e9, p.d, p.r, p.tau, p.lk), 1.0 / (2.0 * p.lk * (p.r + p.d))), 1e-6);
        EXPECT_LT(rel(inner_product_swing_closed(1e-9, p.d, p.lk, p.ll), 1.0 / (p.d * (p.lk + p.ll))), 1e-4);
    }
}

TEST(InnerProduct, MethodParsing) {
    EXPECT_EQ(parse_inner_product_method("closed_form"), InnerProductMethod::ClosedForm);
    EXPECT_EQ(parse_inner_product_method("sylvester"), InnerProductMethod::Sylvester);
    EXPECT_THROW(parse_inner_product_method("quadrature"), Error);
}

TEST(CostMatrix, Examples) {
    const ModalBasis rated = basis_for(support::two_bus(1, 1, 3, 1), Eigen::Vector2d(1, 3));
    const CostMatrix two = build_cost_matrix(rated, SwingMachine{1, 1});
    EXPECT_NEAR(two.Y(0, 0), 5.0 / 16.0, 1e-15);

    const ModalBasis path = basis_for(support::path3(), Eigen::Vector3d::Ones());
    const CostMatrix y = build_cost_matrix(path, SwingMachine{1, 1});
    EXPECT_NEAR(y.Y(0, 0), 0.5, 1e-14);
    EXPECT_NEAR(y.Y(1, 1), 1.0 / 6.0, 1e-14);
    EXPECT_NEAR(y.Y(0, 1), 0.0, 1e-14);
}

TEST(CostMatrix, HomogeneousIsDiagonalOfNorms) {
    std::mt19937_64 gen(56);
    const int n = 9;
    const ModalBasis b = basis_for(support::random_heterogeneous_grid(gen, n), Eigen::VectorXd::Ones(n));
    const TurbineMachine mach{2.0, 0.8, 5.0, 3.0};
    const CostMatrix cost = build_cost_matrix(b, mach);
    for (int k = 0; k < n - 1; ++k) {
        for (int l = 0; l < n - 1; ++l) {
            const double expected = k == l ? hnorm_turbine_closed(2.0, 0.8, 5.0, 3.0, b.lambdas(k + 1)) : 0.0;
            EXPECT_NEAR(cost.Y(k, l), expected, 1e-12);
        }
    }
}

TEST(CostMatrix, SymmetricPositiveSemidefinite) {
    std::mt19937_64 gen(57);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = support::uniform_int(gen, 2, 12);
        const support::MachineParams rep{support::log_uniform(gen, 0.1, 10), support::log_uniform(gen, 0.1, 10),
                                         support::log_uniform(gen, 0.1, 10), support::log_uniform(gen, 0.1, 10)};
        const Grid grid = support::random_proportional_grid(gen, n, rep, 0.2, 5.0);
        const auto sys = extract_representative(grid, ModelKind::Turbine);
        const ModalBasis b = basis_for(grid, sys.f);
        for (auto method : {InnerProductMethod::ClosedForm, InnerProductMethod::Sylvester}) {
            const CostMatrix cost = build_cost_matrix(b, sys.machine, method);
            EXPECT_EQ(cost.Y, cost.Y.transpose());
            const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cost.Y).eigenvalues()(0);
            EXPECT_GE(min_eig, -1e-10 * cost.Y.norm());
        }
    }
}

TEST(SyncCost, Examples) {
    const ModalBasis homo = basis_for(support::two_bus(1, 1, 1, 1), Eigen::Vector2d(1, 1));
    EXPECT_NEAR(sync_cost(homo, SwingMachine{1, 1}, Eigen::Vector2d(1, 0)), 1.0 / (2.0 * std::sqrt(2.0)), 1e-15);

    const Eigen::Vector2d f(1, 3);
    const ModalBasis rated = basis_for(support::two_bus(1, 1, 3, 1), f);
    EXPECT_NEAR(sync_cost(rated, SwingMachine{1, 1}, Eigen::Vector2d(1, 0)), std::sqrt(15.0) / 8.0, 1e-15);
    EXPECT_NEAR(sync_cost(rated, SwingMachine{1, 1}, f), 0.0, 1e-14);
}

TEST(SyncCost, SymmetryScalingAndSignConvention) {
    std::mt19937_64 gen(58);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = support::uniform_int(gen, 3, 10);
        const Grid grid = support::random_proportional_grid(gen, n, {1.5, 0.7, 4.0, 2.0});
        const auto sys = extract_representative(grid, ModelKind::Turbine);
        ModalBasis b = basis_for(grid, sys.f);
        Eigen::VectorXd u0(n);
        for (int i = 0; i < n; ++i) u0(i) = support::uniform(gen, -2, 2);
        const double cost = sync_cost(b, sys.machine, u0);
        EXPECT_DOUBLE_EQ(sync_cost(b, sys.machine, -u0), cost);
        EXPECT_NEAR(sync_cost(b, sys.machine, 3.0 * u0), 3.0 * cost, 1e-12 * cost);

        // Flipping eigenvector signs leaves every quadratic form unchanged.
        for (int k = 1; k < n; k += 2) b.V.col(k) *= -1.0;
        b.v_perp = b.V.rightCols(n - 1);
        b.gamma = gamma_matrix(b);
        EXPECT_NEAR(sync_cost(b, sys.machine, u0), cost, 1e-12 * cost);
    }
}

TEST(SyncCost, HomogeneousSwingIsInertiaInvariant) {
    std::mt19937_64 gen(59);
    const int n = 10;
    const ModalBasis b = basis_for(support::random_heterogeneous_grid(gen, n), Eigen::VectorXd::Ones(n));
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(n);
    u0(2) = -3.0;
    const double reference = sync_cost(b, SwingMachine{1.0, 0.8}, u0);
    for (double m : {0.1, 0.37, 2.0, 5.5, 10.0}) {
        EXPECT_LT(rel(sync_cost(b, SwingMachine{m, 0.8}, u0), reference), 1e-12);
    }
}

TEST(SyncCost, FiedlerDirectionIsWorstCase) {
    std::mt19937_64 gen(60);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = support::uniform_int(gen, 3, 12);
        const ModalBasis b = basis_for(support::random_heterogeneous_grid(gen, n), Eigen::VectorXd::Ones(n));
        double best = 0.0;
        int best_k = -1;
        for (int k = 1; k < n; ++k) {
            const double c = sync_cost(b, SwingMachine{1.0, 1.0}, b.V.col(k));
            if (c > best) {
                best = c;
                best_k = k;
            }
        }
        EXPECT_EQ(best_k, 1);
    }
}

TEST(SyncCost, HighInertiaDiagonalizes) {
    std::mt19937_64 gen(61);
    const int n = 8;
    const Grid grid = support::random_proportional_grid(gen, n, {1.0, 1.0, 1.0, 1.0}, 0.3, 3.0);
    const auto sys = extract_representative(grid, ModelKind::Swing);
    const ModalBasis b = basis_for(grid, sys.f);
    const CostMatrix cost = build_cost_matrix(b, SwingMachine{1e4, 1.0});
    Eigen::MatrixXd off = cost.Y;
    off.diagonal().setZero();
    EXPECT_LT(off.cwiseAbs().maxCoeff() / cost.Y.diagonal().cwiseAbs().minCoeff(), 1e-2);

    const CostMatrix low = build_cost_matrix(b, SwingMachine{1e-6, 1.0});
    for (int k = 0; k < n - 1; ++k) {
        for (int l = 0; l < n - 1; ++l) {
            const double limit = b.gamma(k, l) / (b.lambdas(k + 1) + b.lambdas(l + 1));
            EXPECT_NEAR(low.Y(k, l), limit, 1e-4 * std::abs(limit) + 1e-14);
        }
    }
}

TEST(MeanSyncCost, ExamplesAndHomogeneousTrace) {
    const ModalBasis homo = basis_for(support::two_bus(1, 1, 1, 1), Eigen::Vector2d(1, 1));
    EXPECT_NEAR(mean_sync_cost(homo, SwingMachine{1, 1}, DisturbanceCovariance::identity()), 0.5, 1e-15);

    std::mt19937_64 gen(62);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = support::uniform_int(gen, 3, 15);
        const Grid grid = support::random_heterogeneous_grid(gen, n);
        const ModalBasis b = basis_for(grid, Eigen::VectorXd::Ones(n));
        const Eigen::MatrixXd pinv =
            build_laplacian(grid).completeOrthogonalDecomposition().pseudoInverse();
        const double d = support::log_uniform(gen, 0.1, 10);
        EXPECT_LT(rel(mean_sync_cost(b, SwingMachine{2.0, d}, DisturbanceCovariance::identity()),
                      std::sqrt(pinv.trace() / (2.0 * d))),
                  1e-10);
    }
}

TEST(MeanSyncCost, PresetsAgreeWithExplicitDiagonal) {
    std::mt19937_64 gen(63);
    const Grid grid = support::random_proportional_grid(gen, 7, {2.0, 1.0, 3.0, 2.0}, 0.2, 5.0);
    const auto sys = extract_representative(grid, ModelKind::Turbine);
    const ModalBasis b = basis_for(grid, sys.f);
    const CostMatrix cost = build_cost_matrix(b, sys.machine);
    const Eigen::MatrixXd f = sys.f.asDiagonal();
    const Eigen::MatrixXd f2 = sys.f.cwiseProduct(sys.f).asDiagonal();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(7, 7);
    EXPECT_NEAR(mean_sync_cost(cost, b, DisturbanceCovariance::rating()),
                mean_sync_cost(cost, b, DisturbanceCovariance::explicit_matrix(f)), 1e-13);
    EXPECT_NEAR(mean_sync_cost(cost, b, DisturbanceCovariance::identity()),
                mean_sync_cost(cost, b, DisturbanceCovariance::explicit_matrix(id)), 1e-13);
    EXPECT_NEAR(mean_sync_cost(cost, b, DisturbanceCovariance::rating_squared()),
                mean_sync_cost(cost, b, DisturbanceCovariance::explicit_matrix(f2)), 1e-13);
}

TEST(MeanSyncCost, MonteCarloRatingSquared) {
    std::mt19937_64 gen(64);
    const int n = 6;
    const Grid grid = support::random_proportional_grid(gen, n, {2.0, 1.0, 3.0, 2.0}, 0.3, 3.0);
    const auto sys = extract_representative(grid, ModelKind::Turbine);
    const ModalBasis b = basis_for(grid, sys.f);
    const CostMatrix cost = build_cost_matrix(b, sys.machine);
    const double expected = std::pow(mean_sync_cost(cost, b, DisturbanceCovariance::rating_squared()), 2);

    std::normal_distribution<double> normal;
    const int samples = 100000;
    double sum = 0.0, sum_sq = 0.0;
    Eigen::VectorXd u(n);
    for (int s = 0; s < samples; ++s) {
        for (int i = 0; i < n; ++i) u(i) = sys.f(i) * normal(gen);
        const Eigen::VectorXd z = project_disturbance(b, u);
        const double value = z.dot(cost.Y * z);
        sum += value;
        sum_sq += value * value;
    }
    const double mean = sum / samples;
    const double stderr_mean = std::sqrt((sum_sq / samples - mean * mean) / samples);
    EXPECT_LT(std::abs(mean - expected), 3.0 * stderr_mean);
}
