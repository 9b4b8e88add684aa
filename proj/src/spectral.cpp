#include "gridsync/spectral.hpp"

#include <cmath>

#include "gridsync/error.hpp"

namespace gridsync {

namespace {

constexpr double kDisconnectedRatio = 1e-8;

void normalize_sign(Eigen::Ref<Eigen::VectorXd> column) {
    const double tol = 1e-12 * column.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < column.size(); ++i) {
        if (std::abs(column(i)) > tol) {
            if (column(i) < 0.0) column = -column;
            return;
        }
    }
}

}  // namespace

ModalBasis modal_decompose(const Eigen::MatrixXd& scaled_laplacian, const Eigen::VectorXd& f) {
    const auto n = scaled_laplacian.rows();
    if (scaled_laplacian.cols() != n || f.size() != n) {
        throw Error(ErrorKind::DimensionMismatch, "modal_decompose: dimension mismatch");
    }
    if (n < 2) {
        throw Error(ErrorKind::InvalidParameter, "modal_decompose: need at least 2 buses");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(scaled_laplacian);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::Numerical, "modal_decompose: eigensolver failed");
    }
    ModalBasis basis;
    basis.f = f;
    basis.lambdas = solver.eigenvalues();
    basis.V = solver.eigenvectors();

    const double lambda_max = basis.lambdas(n - 1);
    if (!(lambda_max > 0.0) || basis.lambdas(1) < kDisconnectedRatio * lambda_max) {
        throw Error(ErrorKind::Disconnected, "graph effectively disconnected (second eigenvalue ~ 0)");
    }

    basis.alpha_f = 1.0 / std::sqrt(f.sum());
    basis.v0 = basis.alpha_f * f.cwiseSqrt();
    basis.lambdas(0) = 0.0;
    basis.V.col(0) = basis.v0;
    // Remove the (rounding-level) component along the exact kernel vector.
    for (Eigen::Index k = 1; k < n; ++k) {
        auto col = basis.V.col(k);
        col -= basis.v0.dot(col) * basis.v0;
        col.normalize();
        normalize_sign(col);
    }
    basis.v_perp = basis.V.rightCols(n - 1);
    basis.gamma = gamma_matrix(basis);

    const Eigen::MatrixXd rebuilt = basis.V * basis.lambdas.asDiagonal() * basis.V.transpose();
    basis.reconstruction_residual = (rebuilt - scaled_laplacian).norm() / scaled_laplacian.norm();
    return basis;
}

Eigen::MatrixXd gamma_matrix(const ModalBasis& basis) {
    const Eigen::VectorXd f_inv = basis.f.cwiseInverse();
    Eigen::MatrixXd gamma = basis.v_perp.transpose() * f_inv.asDiagonal() * basis.v_perp;
    return 0.5 * (gamma + gamma.transpose());
}

Eigen::VectorXd project_disturbance(const ModalBasis& basis, const Eigen::VectorXd& u0) {
    if (u0.size() != basis.f.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "disturbance has " + std::to_string(u0.size()) + " entries, grid has " +
                        std::to_string(basis.f.size()) + " buses");
    }
    return basis.v_perp.transpose() * u0.cwiseQuotient(basis.f.cwiseSqrt());
}

DisturbanceCovariance DisturbanceCovariance::explicit_matrix(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != sigma.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "covariance must be square");
    }
    Eigen::MatrixXd off = sigma;
    off.diagonal().setZero();
    if (off.cwiseAbs().maxCoeff() > 0.0) {
        throw Error(ErrorKind::InvalidParameter,
                    "covariance must be diagonal (bus disturbances are independent)");
    }
    if ((sigma.diagonal().array() < 0.0).any()) {
        throw Error(ErrorKind::InvalidParameter, "covariance has a negative variance");
    }
    return {Kind::Diagonal, sigma.diagonal()};
}

Eigen::VectorXd DisturbanceCovariance::diagonal_for(const Eigen::VectorXd& f) const {
    switch (kind) {
        case Kind::Identity: return Eigen::VectorXd::Ones(f.size());
        case Kind::Rating: return f;
        case Kind::RatingSquared: return f.cwiseProduct(f);
        case Kind::Diagonal:
            if (diagonal.size() != f.size()) {
                throw Error(ErrorKind::DimensionMismatch, "covariance dimension mismatch");
            }
            return diagonal;
    }
    return {};
}

Eigen::MatrixXd sigma_z(const ModalBasis& basis, const DisturbanceCovariance& sigma_u) {
    const Eigen::VectorXd scale = sigma_u.diagonal_for(basis.f).cwiseQuotient(basis.f);
    Eigen::MatrixXd out = basis.v_perp.transpose() * scale.asDiagonal() * basis.v_perp;
    return 0.5 * (out + out.transpose());
}

nlohmann::json basis_summary_json(const ModalBasis& basis) {
    const auto n = basis.V.cols();
    const double ortho = (basis.V.transpose() * basis.V - Eigen::MatrixXd::Identity(n, n)).norm();
    std::vector<double> lambdas(basis.lambdas.data(), basis.lambdas.data() + basis.lambdas.size());
    return {{"lambdas", lambdas},
            {"orthogonality_residual", ortho},
            {"reconstruction_residual", basis.reconstruction_residual}};
}

}  // namespace gridsync
