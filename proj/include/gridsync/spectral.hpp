#pragma once

#include <Eigen/Dense>
#include <json.hpp>

namespace gridsync {

/// Eigenstructure of the scaled Laplacian L_F = V diag(lambda) V^T.
///
/// Column 0 of `V` is the analytic kernel vector alpha_F F^{1/2} 1; the
/// remaining columns form `v_perp`. Every column is sign-normalized so its
/// first nonzero entry is positive.
struct ModalBasis {
    Eigen::VectorXd lambdas;  // ascending, lambdas(0) == 0 exactly
    Eigen::MatrixXd V;
    Eigen::VectorXd v0;
    Eigen::MatrixXd v_perp;
    double alpha_f = 0.0;  // (sum f)^{-1/2}
    Eigen::MatrixXd gamma;  // V_perp^T F^{-1} V_perp
    Eigen::VectorXd f;
    double reconstruction_residual = 0.0;  // ||V Lambda V^T - L_F|| / ||L_F||

    [[nodiscard]] int size() const { return static_cast<int>(f.size()); }
};

ModalBasis modal_decompose(const Eigen::MatrixXd& scaled_laplacian, const Eigen::VectorXd& f);

Eigen::MatrixXd gamma_matrix(const ModalBasis& basis);

/// z0 = V_perp^T F^{-1/2} u0.
Eigen::VectorXd project_disturbance(const ModalBasis& basis, const Eigen::VectorXd& u0);

/// Diagonal covariance of independent bus disturbances.
struct DisturbanceCovariance {
    enum class Kind { Identity, Rating, RatingSquared, Diagonal };
    Kind kind = Kind::Identity;
    Eigen::VectorXd diagonal;  // used when kind == Diagonal

    static DisturbanceCovariance identity() { return {Kind::Identity, {}}; }
    static DisturbanceCovariance rating() { return {Kind::Rating, {}}; }
    static DisturbanceCovariance rating_squared() { return {Kind::RatingSquared, {}}; }
    /// Rejects any nonzero off-diagonal entry.
    static DisturbanceCovariance explicit_matrix(const Eigen::MatrixXd& sigma);

    /// Sigma^u as a vector of diagonal entries for ratings `f`.
    [[nodiscard]] Eigen::VectorXd diagonal_for(const Eigen::VectorXd& f) const;
};

/// Sigma^z = V_perp^T F^{-1/2} Sigma^u F^{-1/2} V_perp.
Eigen::MatrixXd sigma_z(const ModalBasis& basis, const DisturbanceCovariance& sigma_u);

nlohmann::json basis_summary_json(const ModalBasis& basis);

}  // namespace gridsync
