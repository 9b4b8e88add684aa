#pragma once

#include <string_view>

#include <Eigen/Dense>

#include "gridsync/machine.hpp"
#include "gridsync/spectral.hpp"

namespace gridsync {

enum class InnerProductMethod { Sylvester, ClosedForm };

std::string_view to_string(InnerProductMethod method);
InnerProductMethod parse_inner_product_method(std::string_view text);

/// <h_k, h_l> = C Q C^T where A_k Q + Q A_l^T + B B^T = 0, solved through the
/// vectorized (I kron A_k + A_l kron I) vec(Q) = -vec(B B^T).
double inner_product_sylvester(const RepresentativeMachine& machine, double lambda_k, double lambda_l);

/// 2d / (m (lk - ll)^2 + 2 (lk + ll) d^2)
double inner_product_swing_closed(double m, double d, double lambda_k, double lambda_l);

/// ||h_k||^2 for the turbine model.
double hnorm_turbine_closed(double m, double d, double r_inv, double tau, double lambda);

/// Turbine cross term N/D, expanded term by term.
double inner_product_turbine_closed(double m, double d, double r_inv, double tau, double lambda_k,
                                   double lambda_l);

/// Dispatches to the closed form of the machine family.
double inner_product_closed(const RepresentativeMachine& machine, double lambda_k, double lambda_l);

double inner_product(const RepresentativeMachine& machine, double lambda_k, double lambda_l,
                     InnerProductMethod method);

/// y_kl = gamma_kl <h_k, h_l> over the n-1 synchronizing modes.
struct CostMatrix {
    Eigen::MatrixXd Y;
    InnerProductMethod method = InnerProductMethod::ClosedForm;
};

CostMatrix build_cost_matrix(const ModalBasis& basis, const RepresentativeMachine& machine,
                             InnerProductMethod method = InnerProductMethod::ClosedForm);

/// ||w_tilde||_2 = sqrt(z0^T Y z0).
double sync_cost(const ModalBasis& basis, const RepresentativeMachine& machine,
                 const Eigen::VectorXd& u0,
                 InnerProductMethod method = InnerProductMethod::ClosedForm);
double sync_cost(const CostMatrix& cost, const ModalBasis& basis, const Eigen::VectorXd& u0);

/// sqrt(Tr(Y Sigma^z)).
double mean_sync_cost(const ModalBasis& basis, const RepresentativeMachine& machine,
                      const DisturbanceCovariance& sigma_u,
                      InnerProductMethod method = InnerProductMethod::ClosedForm);
double mean_sync_cost(const CostMatrix& cost, const ModalBasis& basis,
                      const DisturbanceCovariance& sigma_u);

}  // namespace gridsync
