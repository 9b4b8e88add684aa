#include "gridsync/synccost.hpp"

#include <cmath>

#include "gridsync/error.hpp"
#include "overloaded.hpp"

namespace gridsync {

using detail::Overloaded;

std::string_view to_string(InnerProductMethod method) {
    return method == InnerProductMethod::Sylvester ? "sylvester" : "closed_form";
}

InnerProductMethod parse_inner_product_method(std::string_view text) {
    if (text == "sylvester") return InnerProductMethod::Sylvester;
    if (text == "closed_form" || text == "closed") return InnerProductMethod::ClosedForm;
    throw Error(ErrorKind::InvalidParameter, "unknown inner-product method '" + std::string(text) + "'");
}

namespace {

void require_positive_modes(double lambda_k, double lambda_l) {
    if (!(lambda_k > 0.0) || !(lambda_l > 0.0)) {
        throw Error(ErrorKind::InvalidParameter,
                    "inner product needs positive eigenvalues (Hurwitz closed-loop modes)");
    }
}

}  // namespace

double inner_product_sylvester(const RepresentativeMachine& machine, double lambda_k, double lambda_l) {
    require_positive_modes(lambda_k, lambda_l);
    const StateSpace ss = realize_state_space(machine);
    const auto n = ss.A.rows();
    const Eigen::MatrixXd a_k = ss.closed_loop(lambda_k);
    const Eigen::MatrixXd a_l = ss.closed_loop(lambda_l);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);

    // Column-major vec: vec(A_k Q) = (I kron A_k) vec Q, vec(Q A_l^T) = (A_l kron I) vec Q.
    Eigen::MatrixXd kron(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            kron.block(i * n, j * n, n, n) = eye(i, j) * a_k + a_l(i, j) * eye;
        }
    }
    const Eigen::MatrixXd bbt = ss.B * ss.B.transpose();
    const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(bbt.data(), n * n);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kron);
    if (!lu.isInvertible()) {
        throw Error(ErrorKind::Numerical, "Sylvester system is singular");
    }
    const Eigen::VectorXd q = lu.solve(rhs);
    const Eigen::Map<const Eigen::MatrixXd> Q(q.data(), n, n);
    return (ss.C * Q * ss.C.transpose())(0, 0);
}

double inner_product_swing_closed(double m, double d, double lambda_k, double lambda_l) {
    require_positive_modes(lambda_k, lambda_l);
    const double gap = lambda_k - lambda_l;
    return 2.0 * d / (m * gap * gap + 2.0 * (lambda_k + lambda_l) * d * d);
}

double hnorm_turbine_closed(double m, double d, double r_inv, double tau, double lambda) {
    require_positive_modes(lambda, lambda);
    return (m + tau * (lambda * tau + d)) /
           (2.0 * lambda * (m * (r_inv + d) + tau * d * (r_inv + lambda * tau + d)));
}

double inner_product_turbine_closed(double m, double d, double r, double t, double lk, double ll) {
    require_positive_modes(lk, ll);
    const double m2 = m * m, m3 = m2 * m;
    const double d2 = d * d, d3 = d2 * d, d4 = d3 * d;
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    const double r2 = r * r;
    const double lk2 = lk * lk, lk3 = lk2 * lk;
    const double ll2 = ll * ll, ll3 = ll2 * ll;

    const double num =
        2.0 * (2 * d * m2 + 2 * m2 * r + 2 * d3 * t2 + 4 * d2 * m * t + 2 * d2 * lk * t3 +
               2 * d2 * ll * t3 + 2 * d2 * r * t2 + 4 * d * m * r * t + 2 * d * lk * ll * t4 +
               2 * d * lk * m * t2 + 2 * d * ll * m * t2 + d * lk * r * t3 + d * ll * r * t3 +
               lk * m * r * t2 + ll * m * r * t2);

    double den = 0.0;
    den += 4 * d4 * lk * t2 + 4 * d4 * ll * t2 + 4 * d3 * lk2 * t3 + 8 * d3 * lk * ll * t3;
    den += 8 * d3 * lk * m * t + 8 * d3 * lk * r * t2 + 4 * d3 * ll2 * t3 + 8 * d3 * ll * m * t;
    den += 8 * d3 * ll * r * t2 + 4 * d2 * lk2 * ll * t4 + 6 * d2 * lk2 * m * t2;
    den += 2 * d2 * lk2 * r * t3 + 4 * d2 * lk * ll2 * t4 + 4 * d2 * lk * ll * m * t2;
    den += 12 * d2 * lk * ll * r * t3 + 4 * d2 * lk * m2 + 16 * d2 * lk * m * r * t;
    den += 4 * d2 * lk * r2 * t2 + 6 * d2 * ll2 * m * t2 + 2 * d2 * ll2 * r * t3;
    den += 4 * d2 * ll * m2 + 16 * d2 * ll * m * r * t + 4 * d2 * ll * r2 * t2 + 2 * d * lk3 * m * t3;
    den += -2 * d * lk2 * ll * m * t3 + 4 * d * lk2 * m2 * t - 2 * d * lk * ll2 * m * t3 -
           8 * d * lk * ll * m2 * t;
    den += 16 * d * lk * ll * m * r * t2 + 8 * d * lk * m2 * r + 8 * d * lk * m * r2 * t;
    den += 2 * d * ll3 * m * t3 + 4 * d * ll2 * m2 * t + 8 * d * ll * m2 * r + 8 * d * ll * m * r2 * t;
    den += 2 * lk3 * ll * m * t4 + 2 * lk3 * m2 * t2 + lk3 * m * r * t3 - 4 * lk2 * ll2 * m * t4;
    den += -2 * lk2 * ll * m2 * t2 - lk2 * ll * m * r * t3 + 2 * lk2 * m3 - 2 * lk2 * m2 * r * t;
    den += 2 * lk * ll3 * m * t4 - 2 * lk * ll2 * m2 * t2 - lk * ll2 * m * r * t3;
    den += -4 * lk * ll * m3 + 4 * lk * ll * m2 * r * t + 4 * lk * m2 * r2 + 2 * ll3 * m2 * t2;
    den += ll3 * m * r * t3 + 2 * ll2 * m3 - 2 * ll2 * m2 * r * t + 4 * ll * m2 * r2;
    return num / den;
}

double inner_product_closed(const RepresentativeMachine& machine, double lambda_k, double lambda_l) {
    return std::visit(
        Overloaded{[&](const SwingMachine& mach) {
                       return inner_product_swing_closed(mach.m, mach.d, lambda_k, lambda_l);
                   },
                   [&](const TurbineMachine& mach) {
                       if (lambda_k == lambda_l) {
                           return hnorm_turbine_closed(mach.m, mach.d, mach.r_inv, mach.tau, lambda_k);
                       }
                       return inner_product_turbine_closed(mach.m, mach.d, mach.r_inv, mach.tau,
                                                           lambda_k, lambda_l);
                   }},
        machine);
}

double inner_product(const RepresentativeMachine& machine, double lambda_k, double lambda_l,
                     InnerProductMethod method) {
    return method == InnerProductMethod::Sylvester
               ? inner_product_sylvester(machine, lambda_k, lambda_l)
               : inner_product_closed(machine, lambda_k, lambda_l);
}

CostMatrix build_cost_matrix(const ModalBasis& basis, const RepresentativeMachine& machine,
                             InnerProductMethod method) {
    validate_machine(machine);
    const auto modes = basis.lambdas.size() - 1;
    CostMatrix out;
    out.method = method;
    out.Y.resize(modes, modes);
    for (Eigen::Index k = 0; k < modes; ++k) {
        for (Eigen::Index l = k; l < modes; ++l) {
            const double value =
                basis.gamma(k, l) * inner_product(machine, basis.lambdas(k + 1), basis.lambdas(l + 1), method);
            out.Y(k, l) = value;
            out.Y(l, k) = value;
        }
    }
    return out;
}

double sync_cost(const CostMatrix& cost, const ModalBasis& basis, const Eigen::VectorXd& u0) {
    const Eigen::VectorXd z0 = project_disturbance(basis, u0);
    const double quad = z0.dot(cost.Y * z0);
    return std::sqrt(std::max(quad, 0.0));
}

double sync_cost(const ModalBasis& basis, const RepresentativeMachine& machine,
                 const Eigen::VectorXd& u0, InnerProductMethod method) {
    return sync_cost(build_cost_matrix(basis, machine, method), basis, u0);
}

double mean_sync_cost(const CostMatrix& cost, const ModalBasis& basis,
                      const DisturbanceCovariance& sigma_u) {
    double trace = 0.0;
    switch (sigma_u.kind) {
        case DisturbanceCovariance::Kind::Rating:
            trace = cost.Y.trace();
            break;
        case DisturbanceCovariance::Kind::Identity:
            trace = cost.Y.cwiseProduct(basis.gamma).sum();
            break;
        default:
            trace = cost.Y.cwiseProduct(sigma_z(basis, sigma_u)).sum();
            break;
    }
    return std::sqrt(std::max(trace, 0.0));
}

double mean_sync_cost(const ModalBasis& basis, const RepresentativeMachine& machine,
                      const DisturbanceCovariance& sigma_u, InnerProductMethod method) {
    return mean_sync_cost(build_cost_matrix(basis, machine, method), basis, sigma_u);
}

}  // namespace gridsync
