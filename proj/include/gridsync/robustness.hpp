#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridsync/grid.hpp"
#include "gridsync/machine.hpp"
#include "gridsync/spectral.hpp"

namespace gridsync {

/// Per-bus mismatch between the true buses and the proportional fit, written as
/// g_i^{-1}(s) = f_i (g0^{-1}(s) - p_i(s)) with
/// p_i(s) = (m - m_i/f_i) s + (d - d_i/f_i) + (K0(s) - K_i(s)/f_i), K(s) = r_inv / (tau s + 1).
struct PerturbationModel {
    RepresentativeMachine machine;
    Eigen::VectorXd f;
    Eigen::VectorXd delta;          // d - d_i / f_i
    Eigen::VectorXd delta_inertia;  // m - m_i / f_i
    Eigen::VectorXd delta_k_dc;     // r_inv - r_inv_i / f_i (turbine only)
    Eigen::VectorXd bus_r_inv;      // turbine only
    Eigen::VectorXd bus_tau;        // turbine only
    Eigen::MatrixXd delta_tilde_dc; // V^T diag(p(0)) V

    [[nodiscard]] int size() const { return static_cast<int>(f.size()); }
    /// p_i(s) for every bus.
    [[nodiscard]] Eigen::VectorXcd diagonal(Complex s) const;
};

PerturbationModel perturbation_deltas(const Grid& grid, const ProportionalSystem& sys,
                                      const ModalBasis& basis);

/// diag(s g0 / (s + lambda_k g0)); the k = 0 entry is g0 itself.
Eigen::VectorXcd modal_loop_gains(const ModalBasis& basis, const RepresentativeMachine& machine,
                                  Complex s);

/// F^{-1/2} V H(s) V^T F^{-1/2}
Eigen::MatrixXcd nominal_transfer_eval(const ModalBasis& basis, const RepresentativeMachine& machine,
                                       Complex s);

/// F^{-1/2} V (I - H(s) Delta~(s))^{-1} H(s) V^T F^{-1/2}, Delta~(s) = V^T diag(p(s)) V.
/// s = 0 is routed through the DC identity (I - H0 Delta~)^{-1} H0 = H0.
Eigen::MatrixXcd perturbed_transfer_eval(const ModalBasis& basis, const PerturbationModel& pert,
                                         Complex s);

struct SteadyStateCheck {
    double value = 0.0;                 // sum u0 / sum (d_i [+ r_inv_i])
    Eigen::VectorXd per_bus;            // T(0) u0
    double spread = 0.0;                // max |per_bus - value|
    double product_residual = 0.0;      // ||H0 Delta~ H0||
    double inverse_residual = 0.0;      // ||(I - H0 Delta~)^{-1} - (I + H0 Delta~)||
};

SteadyStateCheck perturbed_steady_state(const Grid& grid, ModelKind kind, const Eigen::VectorXd& u0);

struct ConnectivityOptions {
    std::vector<int> k_schedule{0, 25, 50, 200, 500};
    int seeds = 10;
    std::uint64_t base_seed = 1;
    double omega_max = 10.0;
    int omega_points = 400;
    /// Oracle horizon covers this many decades of the slowest stable mode.
    double settle_decades = 5.0;
};

struct ConnectivityRow {
    int k = 0;
    std::uint64_t seed = 0;
    double lambda1 = 0.0;
    double freq_gap = 0.0;
    double cost_true = 0.0;
    double cost_prop = 0.0;
    double rel_err = 0.0;
};

struct ConnectivitySummary {
    int k = 0;
    double lambda1 = 0.0;
    double freq_gap = 0.0;
    double cost_true = 0.0;
    double cost_prop = 0.0;
    double rel_err = 0.0;
};

/// Seed j uses the same random lines for every k, so augmentations are nested.
std::uint64_t task_seed(std::uint64_t base_seed, int index);

/// sup over log-spaced w in [1e-3, omega_max] of ||T(jw) u0 - g0(jw) (sum u0 / sum f) 1||.
double frequency_gap(const ModalBasis& basis, const PerturbationModel& pert, const Eigen::VectorXd& u0,
                     double omega_max, int points);

/// Rows ordered by k then seed index; tasks run concurrently.
std::vector<ConnectivityRow> connectivity_gap(const Grid& grid, ModelKind kind, const Eigen::VectorXd& u0,
                                              const ConnectivityOptions& options);

std::vector<ConnectivitySummary> summarize(const std::vector<ConnectivityRow>& rows);

/// "k,seed,lambda1,freq_gap,cost_true,cost_prop,rel_err" followed by rows, then
/// seed-averaged rows with seed column "mean".
std::string connectivity_csv(const std::vector<ConnectivityRow>& rows);

}  // namespace gridsync
