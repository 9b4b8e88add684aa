#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridsync/grid.hpp"
#include "gridsync/machine.hpp"

namespace gridsync {

/// Linearized network with the true per-bus parameters. State layout is
/// [theta_1..theta_n, w_1..w_n] plus [q_1..q_n] for the turbine model:
///
///   theta' = w
///   m_i w_i' = -d_i w_i (+ q_i) + u_i - [L theta]_i
///   tau_i q_i' = -r_inv_i w_i - q_i
struct FullStateModel {
    ModelKind kind = ModelKind::Swing;
    int n = 0;
    Eigen::MatrixXd laplacian;
    Eigen::VectorXd m;
    Eigen::VectorXd d;
    Eigen::VectorXd r_inv;  // empty for swing
    Eigen::VectorXd tau;    // empty for swing
    Eigen::MatrixXd A;      // dense state matrix
    Eigen::MatrixXd B;      // state x n input map
    Eigen::MatrixXd C;      // n x state frequency output

    [[nodiscard]] int state_dim() const { return kind == ModelKind::Swing ? 2 * n : 3 * n; }

    /// dx = A x + B u without forming the dense products.
    void derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& dx) const;

    /// C (sI - A)^{-1} B
    [[nodiscard]] Eigen::MatrixXcd frequency_response(Complex s) const;
};

FullStateModel assemble_dynamics(const Grid& grid, ModelKind kind);

Eigen::VectorXcd model_eigenvalues(const FullStateModel& model);
/// 1 / max |eig(A)|.
double min_time_constant(const FullStateModel& model);
/// Smallest |Re| among the strictly stable eigenvalues.
double slowest_decay_rate(const FullStateModel& model);

struct IntegrationOptions {
    double dt = 1e-3;
    double t_end = 60.0;
    int record_every = 1;
    std::optional<Eigen::VectorXd> initial_state;
};

/// Full state samples; column k of `states` is the state at t[k].
struct StateTrace {
    std::vector<double> t;
    Eigen::MatrixXd states;
    std::vector<std::string> warnings;
};

using StateVisitor = std::function<void(double t, const Eigen::VectorXd& x)>;

/// Fixed-step classical RK4 from rest (or `initial_state`) under the constant
/// input u0. Calls `visit` on every step including t = 0. Returns warnings.
std::vector<std::string> integrate(const FullStateModel& model, const Eigen::VectorXd& u0,
                                   const IntegrationOptions& options, const StateVisitor& visit);

StateTrace integrate_step_response(const FullStateModel& model, const Eigen::VectorXd& u0,
                                   const IntegrationOptions& options);

struct EmpiricalMetrics {
    std::vector<double> t;
    std::vector<double> coi;        // sum m_i w_i / sum m_i
    Eigen::MatrixXd wtilde;         // n x samples, w - coi 1
    double l2_cost = 0.0;           // sqrt(trapezoid int |w_tilde|^2)
    double l2_tail_estimate = 0.0;  // estimated int_{t_end}^inf |w_tilde|^2 (not included)
    double nadir = 0.0;             // max |coi|
    double nadir_time = 0.0;
    double rocof = 0.0;             // max |delta coi / delta t|
    double steady_state = 0.0;      // coi at t_end
    Eigen::VectorXd terminal_frequencies;
    bool settled = false;           // last 10 % within a 1e-6 relative band
    std::vector<std::string> warnings;
};

/// `decay_rate` feeds the tail estimate; pass 0 to skip it.
EmpiricalMetrics empirical_metrics(const FullStateModel& model, const StateTrace& trace,
                                   double decay_rate = 0.0);

/// Scalar fields of EmpiricalMetrics computed on the fly; the trace vectors stay empty.
/// `visit`, when set, also sees every recorded state.
EmpiricalMetrics streaming_metrics(const FullStateModel& model, const Eigen::VectorXd& u0,
                                   const IntegrationOptions& options, double decay_rate = 0.0,
                                   const StateVisitor& visit = {});

/// Streaming trapezoidal int |w_tilde|^2 dt; avoids keeping the trace.
double oracle_l2_cost(const FullStateModel& model, const Eigen::VectorXd& u0,
                      const IntegrationOptions& options);

/// Initial COI slope from one-sided differences at h and h/4 combined by
/// Richardson extrapolation.
double oracle_initial_rocof(const FullStateModel& model, const Eigen::VectorXd& u0, double h = 1e-4);

/// t_end long enough for the slowest mode to decay by `decades` decades.
double settling_horizon(const FullStateModel& model, double decades, double minimum);

}  // namespace gridsync
