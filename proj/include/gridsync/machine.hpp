#pragma once

#include <complex>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gridsync/grid.hpp"

namespace gridsync {

using Complex = std::complex<double>;

enum class ModelKind { Swing, Turbine };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

/// g0(s) = 1 / (m s + d)
struct SwingMachine {
    double m = 1.0;
    double d = 1.0;
};

/// g0(s) = (tau s + 1) / (m tau s^2 + (m + d tau) s + d + r_inv)
struct TurbineMachine {
    double m = 1.0;
    double d = 1.0;
    double r_inv = 1.0;
    double tau = 1.0;
};

using RepresentativeMachine = std::variant<SwingMachine, TurbineMachine>;

[[nodiscard]] ModelKind model_kind(const RepresentativeMachine& machine);
[[nodiscard]] double inertia(const RepresentativeMachine& machine);
/// 1 / g0(0): d for swing, d + r_inv with a turbine.
[[nodiscard]] double dc_damping(const RepresentativeMachine& machine);
/// Throws unless every parameter is positive (r_inv may be zero).
void validate_machine(const RepresentativeMachine& machine);

/// A grid fitted to the proportional form g_i = g0 / f_i, plus the per-bus
/// mismatch left over when the grid is not exactly proportional.
struct ProportionalSystem {
    RepresentativeMachine machine;
    Eigen::VectorXd f;
    /// d - d_i / f_i
    Eigen::VectorXd delta;
    /// K0(0) - K_i(0) / f_i = r_inv - r_inv_i / f_i (turbine only, else empty)
    Eigen::VectorXd delta_k_dc;
    /// m - m_i / f_i; identically zero unless ratings are supplied explicitly.
    Eigen::VectorXd delta_inertia;

    [[nodiscard]] int size() const { return static_cast<int>(f.size()); }
};

/// Representative machine by rating-normalized averaging:
/// m = mean(m_i), f_i = m_i / m, d = sum d_i / sum f_i, r_inv = sum r_inv_i / sum f_i,
/// tau = mean(tau_i). When every bus carries an explicit rating `f` those are used
/// instead and m = sum m_i / sum f_i.
ProportionalSystem extract_representative(const Grid& grid, ModelKind kind);

/// Grid whose buses carry exactly the proportional parameters f_i * (m, d, r_inv), tau.
Grid proportional_grid(const Grid& grid, const ProportionalSystem& sys);

Complex eval_transfer(const RepresentativeMachine& machine, Complex s);

struct SprCheck {
    bool strictly_positive_real = false;
    double min_real_part = 0.0;  // over the sampled frequency grid
    std::vector<Complex> poles;
};

/// Samples Re g0(jw) on 2000 log-spaced frequencies in [1e-3, 1e3] rad/s and
/// computes the poles exactly.
SprCheck check_spr(const RepresentativeMachine& machine);

/// Realization of the step response g0(s)/s. The closed-loop mode for
/// eigenvalue lambda uses A - lambda B C.
struct StateSpace {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;

    [[nodiscard]] Eigen::MatrixXd closed_loop(double lambda) const;
    /// C (sI - (A - lambda B C))^{-1} B
    [[nodiscard]] Complex transfer(double lambda, Complex s) const;
};

StateSpace realize_state_space(const RepresentativeMachine& machine);

/// Closed-loop modal step response g0 / (s + lambda g0), evaluated directly.
Complex eval_modal_step_transfer(const RepresentativeMachine& machine, double lambda, Complex s);

struct Underdamped {
    double omega_d = 0.0;
    double eta = 0.0;
    double gamma = 0.0;
    double phi = 0.0;  // in (-pi/2, pi/2)
};

struct Overdamped {
    double omega_d_squared = 0.0;  // <= 0
};

using DampingRegime = std::variant<Underdamped, Overdamped>;

/// omega_d^2 = (d + r_inv)/(m tau) - (1/tau + d/m)^2 / 4; the boundary is overdamped.
DampingRegime damping_regime(const TurbineMachine& machine);

/// cos(phi) via sqrt(1 - (m - d tau)^2 / (4 m tau r_inv)); cross-checks the arcsin route.
double phi_cosine(const TurbineMachine& machine);

}  // namespace gridsync
