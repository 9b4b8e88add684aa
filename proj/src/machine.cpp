#include "gridsync/machine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gridsync/error.hpp"
#include "overloaded.hpp"

namespace gridsync {

namespace {

using detail::Overloaded;

void require_positive(double value, const char* name) {
    if (!std::isfinite(value) || value <= 0.0) {
        std::ostringstream msg;
        msg << "representative machine: nonpositive " << name << " (" << value << ")";
        throw Error(ErrorKind::InvalidParameter, msg.str());
    }
}

}  // namespace

std::string_view to_string(ModelKind kind) {
    return kind == ModelKind::Swing ? "swing" : "turbine";
}

ModelKind parse_model_kind(std::string_view text) {
    if (text == "swing") return ModelKind::Swing;
    if (text == "turbine") return ModelKind::Turbine;
    throw Error(ErrorKind::InvalidParameter, "unknown model '" + std::string(text) + "'");
}

ModelKind model_kind(const RepresentativeMachine& machine) {
    return std::holds_alternative<SwingMachine>(machine) ? ModelKind::Swing : ModelKind::Turbine;
}

double inertia(const RepresentativeMachine& machine) {
    return std::visit([](const auto& mach) { return mach.m; }, machine);
}

double dc_damping(const RepresentativeMachine& machine) {
    return std::visit(Overloaded{[](const SwingMachine& mach) { return mach.d; },
                                 [](const TurbineMachine& mach) { return mach.d + mach.r_inv; }},
                      machine);
}

void validate_machine(const RepresentativeMachine& machine) {
    std::visit(Overloaded{[](const SwingMachine& mach) {
                              require_positive(mach.m, "inertia m");
                              require_positive(mach.d, "damping d");
                          },
                          [](const TurbineMachine& mach) {
                              require_positive(mach.m, "inertia m");
                              require_positive(mach.d, "damping d");
                              require_positive(mach.tau, "turbine time constant tau");
                              if (!std::isfinite(mach.r_inv) || mach.r_inv < 0.0) {
                                  throw Error(ErrorKind::InvalidParameter,
                                              "representative machine: negative r_inv");
                              }
                          }},
               machine);
}

ProportionalSystem extract_representative(const Grid& grid, ModelKind kind) {
    validate_grid(grid);
    const int n = grid.size();
    Eigen::VectorXd m_i(n), d_i(n), r_i(n), tau_i(n), f_given(n);
    int explicit_ratings = 0;
    for (int i = 0; i < n; ++i) {
        const auto& bus = grid.buses[static_cast<std::size_t>(i)];
        m_i(i) = bus.m;
        d_i(i) = bus.d;
        if (kind == ModelKind::Turbine) {
            if (!bus.has_turbine()) {
                throw Error(ErrorKind::MissingField,
                            "bus " + std::to_string(bus.id) + ": turbine model needs r_inv and tau");
            }
            r_i(i) = *bus.r_inv;
            tau_i(i) = *bus.tau;
        }
        if (bus.f) {
            f_given(i) = *bus.f;
            ++explicit_ratings;
        }
    }
    if (explicit_ratings != 0 && explicit_ratings != n) {
        throw Error(ErrorKind::MissingField,
                    "rating 'f' must be given for every bus or for none");
    }

    ProportionalSystem sys;
    double m = 0.0;
    if (explicit_ratings == n) {
        sys.f = f_given;
        m = m_i.sum() / sys.f.sum();
    } else {
        m = m_i.mean();
        sys.f = m_i / m;
    }
    const double sum_f = sys.f.sum();
    const double d = d_i.sum() / sum_f;
    sys.delta = (d - d_i.cwiseQuotient(sys.f).array()).matrix();
    sys.delta_inertia = (m - m_i.cwiseQuotient(sys.f).array()).matrix();
    if (kind == ModelKind::Swing) {
        sys.machine = SwingMachine{m, d};
    } else {
        const double r_inv = r_i.sum() / sum_f;
        sys.machine = TurbineMachine{m, d, r_inv, tau_i.mean()};
        sys.delta_k_dc = (r_inv - r_i.cwiseQuotient(sys.f).array()).matrix();
    }
    validate_machine(sys.machine);
    return sys;
}

Grid proportional_grid(const Grid& grid, const ProportionalSystem& sys) {
    if (sys.size() != grid.size()) {
        throw Error(ErrorKind::DimensionMismatch, "proportional_grid: dimension mismatch");
    }
    Grid out = grid;
    for (int i = 0; i < grid.size(); ++i) {
        auto& bus = out.buses[static_cast<std::size_t>(i)];
        const double fi = sys.f(i);
        std::visit(Overloaded{[&](const SwingMachine& mach) {
                                  bus.m = fi * mach.m;
                                  bus.d = fi * mach.d;
                              },
                              [&](const TurbineMachine& mach) {
                                  bus.m = fi * mach.m;
                                  bus.d = fi * mach.d;
                                  bus.r_inv = fi * mach.r_inv;
                                  bus.tau = mach.tau;
                              }},
                   sys.machine);
        bus.f = fi;
    }
    return out;
}

Complex eval_transfer(const RepresentativeMachine& machine, Complex s) {
    Complex num;
    Complex den;
    std::visit(Overloaded{[&](const SwingMachine& mach) {
                              num = 1.0;
                              den = mach.m * s + mach.d;
                          },
                          [&](const TurbineMachine& mach) {
                              num = mach.tau * s + 1.0;
                              den = mach.m * mach.tau * s * s + (mach.m + mach.d * mach.tau) * s +
                                    mach.d + mach.r_inv;
                          }},
               machine);
    if (std::abs(den) <= 1e-14 * std::max(1.0, std::abs(num))) {
        std::ostringstream msg;
        msg << "g0(s) evaluated at a pole, s = " << s;
        throw Error(ErrorKind::Pole, msg.str());
    }
    return num / den;
}

SprCheck check_spr(const RepresentativeMachine& machine) {
    SprCheck out;
    std::visit(Overloaded{[&](const SwingMachine& mach) { out.poles = {Complex(-mach.d / mach.m)}; },
                          [&](const TurbineMachine& mach) {
                              const double a = mach.m * mach.tau;
                              const double b = mach.m + mach.d * mach.tau;
                              const double c = mach.d + mach.r_inv;
                              const Complex disc = std::sqrt(Complex(b * b - 4.0 * a * c));
                              out.poles = {(-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a)};
                          }},
               machine);
    constexpr int kSamples = 2000;
    out.min_real_part = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kSamples; ++i) {
        const double omega = std::pow(10.0, -3.0 + 6.0 * i / (kSamples - 1));
        out.min_real_part = std::min(out.min_real_part, eval_transfer(machine, {0.0, omega}).real());
    }
    bool stable = true;
    for (const auto& p : out.poles) stable = stable && p.real() < 0.0;
    out.strictly_positive_real = stable && out.min_real_part > 0.0;
    return out;
}

Eigen::MatrixXd StateSpace::closed_loop(double lambda) const {
    return A - lambda * B * C;
}

Complex StateSpace::transfer(double lambda, Complex s) const {
    const auto n = A.rows();
    const Eigen::MatrixXcd lhs =
        s * Eigen::MatrixXcd::Identity(n, n) - closed_loop(lambda).cast<Complex>();
    const Eigen::VectorXcd x = lhs.partialPivLu().solve(B.cast<Complex>());
    return (C.cast<Complex>() * x)(0);
}

StateSpace realize_state_space(const RepresentativeMachine& machine) {
    StateSpace ss;
    std::visit(Overloaded{[&](const SwingMachine& mach) {
                              ss.A.resize(2, 2);
                              ss.A << 0.0, 1.0, 0.0, -mach.d / mach.m;
                              ss.B.resize(2);
                              ss.B << 0.0, 1.0 / mach.m;
                              ss.C.resize(2);
                              ss.C << 1.0, 0.0;
                          },
                          [&](const TurbineMachine& mach) {
                              ss.A.resize(3, 3);
                              ss.A << 0.0, 1.0, 0.0,
                                  0.0, -mach.d / mach.m, 1.0 / mach.m,
                                  0.0, -mach.r_inv / mach.tau, -1.0 / mach.tau;
                              ss.B.resize(3);
                              ss.B << 0.0, 1.0 / mach.m, 0.0;
                              ss.C.resize(3);
                              ss.C << 1.0, 0.0, 0.0;
                          }},
               machine);
    return ss;
}

Complex eval_modal_step_transfer(const RepresentativeMachine& machine, double lambda, Complex s) {
    const Complex g0 = eval_transfer(machine, s);
    return g0 / (s + lambda * g0);
}

DampingRegime damping_regime(const TurbineMachine& mach) {
    const double inv_tau = 1.0 / mach.tau;
    const double d_over_m = mach.d / mach.m;
    const double omega_sq = (mach.d + mach.r_inv) / (mach.m * mach.tau) -
                            0.25 * (inv_tau + d_over_m) * (inv_tau + d_over_m);
    if (!(omega_sq > 0.0)) {
        return Overdamped{omega_sq};
    }
    Underdamped out;
    out.omega_d = std::sqrt(omega_sq);
    out.eta = 0.5 * (inv_tau + d_over_m);
    out.gamma = inv_tau - mach.r_inv / mach.m;
    const double sin_phi = (mach.m - mach.d * mach.tau) / (2.0 * std::sqrt(mach.m * mach.tau * mach.r_inv));
    out.phi = std::asin(std::clamp(sin_phi, -1.0, 1.0));
    return out;
}

double phi_cosine(const TurbineMachine& mach) {
    const double diff = mach.m - mach.d * mach.tau;
    return std::sqrt(1.0 - diff * diff / (4.0 * mach.m * mach.tau * mach.r_inv));
}

}  // namespace gridsync
