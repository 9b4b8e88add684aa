#include "gridsync/response.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gridsync/error.hpp"
#include "overloaded.hpp"

namespace gridsync {

using detail::Overloaded;

std::string_view to_string(MetricMethod method) {
    switch (method) {
        case MetricMethod::ClosedForm: return "closed_form";
        case MetricMethod::Sylvester: return "sylvester";
        case MetricMethod::Oracle: return "oracle";
        case MetricMethod::NumericTrace: return "numeric_trace";
    }
    return "unknown";
}

StepScenario make_step_scenario(const Eigen::VectorXd& u0, const Eigen::VectorXd& f) {
    if (u0.size() != f.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "disturbance has " + std::to_string(u0.size()) + " entries, grid has " +
                        std::to_string(f.size()) + " buses");
    }
    return {u0, u0.sum(), f.sum()};
}

StepScenario single_bus_step(const Eigen::VectorXd& f, int bus, double magnitude) {
    if (bus < 0 || bus >= f.size()) {
        throw Error(ErrorKind::InvalidParameter, "step bus " + std::to_string(bus) + " out of range");
    }
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(f.size());
    u0(bus) = magnitude;
    return make_step_scenario(u0, f);
}

TraceOptions default_trace_options(const RepresentativeMachine& machine) {
    const double ratio = std::visit([](const auto& mach) { return mach.m / mach.d; }, machine);
    return {std::max(60.0, 20.0 * ratio), 1e-3};
}

double steady_state_frequency(const ProportionalSystem& sys, const StepScenario& scenario) {
    // sum_i (d_i + r_inv_i) = sum f * (d + r_inv) for the fitted system.
    const double total = scenario.sum_f * dc_damping(sys.machine);
    if (!(total > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "steady state undefined: zero total damping");
    }
    return scenario.sum_u / total;
}

namespace {

// Step response of g0(s)/s by RK4 on its realization; used for overdamped turbines.
Trace integrate_representative(const RepresentativeMachine& machine, double gain, double t_end,
                               double dt) {
    const StateSpace ss = realize_state_space(machine);
    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
    Trace trace;
    trace.dt = dt;
    trace.t.reserve(steps + 1);
    trace.values.reserve(steps + 1);
    // The step response of g0 is the impulse response of g0/s: free motion from x(0) = gain B.
    Eigen::VectorXd x = gain * ss.B;
    auto rhs = [&](const Eigen::VectorXd& state) -> Eigen::VectorXd { return ss.A * state; };
    for (std::size_t k = 0; k <= steps; ++k) {
        trace.t.push_back(static_cast<double>(k) * dt);
        trace.values.push_back((ss.C * x)(0));
        const Eigen::VectorXd k1 = rhs(x);
        const Eigen::VectorXd k2 = rhs(x + 0.5 * dt * k1);
        const Eigen::VectorXd k3 = rhs(x + 0.5 * dt * k2);
        const Eigen::VectorXd k4 = rhs(x + dt * k3);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return trace;
}

}  // namespace

double system_frequency_at(const ProportionalSystem& sys, const StepScenario& scenario, double t) {
    if (t <= 0.0) {
        return 0.0;
    }
    const double w_inf = steady_state_frequency(sys, scenario);
    return std::visit(
        Overloaded{[&](const SwingMachine& mach) { return w_inf * -std::expm1(-mach.d / mach.m * t); },
                   [&](const TurbineMachine& mach) {
                       const auto regime = damping_regime(mach);
                       const auto* under = std::get_if<Underdamped>(&regime);
                       if (under == nullptr) {
                           throw Error(ErrorKind::WrongVariant,
                                       "closed-form trace only available for underdamped turbines");
                       }
                       const double wt = under->omega_d * t;
                       const double osc = std::cos(wt) +
                                          (under->gamma - under->eta) / under->omega_d * std::sin(wt);
                       return w_inf * (1.0 - std::exp(-under->eta * t) * osc);
                   }},
        sys.machine);
}

Trace system_frequency_trace(const ProportionalSystem& sys, const StepScenario& scenario,
                             double t_end, double dt) {
    if (!(t_end > 0.0) || !(dt > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "trace needs t_end > 0 and dt > 0");
    }
    if (const auto* turbine = std::get_if<TurbineMachine>(&sys.machine)) {
        if (std::holds_alternative<Overdamped>(damping_regime(*turbine))) {
            return integrate_representative(sys.machine, scenario.sum_u / scenario.sum_f, t_end, dt);
        }
    }
    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
    Trace trace;
    trace.dt = dt;
    trace.t.resize(steps + 1);
    trace.values.resize(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        trace.t[k] = static_cast<double>(k) * dt;
        trace.values[k] = system_frequency_at(sys, scenario, trace.t[k]);
    }
    return trace;
}

NadirResult nadir(const ProportionalSystem& sys, const StepScenario& scenario,
                  const TraceOptions& options) {
    const auto* mach = std::get_if<TurbineMachine>(&sys.machine);
    if (mach == nullptr) {
        throw Error(ErrorKind::WrongVariant,
                    "nadir closed form needs the turbine model; the swing COI response is monotone");
    }
    const auto regime = damping_regime(*mach);
    if (const auto* under = std::get_if<Underdamped>(&regime)) {
        const double w_inf = std::abs(steady_state_frequency(sys, scenario));
        const double angle = under->phi + std::numbers::pi / 2.0;
        const double overshoot =
            std::sqrt(mach->tau * mach->r_inv / mach->m) * std::exp(-under->eta / under->omega_d * angle);
        return {w_inf * (1.0 + overshoot), angle / under->omega_d, MetricMethod::ClosedForm};
    }
    const Trace trace = system_frequency_trace(sys, scenario, options.t_end, options.dt);
    NadirResult out{0.0, 0.0, MetricMethod::NumericTrace};
    for (std::size_t k = 0; k < trace.values.size(); ++k) {
        if (std::abs(trace.values[k]) > out.value) {
            out.value = std::abs(trace.values[k]);
            out.time = trace.t[k];
        }
    }
    return out;
}

NadirResult nadir(const ProportionalSystem& sys, const StepScenario& scenario) {
    return nadir(sys, scenario, default_trace_options(sys.machine));
}

double rocof(const ProportionalSystem& sys, const StepScenario& scenario) {
    return std::abs(scenario.sum_u) / (scenario.sum_f * inertia(sys.machine));
}

bool swing_overshoot_check(const ProportionalSystem& sys, const StepScenario& scenario,
                           const TraceOptions& options) {
    if (!std::holds_alternative<SwingMachine>(sys.machine)) {
        throw Error(ErrorKind::WrongVariant, "overshoot check applies to the swing model only");
    }
    const double w_inf = std::abs(steady_state_frequency(sys, scenario));
    const Trace trace = system_frequency_trace(sys, scenario, options.t_end, options.dt);
    double peak = 0.0;
    for (double v : trace.values) peak = std::max(peak, std::abs(v));
    return peak <= w_inf * (1.0 + 1e-9) + 1e-300;
}

bool swing_overshoot_check(const ProportionalSystem& sys, const StepScenario& scenario) {
    return swing_overshoot_check(sys, scenario, default_trace_options(sys.machine));
}

}  // namespace gridsync
