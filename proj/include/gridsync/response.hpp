#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gridsync/machine.hpp"

namespace gridsync {

/// Where a reported number came from.
enum class MetricMethod { ClosedForm, Sylvester, Oracle, NumericTrace };

std::string_view to_string(MetricMethod method);

/// Constant power step u(t) = u0 for t >= 0. Negative entries are load increases.
struct StepScenario {
    Eigen::VectorXd u0;
    double sum_u = 0.0;
    double sum_f = 0.0;
};

StepScenario make_step_scenario(const Eigen::VectorXd& u0, const Eigen::VectorXd& f);
StepScenario single_bus_step(const Eigen::VectorXd& f, int bus, double magnitude);

/// Scalar samples on a uniform grid t_k = k dt.
struct Trace {
    double dt = 0.0;
    std::vector<double> t;
    std::vector<double> values;
};

struct TraceOptions {
    double t_end = 60.0;
    double dt = 1e-3;
};

/// dt = 1e-3 s, t_end = max(60, 20 m / d).
TraceOptions default_trace_options(const RepresentativeMachine& machine);

/// Closed-form COI frequency at time t; throws for an overdamped turbine.
double system_frequency_at(const ProportionalSystem& sys, const StepScenario& scenario, double t);

/// COI frequency trace. Overdamped turbines are integrated numerically from
/// the state-space realization of g0(s)/s.
Trace system_frequency_trace(const ProportionalSystem& sys, const StepScenario& scenario,
                             double t_end, double dt);

/// Sum u / sum (d_i [+ r_inv_i]); never depends on inertia.
double steady_state_frequency(const ProportionalSystem& sys, const StepScenario& scenario);

struct NadirResult {
    double value = 0.0;  // magnitude of the largest COI deviation
    double time = 0.0;
    MetricMethod method = MetricMethod::ClosedForm;
};

/// Turbine systems only. Underdamped: closed form at t = (phi + pi/2) / omega_d.
/// Overdamped: maximum of the numerically integrated trace, tagged NumericTrace.
NadirResult nadir(const ProportionalSystem& sys, const StepScenario& scenario,
                  const TraceOptions& options);
NadirResult nadir(const ProportionalSystem& sys, const StepScenario& scenario);

/// |sum u| / sum m_i, attained as t -> 0+.
double rocof(const ProportionalSystem& sys, const StepScenario& scenario);

/// Swing systems only: true iff the trace never exceeds |w_inf| (to 1e-9).
bool swing_overshoot_check(const ProportionalSystem& sys, const StepScenario& scenario,
                           const TraceOptions& options);
bool swing_overshoot_check(const ProportionalSystem& sys, const StepScenario& scenario);

}  // namespace gridsync
