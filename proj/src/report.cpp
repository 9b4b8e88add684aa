#include "gridsync/report.hpp"

#include <algorithm>
#include <cmath>

#include "gridsync/error.hpp"
#include "gridsync/response.hpp"
#include "overloaded.hpp"

namespace gridsync {

namespace {

using detail::Overloaded;
using nlohmann::json;

double relative_residual(double value, double reference) {
    const double scale = std::abs(reference);
    return scale > 0.0 ? std::abs(value - reference) / scale : std::abs(value);
}

json check_entry(double residual, double tolerance, bool& all_passed) {
    const bool pass = residual <= tolerance;
    all_passed = all_passed && pass;
    return {{"residual", residual}, {"tolerance", tolerance}, {"pass", pass}};
}

json machine_json(const RepresentativeMachine& machine) {
    return std::visit(
        Overloaded{[](const SwingMachine& mach) { return json{{"m", mach.m}, {"d", mach.d}}; },
                   [](const TurbineMachine& mach) {
                       return json{{"m", mach.m}, {"d", mach.d}, {"r_inv", mach.r_inv}, {"tau", mach.tau}};
                   }},
        machine);
}

double max_cost_matrix_gap(const CostMatrix& a, const CostMatrix& b) {
    const double scale = b.Y.cwiseAbs().maxCoeff();
    const double gap = (a.Y - b.Y).cwiseAbs().maxCoeff();
    return scale > 0.0 ? gap / scale : gap;
}

}  // namespace

SigmaSpec parse_sigma(const std::string& text) {
    if (text == "I") return {text, DisturbanceCovariance::identity()};
    if (text == "F") return {text, DisturbanceCovariance::rating()};
    if (text == "F2") return {text, DisturbanceCovariance::rating_squared()};
    throw Error(ErrorKind::InvalidParameter, "unknown covariance preset '" + text + "' (use I, F or F2)");
}

int bus_index(const Grid& grid, int id) {
    for (int i = 0; i < grid.size(); ++i) {
        if (grid.buses[static_cast<std::size_t>(i)].id == id) return i;
    }
    throw Error(ErrorKind::InvalidParameter, "no bus with id " + std::to_string(id));
}

Eigen::VectorXd step_vector(const Grid& grid, const StepSpec& step) {
    if (!std::isfinite(step.magnitude)) {
        throw Error(ErrorKind::InvalidParameter, "step magnitude must be finite");
    }
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(grid.size());
    u0(bus_index(grid, step.bus_id)) = step.magnitude;
    return u0;
}

IntegrationOptions oracle_integration_options(const FullStateModel& model,
                                              const RepresentativeMachine& machine,
                                              std::optional<double> dt, std::optional<double> t_end) {
    IntegrationOptions options;
    options.dt = dt.value_or(std::min(1e-3, 0.1 * min_time_constant(model)));
    const double floor = std::max(60.0, 20.0 * inertia(machine) / dc_damping(machine));
    options.t_end = t_end.value_or(settling_horizon(model, 8.0, floor));
    return options;
}

json metrics_json(const EmpiricalMetrics& metrics) {
    json doc;
    doc["method"] = to_string(MetricMethod::Oracle);
    doc["l2_cost"] = metrics.l2_cost;
    doc["l2_tail_estimate"] = metrics.l2_tail_estimate;
    doc["nadir"] = {{"value", metrics.nadir}, {"time", metrics.nadir_time}};
    doc["rocof"] = metrics.rocof;
    doc["steady_state"] = metrics.steady_state;
    doc["settled"] = metrics.settled;
    std::vector<double> terminal(metrics.terminal_frequencies.data(),
                                 metrics.terminal_frequencies.data() + metrics.terminal_frequencies.size());
    doc["terminal_frequencies"] = terminal;
    doc["warnings"] = metrics.warnings;
    return doc;
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

AnalysisResult analyze(const Grid& grid, const AnalyzeOptions& options) {
    if (!options.step && !options.sigma) {
        throw Error(ErrorKind::InvalidParameter, "analyze needs --step or --sigma");
    }
    const ProportionalSystem sys = extract_representative(grid, options.kind);
    const ModalBasis basis = modal_decompose(scaled_laplacian(build_laplacian(grid), sys.f), sys.f);
    const RepresentativeMachine& machine = sys.machine;
    const Tolerances& tol = options.tolerances;

    AnalysisResult result;
    json& report = result.report;
    bool& passed = result.cross_checks_passed;
    report["schema"] = kReportSchema;

    json scenario{{"grid", grid.name}, {"buses", grid.size()}, {"lines", grid.lines.size()},
                  {"model", to_string(options.kind)}};
    if (options.step) {
        scenario["step"] = {{"bus", options.step->bus_id}, {"magnitude", options.step->magnitude}};
    }
    if (options.sigma) scenario["sigma"] = options.sigma->label;
    report["scenario"] = scenario;

    const double max_delta = sys.delta.cwiseAbs().maxCoeff();
    const SprCheck spr = check_spr(machine);
    json fit{{"machine", machine_json(machine)},
             {"f", {{"min", sys.f.minCoeff()}, {"max", sys.f.maxCoeff()}, {"sum", sys.f.sum()}}},
             {"max_abs_delta_over_d", max_delta / std::visit([](const auto& m) { return m.d; }, machine)},
             {"strictly_positive_real", spr.strictly_positive_real},
             {"lambda1", basis.lambdas(1)},
             {"lambda_max", basis.lambdas(basis.size() - 1)}};
    if (const auto* turbine = std::get_if<TurbineMachine>(&machine)) {
        fit["damping_regime"] =
            std::holds_alternative<Underdamped>(damping_regime(*turbine)) ? "underdamped" : "overdamped";
    }
    report["fit"] = fit;

    const InnerProductMethod other = options.method == InnerProductMethod::ClosedForm
                                         ? InnerProductMethod::Sylvester
                                         : InnerProductMethod::ClosedForm;
    const CostMatrix cost = build_cost_matrix(basis, machine, options.method);
    const CostMatrix cost_other = build_cost_matrix(basis, machine, other);
    json checks;
    checks["closed_vs_sylvester"] = check_entry(max_cost_matrix_gap(cost, cost_other), tol.sylvester, passed);

    json metrics;
    const std::string method_tag(to_string(options.method));
    std::optional<FullStateModel> model;
    IntegrationOptions integration;
    if (options.oracle) {
        model = assemble_dynamics(proportional_grid(grid, sys), options.kind);
        integration = oracle_integration_options(*model, machine, options.dt, options.t_end);
    }
    json oracle_checks = json::object();

    if (options.step) {
        const Eigen::VectorXd u0 = step_vector(grid, *options.step);
        const StepScenario scenario_step = make_step_scenario(u0, sys.f);
        const double w_inf = steady_state_frequency(sys, scenario_step);
        const double rate = rocof(sys, scenario_step);
        const double cost_value = sync_cost(cost, basis, u0);
        const double cost_other_value = sync_cost(cost_other, basis, u0);
        metrics["w_inf"] = {{"value", w_inf}, {"method", to_string(MetricMethod::ClosedForm)}};
        metrics["rocof"] = {{"value", rate}, {"method", to_string(MetricMethod::ClosedForm)}};
        metrics["sync_cost"] = {{"value", cost_value},
                                {"method", method_tag},
                                {"sylvester_residual", relative_residual(cost_value, cost_other_value)}};
        std::optional<NadirResult> nad;
        if (options.kind == ModelKind::Turbine) {
            nad = nadir(sys, scenario_step);
            metrics["nadir"] = {{"value", nad->value}, {"time", nad->time}, {"method", to_string(nad->method)}};
        }
        if (model) {
            const EmpiricalMetrics emp = streaming_metrics(*model, u0, integration, slowest_decay_rate(*model));
            const double oracle_rocof = oracle_initial_rocof(*model, u0);
            oracle_checks["w_inf"] = check_entry(relative_residual(emp.steady_state, w_inf), tol.w_inf, passed);
            oracle_checks["rocof"] = check_entry(relative_residual(oracle_rocof, rate), tol.rocof, passed);
            oracle_checks["sync_cost"] =
                check_entry(relative_residual(emp.l2_cost, cost_value), tol.sync_cost, passed);
            metrics["w_inf"]["oracle_residual"] = oracle_checks["w_inf"]["residual"];
            metrics["rocof"]["oracle_residual"] = oracle_checks["rocof"]["residual"];
            metrics["sync_cost"]["oracle_residual"] = oracle_checks["sync_cost"]["residual"];
            if (nad) {
                oracle_checks["nadir"] = check_entry(relative_residual(emp.nadir, nad->value), tol.nadir, passed);
                metrics["nadir"]["oracle_residual"] = oracle_checks["nadir"]["residual"];
            }
            metrics["oracle"] = metrics_json(emp);
        }
    }

    if (options.sigma) {
        const double mean = mean_sync_cost(cost, basis, options.sigma->covariance);
        const double mean_other = mean_sync_cost(cost_other, basis, options.sigma->covariance);
        metrics["mean_sync_cost"] = {{"value", mean},
                                     {"method", method_tag},
                                     {"sylvester_residual", relative_residual(mean, mean_other)}};
        if (model && grid.size() <= options.oracle_mean_cost_max_buses) {
            const Eigen::VectorXd weights = options.sigma->covariance.diagonal_for(sys.f);
            double total = 0.0;
            for (int i = 0; i < grid.size(); ++i) {
                const double c = oracle_l2_cost(*model, Eigen::VectorXd::Unit(grid.size(), i), integration);
                total += weights(i) * c * c;
            }
            oracle_checks["mean_sync_cost"] =
                check_entry(relative_residual(std::sqrt(total), mean), tol.sync_cost, passed);
            metrics["mean_sync_cost"]["oracle_residual"] = oracle_checks["mean_sync_cost"]["residual"];
        } else if (model) {
            metrics["mean_sync_cost"]["oracle_residual"] = nullptr;
        }
    }

    checks["closed_vs_oracle"] = oracle_checks;
    report["metrics"] = metrics;
    report["cross_checks"] = checks;
    report["cross_checks_passed"] = passed;
    json provenance{{"version", GRIDSYNC_VERSION}, {"seed", options.seed}};
    if (model) {
        provenance["dt"] = integration.dt;
        provenance["t_end"] = integration.t_end;
    }
    report["provenance"] = provenance;
    return result;
}

}  // namespace gridsync
