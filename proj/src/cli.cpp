#include "gridsync/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "gridsync/error.hpp"
#include "gridsync/grid.hpp"
#include "gridsync/machine.hpp"
#include "gridsync/oracle.hpp"
#include "gridsync/report.hpp"
#include "gridsync/response.hpp"
#include "gridsync/robustness.hpp"
#include "gridsync/spectral.hpp"
#include "gridsync/synccost.hpp"
#include "parallel.hpp"
#include "random_util.hpp"

namespace gridsync {

namespace {

constexpr const char* kDescription =
    "Synchronization metrics for linearized power networks.\n"
    "Quantities are in system per-unit; inertia in p.u.*s, time in seconds.\n"
    "Disturbances are constant power steps; negative magnitudes are load increases.";

std::string format_number(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

StepSpec parse_step(const std::string& text) {
    std::optional<int> bus;
    std::optional<double> mag;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::InvalidParameter, "--step expects bus=<id>,mag=<value>");
        }
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        std::size_t used = 0;
        try {
            if (key == "bus") {
                bus = std::stoi(value, &used);
            } else if (key == "mag") {
                mag = std::stod(value, &used);
            } else {
                throw Error(ErrorKind::InvalidParameter, "--step: unknown key '" + key + "'");
            }
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::InvalidParameter, "--step: bad value '" + value + "'");
        }
        if (used != value.size()) {
            throw Error(ErrorKind::InvalidParameter, "--step: bad value '" + value + "'");
        }
    }
    if (!bus || !mag) {
        throw Error(ErrorKind::InvalidParameter, "--step expects bus=<id>,mag=<value>");
    }
    return {*bus, *mag};
}

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    int steps = 1;

    [[nodiscard]] double at(int i) const {
        return steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (steps - 1);
    }
};

Range parse_range(const std::string& text) {
    Range range;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%d%c", &range.lo, &range.hi, &range.steps, &tail) != 3 ||
        range.steps < 1 || !std::isfinite(range.lo) || !std::isfinite(range.hi)) {
        throw Error(ErrorKind::InvalidParameter, "--range expects lo:hi:steps, got '" + text + "'");
    }
    return range;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> values;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        std::size_t used = 0;
        int value = 0;
        try {
            value = std::stoi(item, &used);
        } catch (const std::logic_error&) {
            used = 0;
        }
        if (item.empty() || used != item.size()) {
            throw Error(ErrorKind::InvalidParameter, "bad integer list '" + text + "'");
        }
        values.push_back(value);
    }
    return values;
}

/// Writes to --out when given, else to `fallback`.
class Output {
public:
    Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw Error(ErrorKind::InvalidParameter, "cannot open '" + path + "' for writing");
            stream_ = &file_;
        }
    }
    std::ostream& get() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream file(path);
    if (!file) throw Error(ErrorKind::InvalidParameter, "cannot open '" + path + "' for writing");
    file << text;
}

struct GlobalFlags {
    std::string grid;
    std::string model;
    std::string out;
    std::string format;
    std::uint64_t seed = 1;
};

struct CommonScenario {
    std::string step;
    std::string sigma;
};

void report_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
    for (const auto& warning : warnings) err << "warning: " << warning << '\n';
}

Grid require_grid(const GlobalFlags& flags) {
    if (flags.grid.empty()) throw Error(ErrorKind::MissingField, "--grid is required");
    return load_grid(flags.grid);
}

ModelKind require_model(const GlobalFlags& flags) {
    if (flags.model.empty()) throw Error(ErrorKind::MissingField, "--model is required");
    return parse_model_kind(flags.model);
}

int cmd_analyze(const GlobalFlags& flags, const CommonScenario& scenario, const std::string& method,
                bool no_oracle, std::optional<double> dt, std::optional<double> t_end, std::ostream& out,
                std::ostream& err) {
    const Grid grid = require_grid(flags);
    AnalyzeOptions options;
    options.kind = require_model(flags);
    if (!scenario.step.empty()) options.step = parse_step(scenario.step);
    if (!scenario.sigma.empty()) options.sigma = parse_sigma(scenario.sigma);
    options.method = parse_inner_product_method(method);
    options.oracle = !no_oracle;
    options.dt = dt;
    options.t_end = t_end;
    options.seed = flags.seed;
    const AnalysisResult result = analyze(grid, options);
    Output sink(flags.out, out);
    sink.get() << dump_json(result.report);
    if (!result.cross_checks_passed) {
        err << "error: cross-check residual above tolerance\n";
        return kExitCrossCheck;
    }
    return kExitOk;
}

int cmd_simulate(const GlobalFlags& flags, const CommonScenario& scenario, bool true_params,
                 std::optional<double> dt, std::optional<double> t_end, int stride,
                 const std::string& metrics_path, std::ostream& out, std::ostream& err) {
    const Grid grid = require_grid(flags);
    const ModelKind kind = require_model(flags);
    if (scenario.step.empty()) throw Error(ErrorKind::MissingField, "--step is required");
    if (stride < 1) throw Error(ErrorKind::InvalidParameter, "--stride must be at least 1");
    const Eigen::VectorXd u0 = step_vector(grid, parse_step(scenario.step));
    const ProportionalSystem sys = extract_representative(grid, kind);
    const FullStateModel model = assemble_dynamics(true_params ? grid : proportional_grid(grid, sys), kind);
    const IntegrationOptions options = oracle_integration_options(model, sys.machine, dt, t_end);
    const bool csv = flags.format.empty() || flags.format == "csv";
    if (!csv && flags.format != "json") {
        throw Error(ErrorKind::InvalidParameter, "--format must be json or csv");
    }

    Output sink(flags.out, out);
    std::ostream& stream = sink.get();
    const int n = model.n;
    const double total_m = model.m.sum();
    StateVisitor writer;
    long long sample = 0;
    if (csv) {
        stream << 't';
        for (int i = 1; i <= n; ++i) stream << ",theta_" << i;
        for (int i = 1; i <= n; ++i) stream << ",w_" << i;
        if (kind == ModelKind::Turbine) {
            for (int i = 1; i <= n; ++i) stream << ",q_" << i;
        }
        stream << ",coi";
        for (int i = 1; i <= n; ++i) stream << ",wtilde_" << i;
        stream << '\n';
        writer = [&](double t, const Eigen::VectorXd& x) {
            const bool last = t >= options.t_end - 0.5 * options.dt;
            if (sample++ % stride != 0 && !last) return;
            stream << format_number(t);
            for (Eigen::Index j = 0; j < x.size(); ++j) stream << ',' << format_number(x(j));
            const double coi = model.m.dot(x.segment(n, n)) / total_m;
            stream << ',' << format_number(coi);
            for (int i = 0; i < n; ++i) stream << ',' << format_number(x(n + i) - coi);
            stream << '\n';
        };
    }
    const EmpiricalMetrics metrics =
        streaming_metrics(model, u0, options, slowest_decay_rate(model), writer);
    nlohmann::json doc = metrics_json(metrics);
    doc["schema"] = kReportSchema;
    doc["scenario"] = {{"grid", grid.name}, {"model", to_string(kind)}, {"true_params", true_params}};
    doc["provenance"] = {{"version", GRIDSYNC_VERSION}, {"dt", options.dt}, {"t_end", options.t_end}};
    if (!csv) stream << dump_json(doc);
    if (!metrics_path.empty()) write_text(metrics_path, dump_json(doc));
    report_warnings(metrics.warnings, err);
    return kExitOk;
}

enum class SweepMetric { SyncCost, MeanSyncCost, Nadir, Rocof, WInf };

SweepMetric parse_sweep_metric(const std::string& text) {
    if (text == "sync_cost") return SweepMetric::SyncCost;
    if (text == "mean_sync_cost") return SweepMetric::MeanSyncCost;
    if (text == "nadir") return SweepMetric::Nadir;
    if (text == "rocof") return SweepMetric::Rocof;
    if (text == "w_inf") return SweepMetric::WInf;
    throw Error(ErrorKind::InvalidParameter, "unknown metric '" + text + "'");
}

void set_parameter(RepresentativeMachine& machine, const std::string& name, double value) {
    if (name == "m") {
        std::visit([&](auto& mach) { mach.m = value; }, machine);
        return;
    }
    if (name == "d") {
        std::visit([&](auto& mach) { mach.d = value; }, machine);
        return;
    }
    if (name != "r_inv" && name != "tau") {
        throw Error(ErrorKind::InvalidParameter, "unknown parameter '" + name + "'");
    }
    auto* turbine = std::get_if<TurbineMachine>(&machine);
    if (turbine == nullptr) {
        throw Error(ErrorKind::InvalidParameter, "parameter '" + name + "' needs the turbine model");
    }
    (name == "r_inv" ? turbine->r_inv : turbine->tau) = value;
}

int cmd_sweep(const GlobalFlags& flags, const CommonScenario& scenario, const std::vector<std::string>& params,
              const std::vector<std::string>& ranges, const std::string& metric_name, const std::string& method_name,
              std::ostream& out) {
    const Grid grid = require_grid(flags);
    const ModelKind kind = require_model(flags);
    if (params.empty() || params.size() > 2 || params.size() != ranges.size()) {
        throw Error(ErrorKind::InvalidParameter, "sweep needs one or two --param, each with a --range");
    }
    if (params.size() == 2 && params[0] == params[1]) {
        throw Error(ErrorKind::InvalidParameter, "swept parameters must differ");
    }
    const SweepMetric metric = parse_sweep_metric(metric_name);
    const InnerProductMethod method = parse_inner_product_method(method_name);
    std::vector<Range> axes;
    for (const auto& text : ranges) axes.push_back(parse_range(text));

    const ProportionalSystem sys = extract_representative(grid, kind);
    for (const auto& name : params) {
        RepresentativeMachine probe = sys.machine;
        set_parameter(probe, name, 1.0);
    }
    if (metric == SweepMetric::Nadir && kind != ModelKind::Turbine) {
        throw Error(ErrorKind::WrongVariant, "nadir sweeps need the turbine model");
    }
    std::optional<Eigen::VectorXd> u0;
    std::optional<SigmaSpec> sigma;
    if (metric == SweepMetric::MeanSyncCost) {
        sigma = parse_sigma(scenario.sigma.empty() ? std::string("F") : scenario.sigma);
    } else {
        if (scenario.step.empty()) throw Error(ErrorKind::MissingField, "--step is required for this metric");
        u0 = step_vector(grid, parse_step(scenario.step));
    }
    // Ratings stay fixed across the sweep, so the basis is shared by every point.
    const ModalBasis basis = modal_decompose(scaled_laplacian(build_laplacian(grid), sys.f), sys.f);

    const int inner_steps = axes.size() == 2 ? axes[1].steps : 1;
    const auto count = static_cast<std::size_t>(axes[0].steps) * static_cast<std::size_t>(inner_steps);
    std::vector<std::pair<double, std::string>> values(count);
    detail::parallel_for(count, [&](std::size_t index) {
        ProportionalSystem point = sys;
        set_parameter(point.machine, params[0], axes[0].at(static_cast<int>(index) / inner_steps));
        if (axes.size() == 2) {
            set_parameter(point.machine, params[1], axes[1].at(static_cast<int>(index) % inner_steps));
        }
        validate_machine(point.machine);
        switch (metric) {
            case SweepMetric::SyncCost:
                values[index] = {sync_cost(basis, point.machine, *u0, method), std::string(to_string(method))};
                break;
            case SweepMetric::MeanSyncCost:
                values[index] = {mean_sync_cost(basis, point.machine, sigma->covariance, method),
                                 std::string(to_string(method))};
                break;
            case SweepMetric::Nadir: {
                const NadirResult result = nadir(point, make_step_scenario(*u0, point.f));
                values[index] = {result.value, std::string(to_string(result.method))};
                break;
            }
            case SweepMetric::Rocof:
                values[index] = {rocof(point, make_step_scenario(*u0, point.f)),
                                 std::string(to_string(MetricMethod::ClosedForm))};
                break;
            case SweepMetric::WInf:
                values[index] = {steady_state_frequency(point, make_step_scenario(*u0, point.f)),
                                 std::string(to_string(MetricMethod::ClosedForm))};
                break;
        }
    });

    Output sink(flags.out, out);
    std::ostream& stream = sink.get();
    for (const auto& name : params) stream << name << ',';
    stream << metric_name << ",method\n";
    for (std::size_t index = 0; index < count; ++index) {
        stream << format_number(axes[0].at(static_cast<int>(index) / inner_steps)) << ',';
        if (axes.size() == 2) stream << format_number(axes[1].at(static_cast<int>(index) % inner_steps)) << ',';
        stream << format_number(values[index].first) << ',' << values[index].second << '\n';
    }
    return kExitOk;
}

int cmd_connectivity(const GlobalFlags& flags, const CommonScenario& scenario, const std::string& schedule,
                     int seeds, double omega_max, std::ostream& out) {
    const Grid grid = require_grid(flags);
    const ModelKind kind = require_model(flags);
    if (scenario.step.empty()) throw Error(ErrorKind::MissingField, "--step is required");
    if (seeds < 1) throw Error(ErrorKind::InvalidParameter, "--seeds must be at least 1");
    ConnectivityOptions options;
    options.k_schedule = parse_int_list(schedule);
    options.seeds = seeds;
    options.base_seed = flags.seed;
    options.omega_max = omega_max;
    const auto rows = connectivity_gap(grid, kind, step_vector(grid, parse_step(scenario.step)), options);
    Output sink(flags.out, out);
    sink.get() << connectivity_csv(rows);
    return kExitOk;
}

struct SelftestRow {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
};

double log_uniform(std::mt19937_64& gen, double lo, double hi) {
    return lo * std::pow(hi / lo, detail::uniform01(gen));
}

double worst_relative(std::mt19937_64& gen, int draws, bool turbine, bool diagonal) {
    double worst = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double m = log_uniform(gen, 0.1, 10.0);
        const double d = log_uniform(gen, 0.1, 10.0);
        const double r = log_uniform(gen, 0.1, 10.0);
        const double tau = log_uniform(gen, 0.1, 10.0);
        const double lk = log_uniform(gen, 0.01, 100.0);
        const double ll = diagonal ? lk : log_uniform(gen, 0.01, 100.0);
        const RepresentativeMachine machine =
            turbine ? RepresentativeMachine{TurbineMachine{m, d, r, tau}} : RepresentativeMachine{SwingMachine{m, d}};
        const double reference = inner_product_sylvester(machine, lk, ll);
        const double closed = turbine ? (diagonal ? hnorm_turbine_closed(m, d, r, tau, lk)
                                                  : inner_product_turbine_closed(m, d, r, tau, lk, ll))
                                      : inner_product_swing_closed(m, d, lk, ll);
        worst = std::max(worst, std::abs(closed - reference) / std::abs(reference));
    }
    return worst;
}

Grid two_bus(double d1, double d2) {
    Grid grid;
    grid.name = "two-bus";
    grid.buses = {Bus{0, 1.0, d1, 1.0, 1.0, std::nullopt}, Bus{1, 1.0, d2, 1.0, 1.0, std::nullopt}};
    grid.lines = {Line{0, 1, 1.0}};
    return grid;
}

int cmd_selftest(const GlobalFlags& flags, std::ostream& out) {
    std::mt19937_64 gen(flags.seed);
    std::vector<SelftestRow> rows;
    rows.push_back({"swing inner product vs sylvester", worst_relative(gen, 50, false, false), 1e-9});
    rows.push_back({"turbine norm vs sylvester", worst_relative(gen, 50, true, true), 1e-9});
    rows.push_back({"turbine cross term vs sylvester", worst_relative(gen, 50, true, false), 1e-9});

    const Eigen::VectorXd u0 = Eigen::VectorXd::Unit(2, 0);
    IntegrationOptions options;
    options.dt = 1e-3;
    options.t_end = 40.0;
    {
        const Grid grid = two_bus(1.0, 1.0);
        const ProportionalSystem sys = extract_representative(grid, ModelKind::Swing);
        const ModalBasis basis = modal_decompose(scaled_laplacian(build_laplacian(grid), sys.f), sys.f);
        const double closed = sync_cost(basis, sys.machine, u0);
        const double oracle = oracle_l2_cost(assemble_dynamics(grid, ModelKind::Swing), u0, options);
        rows.push_back({"two-bus swing cost vs oracle", std::abs(oracle - closed) / closed, 1e-2});
    }
    {
        const Grid grid = two_bus(1.0, 1.0);
        const ProportionalSystem sys = extract_representative(grid, ModelKind::Turbine);
        const NadirResult closed = nadir(sys, make_step_scenario(u0, sys.f));
        const EmpiricalMetrics emp = streaming_metrics(assemble_dynamics(grid, ModelKind::Turbine), u0, options);
        rows.push_back({"two-bus turbine nadir vs oracle", std::abs(emp.nadir - closed.value) / closed.value, 1e-4});
    }
    {
        const Grid grid = two_bus(1.0, 3.0);
        const SteadyStateCheck dc = perturbed_steady_state(grid, ModelKind::Swing, u0);
        const EmpiricalMetrics emp = streaming_metrics(assemble_dynamics(grid, ModelKind::Swing), u0, options);
        const double spread =
            (emp.terminal_frequencies.array() - dc.value).abs().maxCoeff();
        rows.push_back({"non-proportional steady state vs oracle", spread, 1e-6});
    }

    bool all = true;
    char line[160];
    for (const auto& row : rows) {
        const bool pass = row.residual <= row.tolerance;
        all = all && pass;
        std::snprintf(line, sizeof line, "%-42s %s  residual=%.3e  tolerance=%.0e\n", row.name.c_str(),
                      pass ? "PASS" : "FAIL", row.residual, row.tolerance);
        out << line;
    }
    return all ? kExitOk : kExitCrossCheck;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{kDescription, "gridsync"};
    app.require_subcommand(1);
    app.set_version_flag("--version", GRIDSYNC_VERSION);

    GlobalFlags flags;
    app.add_option("--grid", flags.grid, "Grid JSON file");
    app.add_option("--model", flags.model, "swing | turbine");
    app.add_option("--out", flags.out, "Output file (default stdout)");
    app.add_option("--seed", flags.seed, "Base random seed");
    app.add_option("--format", flags.format, "json | csv");

    CommonScenario scenario;
    std::string method = "closed_form";
    bool no_oracle = false;
    std::optional<double> dt;
    std::optional<double> t_end;

    auto* analyze_cmd = app.add_subcommand("analyze", "Closed-form metrics with cross-checks (JSON report)");
    analyze_cmd->fallthrough();
    analyze_cmd->add_option("--step", scenario.step, "bus=<id>,mag=<p.u.>");
    analyze_cmd->add_option("--sigma", scenario.sigma, "Disturbance covariance preset I | F | F2");
    analyze_cmd->add_option("--method", method, "closed_form | sylvester");
    analyze_cmd->add_flag("--no-oracle", no_oracle, "Skip the time-domain cross-check");
    analyze_cmd->add_option("--dt", dt, "Oracle step (s)");
    analyze_cmd->add_option("--t-end", t_end, "Oracle horizon (s)");

    bool true_params = false;
    int stride = 1;
    std::string metrics_path;
    auto* simulate_cmd = app.add_subcommand("simulate", "Time-domain oracle trace (CSV) and empirical metrics");
    simulate_cmd->fallthrough();
    simulate_cmd->add_option("--step", scenario.step, "bus=<id>,mag=<p.u.>");
    simulate_cmd->add_flag("--true-params", true_params, "Use raw bus parameters instead of the proportional fit");
    simulate_cmd->add_option("--dt", dt, "Integration step (s)");
    simulate_cmd->add_option("--t-end", t_end, "Horizon (s)");
    simulate_cmd->add_option("--stride", stride, "Write every n-th sample");
    simulate_cmd->add_option("--metrics", metrics_path, "Also write the metrics JSON here");

    std::vector<std::string> params;
    std::vector<std::string> ranges;
    std::string metric;
    auto* sweep_cmd = app.add_subcommand("sweep", "Parameter sweep of one metric (CSV)");
    sweep_cmd->fallthrough();
    sweep_cmd->add_option("--param", params, "m | d | r_inv | tau (repeat for a 2-D sweep)");
    sweep_cmd->add_option("--range", ranges, "lo:hi:steps, one per --param");
    sweep_cmd->add_option("--metric", metric, "sync_cost | mean_sync_cost | nadir | rocof | w_inf")->required();
    sweep_cmd->add_option("--step", scenario.step, "bus=<id>,mag=<p.u.>");
    sweep_cmd->add_option("--sigma", scenario.sigma, "I | F | F2 (mean_sync_cost, default F)");
    sweep_cmd->add_option("--method", method, "closed_form | sylvester");

    std::string schedule = "0,25,50,200,500";
    int seeds = 10;
    double omega_max = 10.0;
    auto* connectivity_cmd = app.add_subcommand("connectivity", "Random line additions vs proportional fit (CSV)");
    connectivity_cmd->fallthrough();
    connectivity_cmd->add_option("--step", scenario.step, "bus=<id>,mag=<p.u.>");
    connectivity_cmd->add_option("--k-schedule", schedule, "Ascending line counts, comma separated");
    connectivity_cmd->add_option("--seeds", seeds, "Random augmentations per k");
    connectivity_cmd->add_option("--omega-max", omega_max, "Upper frequency of the gap grid (rad/s)");

    auto* selftest_cmd = app.add_subcommand("selftest", "Closed form vs Sylvester and oracle consistency");
    selftest_cmd->fallthrough();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*analyze_cmd) return cmd_analyze(flags, scenario, method, no_oracle, dt, t_end, out, err);
        if (*simulate_cmd) {
            return cmd_simulate(flags, scenario, true_params, dt, t_end, stride, metrics_path, out, err);
        }
        if (*sweep_cmd) return cmd_sweep(flags, scenario, params, ranges, metric, method, out);
        if (*connectivity_cmd) return cmd_connectivity(flags, scenario, schedule, seeds, omega_max, out);
        if (*selftest_cmd) return cmd_selftest(flags, out);
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitValidation;
}

}  // namespace gridsync
