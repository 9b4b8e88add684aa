#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "gridsync/grid.hpp"
#include "gridsync/machine.hpp"
#include "gridsync/oracle.hpp"
#include "gridsync/spectral.hpp"
#include "gridsync/synccost.hpp"

namespace gridsync {

inline constexpr const char* kReportSchema = "gridsync-report/1";

struct StepSpec {
    int bus_id = 0;
    double magnitude = 0.0;
};

struct SigmaSpec {
    std::string label;  // "I", "F" or "F2"
    DisturbanceCovariance covariance;
};

/// Accepts "I", "F", "F2".
SigmaSpec parse_sigma(const std::string& text);

/// Index of the bus carrying `id`; throws InvalidParameter when absent.
int bus_index(const Grid& grid, int id);
Eigen::VectorXd step_vector(const Grid& grid, const StepSpec& step);

struct Tolerances {
    double sylvester = 1e-9;
    double w_inf = 1e-5;
    double nadir = 1e-4;
    double rocof = 5e-3;
    double sync_cost = 1e-2;
};

struct AnalyzeOptions {
    ModelKind kind = ModelKind::Swing;
    std::optional<StepSpec> step;
    std::optional<SigmaSpec> sigma;
    InnerProductMethod method = InnerProductMethod::ClosedForm;
    bool oracle = true;
    std::optional<double> dt;
    std::optional<double> t_end;
    std::uint64_t seed = 0;
    /// The oracle mean cost needs one simulation per bus.
    int oracle_mean_cost_max_buses = 12;
    Tolerances tolerances;
};

struct AnalysisResult {
    nlohmann::json report;
    bool cross_checks_passed = true;
};

/// Closed-form metrics of the proportional fit, cross-checked against the
/// Sylvester path and against the oracle run on the proportional grid.
AnalysisResult analyze(const Grid& grid, const AnalyzeOptions& options);

/// dt defaults to min(1e-3, 0.1 x min time constant); t_end covers 8 decades
/// of the slowest mode and at least max(60, 20 m / d).
IntegrationOptions oracle_integration_options(const FullStateModel& model,
                                              const RepresentativeMachine& machine,
                                              std::optional<double> dt, std::optional<double> t_end);

nlohmann::json metrics_json(const EmpiricalMetrics& metrics);

/// Stable text form: two-space indent, trailing newline.
std::string dump_json(const nlohmann::json& doc);

}  // namespace gridsync
