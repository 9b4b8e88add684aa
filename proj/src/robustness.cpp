#include "gridsync/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "gridsync/error.hpp"
#include "gridsync/oracle.hpp"
#include "gridsync/synccost.hpp"
#include "parallel.hpp"

namespace gridsync {

namespace {

Eigen::VectorXd inv_sqrt(const Eigen::VectorXd& f) { return f.cwiseSqrt().cwiseInverse(); }

std::string format_number(double value) {
    std::ostringstream out;
    out.precision(17);
    out << value;
    return out.str();
}

}  // namespace

Eigen::VectorXcd PerturbationModel::diagonal(Complex s) const {
    Eigen::VectorXcd p = delta.cast<Complex>() + s * delta_inertia.cast<Complex>();
    if (const auto* turbine = std::get_if<TurbineMachine>(&machine)) {
        const Complex k0 = turbine->r_inv / (turbine->tau * s + 1.0);
        for (int i = 0; i < size(); ++i) {
            p(i) += k0 - bus_r_inv(i) / (bus_tau(i) * s + 1.0) / f(i);
        }
    }
    return p;
}

PerturbationModel perturbation_deltas(const Grid& grid, const ProportionalSystem& sys,
                                      const ModalBasis& basis) {
    const int n = sys.size();
    if (grid.size() != n || basis.size() != n) {
        throw Error(ErrorKind::DimensionMismatch, "perturbation_deltas: dimension mismatch");
    }
    PerturbationModel pert;
    pert.machine = sys.machine;
    pert.f = sys.f;
    pert.delta = sys.delta;
    pert.delta_inertia = sys.delta_inertia;
    if (model_kind(sys.machine) == ModelKind::Turbine) {
        pert.delta_k_dc = sys.delta_k_dc;
        pert.bus_r_inv.resize(n);
        pert.bus_tau.resize(n);
        for (int i = 0; i < n; ++i) {
            const auto& bus = grid.buses[static_cast<std::size_t>(i)];
            pert.bus_r_inv(i) = bus.r_inv.value_or(0.0);
            pert.bus_tau(i) = bus.tau.value_or(1.0);
        }
    }
    const Eigen::VectorXd p0 = pert.diagonal(Complex(0.0)).real();
    pert.delta_tilde_dc = basis.V.transpose() * p0.asDiagonal() * basis.V;

    const double scale = std::max(1.0, sys.f.cwiseProduct(p0).cwiseAbs().sum());
    if (std::abs(sys.f.dot(p0)) > 1e-9 * scale) {
        throw Error(ErrorKind::Numerical, "rating-weighted DC perturbation does not vanish");
    }
    return pert;
}

Eigen::VectorXcd modal_loop_gains(const ModalBasis& basis, const RepresentativeMachine& machine,
                                  Complex s) {
    const Complex g0 = eval_transfer(machine, s);
    Eigen::VectorXcd h(basis.size());
    h(0) = g0;
    for (int k = 1; k < basis.size(); ++k) {
        h(k) = s * g0 / (s + basis.lambdas(k) * g0);
    }
    return h;
}

Eigen::MatrixXcd nominal_transfer_eval(const ModalBasis& basis, const RepresentativeMachine& machine,
                                       Complex s) {
    const Eigen::MatrixXcd W = (inv_sqrt(basis.f).asDiagonal() * basis.V).cast<Complex>();
    return W * modal_loop_gains(basis, machine, s).asDiagonal() * W.transpose();
}

Eigen::MatrixXcd perturbed_transfer_eval(const ModalBasis& basis, const PerturbationModel& pert,
                                         Complex s) {
    const int n = basis.size();
    const Eigen::MatrixXcd W = (inv_sqrt(basis.f).asDiagonal() * basis.V).cast<Complex>();
    const Eigen::VectorXcd h = modal_loop_gains(basis, pert.machine, s);
    if (s == Complex(0.0)) {
        return W * h.asDiagonal() * W.transpose();
    }
    const Eigen::MatrixXcd Vc = basis.V.cast<Complex>();
    const Eigen::MatrixXcd delta_tilde = Vc.transpose() * pert.diagonal(s).asDiagonal() * Vc;
    const Eigen::MatrixXcd loop =
        Eigen::MatrixXcd::Identity(n, n) - h.asDiagonal() * delta_tilde;
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(loop);
    if (!(lu.rcond() > 1e-14)) {
        throw Error(ErrorKind::Numerical, "I - H(s) Delta~(s) is singular");
    }
    const Eigen::MatrixXcd inner = lu.solve(Eigen::MatrixXcd(h.asDiagonal()));
    return W * inner * W.transpose();
}

SteadyStateCheck perturbed_steady_state(const Grid& grid, ModelKind kind, const Eigen::VectorXd& u0) {
    const ProportionalSystem sys = extract_representative(grid, kind);
    if (u0.size() != sys.size()) {
        throw Error(ErrorKind::DimensionMismatch, "disturbance dimension does not match the grid");
    }
    const ModalBasis basis = modal_decompose(scaled_laplacian(build_laplacian(grid), sys.f), sys.f);
    const PerturbationModel pert = perturbation_deltas(grid, sys, basis);
    const int n = sys.size();

    Eigen::MatrixXd h0 = Eigen::MatrixXd::Zero(n, n);
    h0(0, 0) = 1.0 / dc_damping(sys.machine);
    const Eigen::MatrixXd& dt = pert.delta_tilde_dc;
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);

    SteadyStateCheck out;
    out.product_residual = (h0 * dt * h0).norm();
    const Eigen::MatrixXd inverse = (identity - h0 * dt).inverse();
    out.inverse_residual = (inverse - (identity + h0 * dt)).norm();
    out.per_bus = perturbed_transfer_eval(basis, pert, Complex(0.0)).real() * u0;
    out.value = u0.sum() / (sys.f.sum() * dc_damping(sys.machine));
    out.spread = (out.per_bus.array() - out.value).abs().maxCoeff();
    return out;
}

std::uint64_t task_seed(std::uint64_t base_seed, int index) {
    std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                      static_cast<std::uint32_t>(index)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

double frequency_gap(const ModalBasis& basis, const PerturbationModel& pert, const Eigen::VectorXd& u0,
                     double omega_max, int points) {
    if (!(omega_max > 1e-3) || points < 2) {
        throw Error(ErrorKind::InvalidParameter, "frequency gap needs omega_max > 1e-3 and >= 2 points");
    }
    const double ratio = u0.sum() / basis.f.sum();
    const Eigen::VectorXcd u = u0.cast<Complex>();
    const double lo = std::log10(1e-3);
    const double hi = std::log10(omega_max);
    double gap = 0.0;
    for (int i = 0; i < points; ++i) {
        const double omega = std::pow(10.0, lo + (hi - lo) * i / (points - 1));
        const Complex s(0.0, omega);
        const Eigen::VectorXcd response = perturbed_transfer_eval(basis, pert, s) * u;
        const Complex reference = eval_transfer(pert.machine, s) * ratio;
        gap = std::max(gap, (response.array() - reference).matrix().norm());
    }
    return gap;
}

std::vector<ConnectivityRow> connectivity_gap(const Grid& grid, ModelKind kind, const Eigen::VectorXd& u0,
                                              const ConnectivityOptions& options) {
    if (options.seeds < 1) {
        throw Error(ErrorKind::InvalidParameter, "connectivity needs at least one seed");
    }
    if (options.k_schedule.empty()) {
        throw Error(ErrorKind::InvalidParameter, "empty k schedule");
    }
    for (std::size_t i = 0; i < options.k_schedule.size(); ++i) {
        if (options.k_schedule[i] < 0 || (i > 0 && options.k_schedule[i] <= options.k_schedule[i - 1])) {
            throw Error(ErrorKind::InvalidParameter, "k schedule must be nonnegative and strictly ascending");
        }
    }
    if (u0.size() != grid.size()) {
        throw Error(ErrorKind::DimensionMismatch, "disturbance dimension does not match the grid");
    }
    const ProportionalSystem sys = extract_representative(grid, kind);

    auto run = [&](int k, int seed_index) {
        ConnectivityRow row;
        row.k = k;
        row.seed = task_seed(options.base_seed, seed_index);
        const Grid augmented = add_random_lines(grid, k, row.seed);
        const ModalBasis basis =
            modal_decompose(scaled_laplacian(build_laplacian(augmented), sys.f), sys.f);
        const PerturbationModel pert = perturbation_deltas(augmented, sys, basis);
        row.lambda1 = basis.lambdas(1);
        row.freq_gap = frequency_gap(basis, pert, u0, options.omega_max, options.omega_points);
        row.cost_prop = sync_cost(basis, sys.machine, u0);

        const FullStateModel model = assemble_dynamics(augmented, kind);
        IntegrationOptions integration;
        integration.dt = std::min(1e-2, 0.1 * min_time_constant(model));
        integration.t_end = settling_horizon(model, options.settle_decades, 60.0);
        row.cost_true = oracle_l2_cost(model, u0, integration);
        row.rel_err = std::abs(row.cost_true - row.cost_prop) / row.cost_true;
        return row;
    };

    const auto& ks = options.k_schedule;
    const auto seeds = static_cast<std::size_t>(options.seeds);
    std::vector<ConnectivityRow> rows(ks.size() * seeds);
    detail::parallel_for(rows.size(), [&](std::size_t i) {
        rows[i] = run(ks[i / seeds], static_cast<int>(i % seeds));
    });
    return rows;
}

std::vector<ConnectivitySummary> summarize(const std::vector<ConnectivityRow>& rows) {
    std::map<int, std::pair<ConnectivitySummary, int>> groups;
    for (const auto& row : rows) {
        auto& [acc, count] = groups[row.k];
        acc.k = row.k;
        acc.lambda1 += row.lambda1;
        acc.freq_gap += row.freq_gap;
        acc.cost_true += row.cost_true;
        acc.cost_prop += row.cost_prop;
        acc.rel_err += row.rel_err;
        ++count;
    }
    std::vector<ConnectivitySummary> out;
    for (auto& [k, entry] : groups) {
        auto [acc, count] = entry;
        const double c = count;
        acc.lambda1 /= c;
        acc.freq_gap /= c;
        acc.cost_true /= c;
        acc.cost_prop /= c;
        acc.rel_err /= c;
        out.push_back(acc);
    }
    return out;
}

std::string connectivity_csv(const std::vector<ConnectivityRow>& rows) {
    std::ostringstream out;
    out << "k,seed,lambda1,freq_gap,cost_true,cost_prop,rel_err\n";
    for (const auto& row : rows) {
        out << row.k << ',' << row.seed << ',' << format_number(row.lambda1) << ','
            << format_number(row.freq_gap) << ',' << format_number(row.cost_true) << ','
            << format_number(row.cost_prop) << ',' << format_number(row.rel_err) << '\n';
    }
    for (const auto& s : summarize(rows)) {
        out << s.k << ",mean," << format_number(s.lambda1) << ',' << format_number(s.freq_gap) << ','
            << format_number(s.cost_true) << ',' << format_number(s.cost_prop) << ','
            << format_number(s.rel_err) << '\n';
    }
    return out.str();
}

}  // namespace gridsync
