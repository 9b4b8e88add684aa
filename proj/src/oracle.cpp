#include "gridsync/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gridsync/error.hpp"

namespace gridsync {

FullStateModel assemble_dynamics(const Grid& grid, ModelKind kind) {
    validate_grid(grid);
    FullStateModel model;
    model.kind = kind;
    model.n = grid.size();
    const int n = model.n;
    model.laplacian = build_laplacian(grid);
    model.m.resize(n);
    model.d.resize(n);
    if (kind == ModelKind::Turbine) {
        model.r_inv.resize(n);
        model.tau.resize(n);
    }
    for (int i = 0; i < n; ++i) {
        const auto& bus = grid.buses[static_cast<std::size_t>(i)];
        model.m(i) = bus.m;
        model.d(i) = bus.d;
        if (kind == ModelKind::Turbine) {
            if (!bus.has_turbine()) {
                throw Error(ErrorKind::MissingField,
                            "bus " + std::to_string(bus.id) + ": turbine model needs r_inv and tau");
            }
            model.r_inv(i) = *bus.r_inv;
            model.tau(i) = *bus.tau;
        }
    }

    const int dim = model.state_dim();
    const Eigen::VectorXd inv_m = model.m.cwiseInverse();
    model.A = Eigen::MatrixXd::Zero(dim, dim);
    model.A.block(0, n, n, n) = Eigen::MatrixXd::Identity(n, n);
    model.A.block(n, 0, n, n) = -(inv_m.asDiagonal() * model.laplacian);
    model.A.block(n, n, n, n) = (-model.d.cwiseProduct(inv_m)).asDiagonal();
    if (kind == ModelKind::Turbine) {
        const Eigen::VectorXd inv_tau = model.tau.cwiseInverse();
        model.A.block(n, 2 * n, n, n) = inv_m.asDiagonal();
        model.A.block(2 * n, n, n, n) = (-model.r_inv.cwiseProduct(inv_tau)).asDiagonal();
        model.A.block(2 * n, 2 * n, n, n) = (-inv_tau).asDiagonal();
    }
    model.B = Eigen::MatrixXd::Zero(dim, n);
    model.B.block(n, 0, n, n) = inv_m.asDiagonal();
    model.C = Eigen::MatrixXd::Zero(n, dim);
    model.C.block(0, n, n, n) = Eigen::MatrixXd::Identity(n, n);
    return model;
}

void FullStateModel::derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                Eigen::VectorXd& dx) const {
    const auto theta = x.segment(0, n);
    const auto w = x.segment(n, n);
    dx.resize(x.size());
    dx.segment(0, n) = w;
    Eigen::VectorXd accel = u - d.cwiseProduct(w) - laplacian * theta;
    if (kind == ModelKind::Turbine) {
        const auto q = x.segment(2 * n, n);
        accel += q;
        dx.segment(2 * n, n) = (-(r_inv.cwiseProduct(w)) - q).cwiseQuotient(tau);
    }
    dx.segment(n, n) = accel.cwiseQuotient(m);
}

Eigen::MatrixXcd FullStateModel::frequency_response(Complex s) const {
    const int dim = state_dim();
    const Eigen::MatrixXcd lhs = s * Eigen::MatrixXcd::Identity(dim, dim) - A.cast<Complex>();
    return C.cast<Complex>() * lhs.partialPivLu().solve(B.cast<Complex>());
}

Eigen::VectorXcd model_eigenvalues(const FullStateModel& model) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(model.A, false);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::Numerical, "eigenvalues of the full state model did not converge");
    }
    return solver.eigenvalues();
}

double min_time_constant(const FullStateModel& model) {
    return 1.0 / model_eigenvalues(model).cwiseAbs().maxCoeff();
}

double slowest_decay_rate(const FullStateModel& model) {
    const Eigen::VectorXcd eig = model_eigenvalues(model);
    const double scale = eig.cwiseAbs().maxCoeff();
    double slowest = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
        const double re = eig(i).real();
        if (re < -1e-9 * scale) slowest = std::min(slowest, -re);
    }
    return slowest;
}

double settling_horizon(const FullStateModel& model, double decades, double minimum) {
    return std::max(minimum, decades * std::log(10.0) / slowest_decay_rate(model));
}

std::vector<std::string> integrate(const FullStateModel& model, const Eigen::VectorXd& u0,
                                   const IntegrationOptions& options, const StateVisitor& visit) {
    if (!(options.dt > 0.0) || !(options.t_end > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "integration needs dt > 0 and t_end > 0");
    }
    if (u0.size() != model.n) {
        throw Error(ErrorKind::DimensionMismatch, "disturbance dimension does not match the grid");
    }
    std::vector<std::string> warnings;
    const double tc = min_time_constant(model);
    if (options.dt > 0.1 * tc) {
        std::ostringstream msg;
        msg << "dt exceeds 0.1× min time constant (dt = " << options.dt << " s, min time constant = "
            << tc << " s)";
        warnings.push_back(msg.str());
    }
    const int dim = model.state_dim();
    Eigen::VectorXd x = options.initial_state.value_or(Eigen::VectorXd::Zero(dim));
    if (x.size() != dim) {
        throw Error(ErrorKind::DimensionMismatch, "initial state has the wrong dimension");
    }
    const double h = options.dt;
    const auto steps = static_cast<long long>(std::llround(options.t_end / h));
    const int stride = std::max(1, options.record_every);
    Eigen::VectorXd k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    for (long long step = 0;; ++step) {
        if (step % stride == 0 || step == steps) {
            visit(static_cast<double>(step) * h, x);
        }
        if (step == steps) break;
        model.derivative(x, u0, k1);
        tmp = x + 0.5 * h * k1;
        model.derivative(tmp, u0, k2);
        tmp = x + 0.5 * h * k2;
        model.derivative(tmp, u0, k3);
        tmp = x + h * k3;
        model.derivative(tmp, u0, k4);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (step % 1024 == 0 && !x.allFinite()) {
            throw Error(ErrorKind::Numerical, "oracle state became non-finite");
        }
    }
    return warnings;
}

StateTrace integrate_step_response(const FullStateModel& model, const Eigen::VectorXd& u0,
                                   const IntegrationOptions& options) {
    StateTrace trace;
    std::vector<Eigen::VectorXd> samples;
    trace.warnings = integrate(model, u0, options, [&](double t, const Eigen::VectorXd& x) {
        trace.t.push_back(t);
        samples.push_back(x);
    });
    trace.states.resize(model.state_dim(), static_cast<Eigen::Index>(samples.size()));
    for (std::size_t k = 0; k < samples.size(); ++k) {
        trace.states.col(static_cast<Eigen::Index>(k)) = samples[k];
    }
    return trace;
}

EmpiricalMetrics empirical_metrics(const FullStateModel& model, const StateTrace& trace,
                                   double decay_rate) {
    const int n = model.n;
    const auto samples = static_cast<Eigen::Index>(trace.t.size());
    if (samples < 2) {
        throw Error(ErrorKind::InvalidParameter, "empirical metrics need at least two samples");
    }
    EmpiricalMetrics out;
    out.t = trace.t;
    out.warnings = trace.warnings;
    out.coi.resize(static_cast<std::size_t>(samples));
    out.wtilde.resize(n, samples);
    const double total_m = model.m.sum();
    std::vector<double> energy(static_cast<std::size_t>(samples));
    for (Eigen::Index k = 0; k < samples; ++k) {
        const auto w = trace.states.col(k).segment(n, n);
        const double coi = model.m.dot(w) / total_m;
        out.coi[static_cast<std::size_t>(k)] = coi;
        out.wtilde.col(k) = w.array() - coi;
        energy[static_cast<std::size_t>(k)] = out.wtilde.col(k).squaredNorm();
    }
    double integral = 0.0;
    for (std::size_t k = 1; k < energy.size(); ++k) {
        integral += 0.5 * (out.t[k] - out.t[k - 1]) * (energy[k] + energy[k - 1]);
    }
    out.l2_cost = std::sqrt(integral);
    if (decay_rate > 0.0) {
        out.l2_tail_estimate = energy.back() / (2.0 * decay_rate);
    }
    for (std::size_t k = 0; k < out.coi.size(); ++k) {
        if (std::abs(out.coi[k]) > out.nadir) {
            out.nadir = std::abs(out.coi[k]);
            out.nadir_time = out.t[k];
        }
        if (k > 0) {
            const double slope = (out.coi[k] - out.coi[k - 1]) / (out.t[k] - out.t[k - 1]);
            out.rocof = std::max(out.rocof, std::abs(slope));
        }
    }
    out.steady_state = out.coi.back();
    out.terminal_frequencies = trace.states.col(samples - 1).segment(n, n);

    const auto tail_start = static_cast<std::size_t>(0.9 * static_cast<double>(samples));
    double band = 0.0;
    for (std::size_t k = tail_start; k < out.coi.size(); ++k) {
        band = std::max(band, std::abs(out.coi[k] - out.steady_state));
    }
    out.settled = band <= 1e-6 * std::max(out.nadir, std::numeric_limits<double>::min());
    if (!out.settled) {
        std::ostringstream msg;
        msg << "COI not settled: last 10% of samples vary by " << band;
        out.warnings.push_back(msg.str());
    }
    return out;
}

EmpiricalMetrics streaming_metrics(const FullStateModel& model, const Eigen::VectorXd& u0,
                                   const IntegrationOptions& options, double decay_rate,
                                   const StateVisitor& visit) {
    const int n = model.n;
    const double total_m = model.m.sum();
    const double tail_start = 0.9 * options.t_end;
    EmpiricalMetrics out;
    double integral = 0.0;
    double prev_t = 0.0;
    double prev_e = 0.0;
    double prev_coi = 0.0;
    double tail_min = std::numeric_limits<double>::infinity();
    double tail_max = -std::numeric_limits<double>::infinity();
    bool first = true;
    out.warnings = integrate(model, u0, options, [&](double t, const Eigen::VectorXd& x) {
        const auto w = x.segment(n, n);
        const double coi = model.m.dot(w) / total_m;
        const double e = (w.array() - coi).matrix().squaredNorm();
        if (!first) {
            integral += 0.5 * (t - prev_t) * (e + prev_e);
            out.rocof = std::max(out.rocof, std::abs((coi - prev_coi) / (t - prev_t)));
        }
        if (std::abs(coi) > out.nadir) {
            out.nadir = std::abs(coi);
            out.nadir_time = t;
        }
        if (t >= tail_start) {
            tail_min = std::min(tail_min, coi);
            tail_max = std::max(tail_max, coi);
        }
        first = false;
        prev_t = t;
        prev_e = e;
        prev_coi = coi;
        out.terminal_frequencies = w;
        if (visit) visit(t, x);
    });
    out.l2_cost = std::sqrt(integral);
    if (decay_rate > 0.0) out.l2_tail_estimate = prev_e / (2.0 * decay_rate);
    out.steady_state = prev_coi;
    const double band = std::max(tail_max - prev_coi, prev_coi - tail_min);
    out.settled = band <= 1e-6 * std::max(out.nadir, std::numeric_limits<double>::min());
    if (!out.settled) {
        std::ostringstream msg;
        msg << "COI not settled: last 10% of samples vary by " << band;
        out.warnings.push_back(msg.str());
    }
    return out;
}

double oracle_l2_cost(const FullStateModel& model, const Eigen::VectorXd& u0,
                      const IntegrationOptions& options) {
    return streaming_metrics(model, u0, options).l2_cost;
}

double oracle_initial_rocof(const FullStateModel& model, const Eigen::VectorXd& u0, double h) {
    const int n = model.n;
    const double total_m = model.m.sum();
    auto coi_after = [&](double step) {
        IntegrationOptions opts;
        opts.dt = step;
        opts.t_end = step;
        double coi = 0.0;
        integrate(model, u0, opts, [&](double, const Eigen::VectorXd& x) {
            coi = model.m.dot(x.segment(n, n)) / total_m;
        });
        return coi;
    };
    const double coarse = coi_after(h) / h;
    const double fine = coi_after(h / 4.0) / (h / 4.0);
    return std::abs((4.0 * fine - coarse) / 3.0);
}

}  // namespace gridsync
