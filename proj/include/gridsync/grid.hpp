#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace gridsync {

inline constexpr const char* kGridSchema = "gridsync-grid/1";

/// Generator bus of a Kron-reduced network. Units are system per-unit,
/// inertia in p.u.*s and the turbine time constant in seconds.
struct Bus {
    int id = 0;
    double m = 0.0;
    double d = 0.0;
    std::optional<double> r_inv;
    std::optional<double> tau;
    /// Optional nameplate rating; overrides the inertia-derived rating.
    std::optional<double> f;

    [[nodiscard]] bool has_turbine() const { return r_inv.has_value() && tau.has_value(); }
};

/// Undirected line carrying its Laplacian weight |V_i||V_j| b_ij cos(theta_i - theta_j).
struct Line {
    int from = 0;
    int to = 0;
    double weight = 0.0;
};

struct Grid {
    std::string name;
    std::string per_unit_base;
    std::vector<Bus> buses;
    std::vector<Line> lines;

    [[nodiscard]] int size() const { return static_cast<int>(buses.size()); }
};

/// Edge weight from raw line data. Throws when the angle difference leaves
/// (-pi/2, pi/2) or any factor is nonpositive.
double line_weight_from_raw(double b, double v_from, double v_to, double theta0_diff);

Grid grid_from_json(const nlohmann::json& doc);
nlohmann::json grid_to_json(const Grid& grid);
Grid load_grid(const std::filesystem::path& path);

/// Enforces every Grid invariant; throws gridsync::Error naming the offender.
void validate_grid(const Grid& grid);
[[nodiscard]] bool is_connected(int n, const std::vector<Line>& lines);

Eigen::MatrixXd build_laplacian(const Grid& grid);

/// F^{-1/2} L F^{-1/2}.
Eigen::MatrixXd scaled_laplacian(const Eigen::MatrixXd& laplacian, const Eigen::VectorXd& f);

/// Adds k lines between non-adjacent pairs, drawn without replacement, with
/// weights uniform in [min, max] of the existing weights. For a fixed seed the
/// lines added for k are a prefix of those added for any larger k.
Grid add_random_lines(const Grid& grid, int k, std::uint64_t seed);

}  // namespace gridsync
