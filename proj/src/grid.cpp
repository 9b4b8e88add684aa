#include "gridsync/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <utility>

#include "gridsync/error.hpp"
#include "random_util.hpp"

namespace gridsync {

namespace {

using nlohmann::json;

std::string bus_label(const Bus& bus) { return "bus " + std::to_string(bus.id); }

double require_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) {
        throw Error(ErrorKind::MissingField, where + ": missing field '" + key + "'");
    }
    const auto& value = obj.at(key);
    if (!value.is_number()) {
        throw Error(ErrorKind::Parse, where + ": field '" + key + "' is not a number");
    }
    return value.get<double>();
}

std::optional<double> optional_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || obj.at(key).is_null()) {
        return std::nullopt;
    }
    return require_number(obj, key, where);
}

void check_positive(double value, const char* field, const std::string& where) {
    if (!std::isfinite(value) || value <= 0.0) {
        std::ostringstream msg;
        msg << where << ": nonpositive " << field << " (" << value << ")";
        throw Error(ErrorKind::InvalidParameter, msg.str());
    }
}

}  // namespace

double line_weight_from_raw(double b, double v_from, double v_to, double theta0_diff) {
    if (!(v_from > 0.0) || !(v_to > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "nonpositive voltage magnitude");
    }
    if (!(std::abs(theta0_diff) < std::numbers::pi / 2.0)) {
        throw Error(ErrorKind::InvalidParameter,
                    "equilibrium angle difference outside (-pi/2, pi/2)");
    }
    return v_from * v_to * b * std::cos(theta0_diff);
}

bool is_connected(int n, const std::vector<Line>& lines) {
    if (n <= 0) {
        return false;
    }
    std::vector<int> parent(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        parent[static_cast<std::size_t>(i)] = i;
    }
    auto find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            auto& p = parent[static_cast<std::size_t>(x)];
            p = parent[static_cast<std::size_t>(p)];
            x = p;
        }
        return x;
    };
    int components = n;
    for (const auto& line : lines) {
        const int a = find(line.from);
        const int b = find(line.to);
        if (a != b) {
            parent[static_cast<std::size_t>(a)] = b;
            --components;
        }
    }
    return components == 1;
}

void validate_grid(const Grid& grid) {
    const int n = grid.size();
    if (n < 2) {
        throw Error(ErrorKind::InvalidParameter, "grid needs at least 2 buses, got " + std::to_string(n));
    }
    for (const auto& bus : grid.buses) {
        const auto where = bus_label(bus);
        check_positive(bus.m, "inertia m", where);
        check_positive(bus.d, "damping d", where);
        if (bus.r_inv && (!std::isfinite(*bus.r_inv) || *bus.r_inv < 0.0)) {
            throw Error(ErrorKind::InvalidParameter, where + ": negative inverse droop r_inv");
        }
        if (bus.tau) {
            check_positive(*bus.tau, "turbine time constant tau", where);
        }
        if (bus.f) {
            check_positive(*bus.f, "rating f", where);
        }
    }
    std::set<std::pair<int, int>> seen;
    for (const auto& line : grid.lines) {
        const std::string where = "line " + std::to_string(line.from) + "-" + std::to_string(line.to);
        if (line.from < 0 || line.from >= n || line.to < 0 || line.to >= n) {
            throw Error(ErrorKind::InvalidParameter, where + ": bus index out of range");
        }
        if (line.from == line.to) {
            throw Error(ErrorKind::InvalidParameter, where + ": self loop");
        }
        if (!std::isfinite(line.weight) || line.weight <= 0.0) {
            std::ostringstream msg;
            msg << where << ": nonpositive line weight (" << line.weight << ")";
            throw Error(ErrorKind::InvalidParameter, msg.str());
        }
        const auto key = std::minmax(line.from, line.to);
        if (!seen.insert(key).second) {
            throw Error(ErrorKind::DuplicateLine, where + ": duplicate line");
        }
    }
    if (!is_connected(n, grid.lines)) {
        throw Error(ErrorKind::Disconnected, "grid '" + grid.name + "' is disconnected");
    }
}

Grid grid_from_json(const json& doc) {
    if (!doc.is_object()) {
        throw Error(ErrorKind::Parse, "grid document must be a JSON object");
    }
    if (doc.contains("schema") && doc.at("schema") != kGridSchema) {
        throw Error(ErrorKind::Parse, "unsupported grid schema " + doc.at("schema").dump());
    }
    if (!doc.contains("buses") || !doc.at("buses").is_array()) {
        throw Error(ErrorKind::Parse, "grid: missing 'buses' array");
    }
    if (!doc.contains("lines") || !doc.at("lines").is_array()) {
        throw Error(ErrorKind::Parse, "grid: missing 'lines' array");
    }

    Grid grid;
    grid.name = doc.value("name", std::string{"unnamed"});
    grid.per_unit_base = doc.value("per_unit_base", std::string{});

    std::map<int, int> index_of_id;
    int position = 0;
    for (const auto& entry : doc.at("buses")) {
        if (!entry.is_object()) {
            throw Error(ErrorKind::Parse, "bus entry " + std::to_string(position) + " is not an object");
        }
        Bus bus;
        bus.id = entry.contains("id") ? entry.at("id").get<int>() : position;
        const auto where = bus_label(bus);
        if (!index_of_id.emplace(bus.id, position).second) {
            throw Error(ErrorKind::Parse, where + ": duplicate bus id");
        }
        bus.m = require_number(entry, "m", where);
        bus.d = require_number(entry, "d", where);
        bus.r_inv = optional_number(entry, "r_inv", where);
        bus.tau = optional_number(entry, "tau", where);
        bus.f = optional_number(entry, "f", where);
        grid.buses.push_back(bus);
        ++position;
    }

    auto resolve = [&](const json& entry, const char* key, const std::string& where) {
        const int id = static_cast<int>(require_number(entry, key, where));
        const auto it = index_of_id.find(id);
        if (it == index_of_id.end()) {
            throw Error(ErrorKind::Parse, where + ": unknown bus id " + std::to_string(id));
        }
        return it->second;
    };

    int line_no = 0;
    for (const auto& entry : doc.at("lines")) {
        const std::string where = "line " + std::to_string(line_no++);
        if (!entry.is_object()) {
            throw Error(ErrorKind::Parse, where + " is not an object");
        }
        Line line;
        line.from = resolve(entry, "from", where);
        line.to = resolve(entry, "to", where);
        if (entry.contains("weight")) {
            line.weight = require_number(entry, "weight", where);
        } else {
            line.weight = line_weight_from_raw(require_number(entry, "b", where),
                                               require_number(entry, "v_from", where),
                                               require_number(entry, "v_to", where),
                                               require_number(entry, "theta0_diff", where));
        }
        grid.lines.push_back(line);
    }
    validate_grid(grid);
    return grid;
}

json grid_to_json(const Grid& grid) {
    json buses = json::array();
    for (const auto& bus : grid.buses) {
        json b = {{"id", bus.id}, {"m", bus.m}, {"d", bus.d}};
        if (bus.r_inv) b["r_inv"] = *bus.r_inv;
        if (bus.tau) b["tau"] = *bus.tau;
        if (bus.f) b["f"] = *bus.f;
        buses.push_back(std::move(b));
    }
    json lines = json::array();
    for (const auto& line : grid.lines) {
        lines.push_back({{"from", grid.buses[static_cast<std::size_t>(line.from)].id},
                         {"to", grid.buses[static_cast<std::size_t>(line.to)].id},
                         {"weight", line.weight}});
    }
    return {{"schema", kGridSchema},
            {"name", grid.name},
            {"per_unit_base", grid.per_unit_base},
            {"buses", buses},
            {"lines", lines}};
}

Grid load_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Parse, "cannot open grid file " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    } catch (const json::type_error& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
    try {
        return grid_from_json(doc);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
}

Eigen::MatrixXd build_laplacian(const Grid& grid) {
    const int n = grid.size();
    Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(n, n);
    for (const auto& line : grid.lines) {
        laplacian(line.from, line.to) -= line.weight;
        laplacian(line.to, line.from) -= line.weight;
    }
    // Diagonal as negated off-diagonal row sums keeps L*1 = 0 structurally.
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j != i) sum += laplacian(i, j);
        }
        laplacian(i, i) = -sum;
    }
    return laplacian;
}

Eigen::MatrixXd scaled_laplacian(const Eigen::MatrixXd& laplacian, const Eigen::VectorXd& f) {
    const auto n = laplacian.rows();
    if (laplacian.cols() != n || f.size() != n) {
        throw Error(ErrorKind::DimensionMismatch, "scaled_laplacian: dimension mismatch");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(f(i) > 0.0)) {
            throw Error(ErrorKind::InvalidParameter,
                        "bus " + std::to_string(i) + ": nonpositive rating f");
        }
    }
    const Eigen::VectorXd inv_sqrt = f.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd scaled = inv_sqrt.asDiagonal() * laplacian * inv_sqrt.asDiagonal();
    // Exact symmetry; the two products above round independently.
    return 0.5 * (scaled + scaled.transpose());
}

Grid add_random_lines(const Grid& grid, int k, std::uint64_t seed) {
    if (k < 0) {
        throw Error(ErrorKind::InvalidParameter, "add_random_lines: negative count");
    }
    if (k == 0) {
        return grid;
    }
    const int n = grid.size();
    std::set<std::pair<int, int>> present;
    double w_min = std::numeric_limits<double>::infinity();
    double w_max = -std::numeric_limits<double>::infinity();
    for (const auto& line : grid.lines) {
        present.insert(std::minmax(line.from, line.to));
        w_min = std::min(w_min, line.weight);
        w_max = std::max(w_max, line.weight);
    }
    std::vector<std::pair<int, int>> absent;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (!present.contains({i, j})) absent.emplace_back(i, j);
        }
    }
    if (static_cast<std::size_t>(k) > absent.size()) {
        throw Error(ErrorKind::Saturation, "add_random_lines: requested " + std::to_string(k) +
                                               " lines but only " + std::to_string(absent.size()) +
                                               " bus pairs are unconnected");
    }

    std::mt19937_64 gen(seed);
    detail::shuffle(absent, gen);

    Grid out = grid;
    for (int i = 0; i < k; ++i) {
        const auto [a, b] = absent[static_cast<std::size_t>(i)];
        const double w = w_min + (w_max - w_min) * detail::uniform01(gen);
        out.lines.push_back({a, b, w});
    }
    return out;
}

}  // namespace gridsync
