#include "piezoloc/lattice.hpp"

#include "piezoloc/errors.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace piezoloc {
namespace {

constexpr double kTileTolerance = 1e-9;

std::size_t tile_count(double length, double spacing, const char* side) {
    const double ratio = length / spacing;
    const double snapped = std::round(ratio);
    if (snapped < 1.0 || std::abs(ratio - snapped) > kTileTolerance * std::max(1.0, ratio)) {
        throw ConfigError(std::string("lattice: node spacing does not tile the sensor ") + side);
    }
    return static_cast<std::size_t>(snapped);
}

double profile(StrainProfile kind, double u) {
    switch (kind) {
        case StrainProfile::gaussian:
            return std::exp(-0.5 * u * u);
        case StrainProfile::parabolic_cap:
            return std::max(0.0, 1.0 - u * u);
    }
    return 0.0;
}

void check_solvable(const LatticeGraph& graph) {
    const std::size_t n = graph.nodes.size();
    if (n == 0) {
        throw SolverError("resistance solve: empty graph");
    }
    std::vector<std::vector<std::size_t>> adjacency(n);
    for (const Edge& e : graph.edges) {
        if (e.u >= n || e.v >= n) {
            throw SolverError("resistance solve: edge references a missing node");
        }
        if (!(e.conductance > 0.0) || !std::isfinite(e.conductance)) {
            throw SolverError("resistance solve: non-positive edge conductance");
        }
        adjacency[e.u].push_back(e.v);
        adjacency[e.v].push_back(e.u);
    }
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t v : adjacency[u]) {
            if (!seen[v]) {
                seen[v] = 1;
                ++reached;
                stack.push_back(v);
            }
        }
    }
    if (reached != n) {
        throw SolverError("resistance solve: graph is disconnected (singular Laplacian)");
    }
}

// Factorises the Laplacian with `ground` removed and returns, for each
// source node, the potential at that node under unit current injection.
std::vector<double> grounded_potentials(const LatticeGraph& graph, std::size_t ground,
                                        std::span<const std::size_t> sources) {
    const std::size_t n = graph.nodes.size();
    auto reduced = [ground](std::size_t i) -> Eigen::Index {
        return static_cast<Eigen::Index>(i < ground ? i : i - 1);
    };
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(graph.edges.size() * 4);
    for (const Edge& e : graph.edges) {
        const double g = e.conductance;
        if (e.u != ground) triplets.emplace_back(reduced(e.u), reduced(e.u), g);
        if (e.v != ground) triplets.emplace_back(reduced(e.v), reduced(e.v), g);
        if (e.u != ground && e.v != ground) {
            triplets.emplace_back(reduced(e.u), reduced(e.v), -g);
            triplets.emplace_back(reduced(e.v), reduced(e.u), -g);
        }
    }
    const auto dim = static_cast<Eigen::Index>(n - 1);
    Eigen::SparseMatrix<double> laplacian(dim, dim);
    laplacian.setFromTriplets(triplets.begin(), triplets.end());

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(laplacian);
    if (solver.info() != Eigen::Success) {
        throw SolverError("resistance solve: factorisation failed");
    }
    std::vector<double> out;
    out.reserve(sources.size());
    for (std::size_t source : sources) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
        rhs(reduced(source)) = 1.0;
        const Eigen::VectorXd potential = solver.solve(rhs);
        if (solver.info() != Eigen::Success || !std::isfinite(potential(reduced(source)))) {
            throw SolverError("resistance solve: back-substitution failed");
        }
        out.push_back(potential(reduced(source)));
    }
    return out;
}

} // namespace

void validate(const LatticeModel& model) {
    if (!(model.node_spacing > 0.0) || !std::isfinite(model.node_spacing)) {
        throw ConfigError("lattice: node_spacing must be positive");
    }
    tile_count(model.geometry.width(), model.node_spacing, "width");
    tile_count(model.geometry.height(), model.node_spacing, "height");
    if (model.base_conductance && !(*model.base_conductance > 0.0)) {
        throw ConfigError("lattice: base_conductance must be positive");
    }
    if (!(model.rest_band.first > 0.0 && model.rest_band.second > model.rest_band.first)) {
        throw ConfigError("lattice: rest band must satisfy 0 < low < high");
    }
    if (!(model.indenter_radius > 0.0)) {
        throw ConfigError("lattice: indenter_radius must be positive");
    }
    if (!std::isfinite(model.piezo_coefficient)) {
        throw ConfigError("lattice: piezo_coefficient must be finite");
    }
    // Mean endpoint strain is bounded by 1 at depth == thickness.
    if (!(1.0 + std::min(model.piezo_coefficient, 0.0) > 0.0)) {
        throw ConfigError("lattice: piezo_coefficient would drive edge conductance to zero at full depth");
    }
}

LatticeGraph build_lattice(const LatticeModel& model) {
    validate(model);
    const std::size_t nx = tile_count(model.geometry.width(), model.node_spacing, "width") + 1;
    const std::size_t ny = tile_count(model.geometry.height(), model.node_spacing, "height") + 1;
    const double g = model.base_conductance.value_or(1.0);

    LatticeGraph graph;
    graph.columns = nx;
    graph.rows = ny;
    graph.nodes.reserve(nx * ny);
    const double dx = model.geometry.width() / static_cast<double>(nx - 1);
    const double dy = model.geometry.height() / static_cast<double>(ny - 1);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            graph.nodes.push_back({static_cast<double>(i) * dx, static_cast<double>(j) * dy});
        }
    }
    graph.edges.reserve(ny * (nx - 1) + nx * (ny - 1));
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            graph.edges.push_back({j * nx + i, j * nx + i + 1, g});
        }
    }
    for (std::size_t j = 0; j + 1 < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            graph.edges.push_back({j * nx + i, (j + 1) * nx + i, g});
        }
    }
    for (Point2 e : model.geometry.electrodes()) {
        std::size_t best = 0;
        double best_d = distance(e, graph.nodes[0]);
        for (std::size_t k = 1; k < graph.nodes.size(); ++k) {
            const double d = distance(e, graph.nodes[k]);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        graph.electrode_nodes.push_back(best);
    }
    return graph;
}

double contact_radius(const LatticeModel& model, double depth) {
    const double r = model.indenter_radius;
    const double footprint = std::sqrt(std::max(0.0, 2.0 * r * depth - depth * depth));
    return std::max(footprint, model.node_spacing);
}

double strain_at(const LatticeModel& model, const Indentation& ind, Point2 p) {
    if (ind.depth <= 0.0) {
        return 0.0;
    }
    const double a = contact_radius(model, ind.depth);
    const double rho = distance(p, ind.location);
    return (ind.depth / model.geometry.thickness()) * profile(model.strain_profile, rho / a);
}

LatticeGraph apply_indentation(const LatticeGraph& graph, const LatticeModel& model, const Indentation& ind) {
    LatticeGraph out = graph;
    if (model.piezo_coefficient == 0.0 || ind.depth <= 0.0) {
        return out;
    }
    std::vector<double> strain(graph.nodes.size());
    for (std::size_t k = 0; k < graph.nodes.size(); ++k) {
        strain[k] = strain_at(model, ind, graph.nodes[k]);
    }
    for (Edge& e : out.edges) {
        const double mean = 0.5 * (strain[e.u] + strain[e.v]);
        if (mean == 0.0) {
            continue;
        }
        const double g = e.conductance / (1.0 + model.piezo_coefficient * mean);
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw ModelError("indentation drives an edge conductance non-positive");
        }
        e.conductance = g;
    }
    return out;
}

double node_resistance(const LatticeGraph& graph, std::size_t a, std::size_t b) {
    check_solvable(graph);
    if (a >= graph.nodes.size() || b >= graph.nodes.size()) {
        throw SolverError("resistance solve: node index out of range");
    }
    if (a == b) {
        return 0.0;
    }
    const std::size_t sources[] = {a};
    return grounded_potentials(graph, b, sources).front();
}

double pair_resistance(const LatticeGraph& graph, const ElectrodePair& pair) {
    if (pair.b() >= graph.electrode_nodes.size()) {
        throw SolverError("resistance solve: electrode index out of range");
    }
    return node_resistance(graph, graph.electrode_nodes[pair.a()], graph.electrode_nodes[pair.b()]);
}

std::vector<double> pair_resistances(const LatticeGraph& graph, std::span<const ElectrodePair> pairs) {
    check_solvable(graph);
    // One factorisation per distinct grounded electrode.
    std::map<std::size_t, std::vector<std::size_t>> by_ground;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (pairs[k].b() >= graph.electrode_nodes.size()) {
            throw SolverError("resistance solve: electrode index out of range");
        }
        by_ground[graph.electrode_nodes[pairs[k].b()]].push_back(k);
    }
    std::vector<double> out(pairs.size(), 0.0);
    for (const auto& [ground, members] : by_ground) {
        std::vector<std::size_t> sources;
        std::vector<std::size_t> targets;
        for (std::size_t k : members) {
            const std::size_t node = graph.electrode_nodes[pairs[k].a()];
            if (node != ground) {
                sources.push_back(node);
                targets.push_back(k);
            }
        }
        if (sources.empty()) {
            continue;
        }
        const std::vector<double> values = grounded_potentials(graph, ground, sources);
        for (std::size_t i = 0; i < targets.size(); ++i) {
            out[targets[i]] = values[i];
        }
    }
    return out;
}

ForwardModel::ForwardModel(LatticeModel model) : model_(std::move(model)) {
    validate(model_);
    pairs_ = enumerate_pairs(model_.geometry.electrode_count());
    if (!model_.base_conductance) {
        // Effective resistance scales as 1/g, so solve once at 1 S and rescale
        // to centre the rest resistances geometrically inside the band.
        const LatticeGraph unit = build_lattice(model_);
        const std::vector<double> r = pair_resistances(unit, pairs_);
        const auto [lo_it, hi_it] = std::minmax_element(r.begin(), r.end());
        const auto [band_lo, band_hi] = model_.rest_band;
        if (*lo_it <= 0.0) {
            throw ConfigError("lattice: two electrodes share a lattice node");
        }
        if (*hi_it / *lo_it > band_hi / band_lo) {
            throw ConfigError("lattice: rest resistances span more than the configured band");
        }
        model_.base_conductance = std::sqrt((*lo_it * *hi_it) / (band_lo * band_hi));
    }
    rest_ = build_lattice(model_);
    rest_resistances_ = pair_resistances(rest_, pairs_);
    for (double r : rest_resistances_) {
        if (!(r > 0.0)) {
            throw ConfigError("lattice: two electrodes share a lattice node");
        }
    }
}

std::vector<double> ForwardModel::indented_resistances(const Indentation& ind) const {
    validate(ind, model_.geometry);
    if (ind.depth <= 0.0 || model_.piezo_coefficient == 0.0) {
        return rest_resistances_;
    }
    return pair_resistances(apply_indentation(rest_, model_, ind), pairs_);
}

IndentationRecord ForwardModel::simulate(const Indentation& ind) const {
    const std::vector<double> loaded = indented_resistances(ind);
    std::vector<double> dr(loaded.size());
    for (std::size_t k = 0; k < loaded.size(); ++k) {
        dr[k] = loaded[k] - rest_resistances_[k];
    }
    return IndentationRecord(model_.geometry, ind, std::move(dr));
}

IndentationRecord simulate_record(const LatticeModel& model, const Indentation& ind) {
    return ForwardModel(model).simulate(ind);
}

LoadCurve::LoadCurve() : LoadCurve({{0.0, 0.0}, {1.0, 1.0}, {2.0, 3.0}, {3.0, 6.0}, {4.0, 10.0}, {5.0, 16.0}}) {}

LoadCurve::LoadCurve(std::vector<std::pair<double, double>> breakpoints) : breakpoints_(std::move(breakpoints)) {
    if (breakpoints_.size() < 2 || breakpoints_.front() != std::pair<double, double>{0.0, 0.0}) {
        throw ConfigError("load curve: needs at least two breakpoints starting at (0, 0)");
    }
    for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
        if (!(breakpoints_[k].first > breakpoints_[k - 1].first)) {
            throw ConfigError("load curve: depths must be strictly increasing");
        }
        if (breakpoints_[k].second < breakpoints_[k - 1].second) {
            throw ConfigError("load curve: loads must be non-decreasing");
        }
    }
}

double load_for_depth(const LoadCurve& curve, double depth) {
    const auto& bp = curve.breakpoints();
    if (!(depth >= 0.0) || depth > curve.max_depth()) {
        throw RangeError("load curve: depth outside [0, " + std::to_string(curve.max_depth()) + "] mm");
    }
    auto upper = std::lower_bound(bp.begin(), bp.end(), depth,
                                  [](const std::pair<double, double>& p, double d) { return p.first < d; });
    if (upper->first == depth) {
        return upper->second;
    }
    const auto lower = std::prev(upper);
    const double t = (depth - lower->first) / (upper->first - lower->first);
    return lower->second + t * (upper->second - lower->second);
}

} // namespace piezoloc
