#pragma once

// Resistor-lattice surrogate of the piezoresistive volume.
//
// The sample is discretised into a 4-connected grid of conductances. An
// indentation raises the local resistance according to a strain profile
// centred on the contact point; two-terminal resistances between electrode
// nodes are read off the weighted graph Laplacian.

#include "piezoloc/core.hpp"

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace piezoloc {

enum class StrainProfile { gaussian, parabolic_cap };

struct LatticeModel {
    SensorGeometry geometry;
    double node_spacing = 0.5;                 // mm
    std::optional<double> base_conductance;    // S per edge; derived from rest_band when empty
    std::pair<double, double> rest_band{10e3, 100e3};  // ohms
    double piezo_coefficient = 1.5;            // alpha
    double indenter_radius = 3.0;              // mm
    StrainProfile strain_profile = StrainProfile::gaussian;

    friend bool operator==(const LatticeModel&, const LatticeModel&) = default;
};

struct Edge {
    std::size_t u = 0;
    std::size_t v = 0;
    double conductance = 0.0;  // S
};

/// Weighted conductance graph. Built lattices are connected and strictly
/// positive; hand-assembled graphs are checked when solved.
struct LatticeGraph {
    std::vector<Point2> nodes;
    std::vector<Edge> edges;
    std::vector<std::size_t> electrode_nodes;
    std::size_t columns = 0;  // grid shape, 0 for non-grid graphs
    std::size_t rows = 0;
};

/// Throws ConfigError when the model violates its invariants (spacing does not
/// tile the rectangle, non-positive parameters, coupling that could drive an
/// edge conductance to zero at full depth).
void validate(const LatticeModel& model);

/// Grid graph at unit or base conductance. Uses 1 S per edge when the model
/// has no explicit base conductance.
LatticeGraph build_lattice(const LatticeModel& model);

double contact_radius(const LatticeModel& model, double depth);

/// Dimensionless strain at p caused by the indentation.
double strain_at(const LatticeModel& model, const Indentation& ind, Point2 p);

/// Copy of the graph with every edge conductance divided by (1 + alpha * mean endpoint strain).
LatticeGraph apply_indentation(const LatticeGraph& graph, const LatticeModel& model, const Indentation& ind);

/// Effective two-terminal resistance between the electrode nodes of the pair.
double pair_resistance(const LatticeGraph& graph, const ElectrodePair& pair);

/// Effective resistance between two arbitrary nodes.
double node_resistance(const LatticeGraph& graph, std::size_t a, std::size_t b);

/// Rest resistances for every canonical pair.
std::vector<double> pair_resistances(const LatticeGraph& graph, std::span<const ElectrodePair> pairs);

/// Model with its rest state resolved: base conductance fixed, rest graph
/// and rest pair resistances cached. Immutable after construction, so
/// simulate() may be called concurrently.
class ForwardModel {
public:
    explicit ForwardModel(LatticeModel model);

    const LatticeModel& model() const { return model_; }
    const SensorGeometry& geometry() const { return model_.geometry; }
    double base_conductance() const { return *model_.base_conductance; }
    const LatticeGraph& rest_graph() const { return rest_; }
    const std::vector<ElectrodePair>& pairs() const { return pairs_; }
    std::span<const double> rest_resistances() const { return rest_resistances_; }

    /// Absolute pair resistances with the indentation applied.
    std::vector<double> indented_resistances(const Indentation& ind) const;

    IndentationRecord simulate(const Indentation& ind) const;

private:
    LatticeModel model_;
    LatticeGraph rest_;
    std::vector<ElectrodePair> pairs_;
    std::vector<double> rest_resistances_;
};

/// Convenience wrapper that resolves a ForwardModel per call.
IndentationRecord simulate_record(const LatticeModel& model, const Indentation& ind);

/// Loading branch of the load/depth characteristic, piecewise linear.
class LoadCurve {
public:
    /// (0,0) (1,1) (2,3) (3,6) (4,10) (5,16) in mm / N.
    LoadCurve();
    explicit LoadCurve(std::vector<std::pair<double, double>> breakpoints);

    const std::vector<std::pair<double, double>>& breakpoints() const { return breakpoints_; }
    double max_depth() const { return breakpoints_.back().first; }

private:
    std::vector<std::pair<double, double>> breakpoints_;
};

double load_for_depth(const LoadCurve& curve, double depth);

} // namespace piezoloc
