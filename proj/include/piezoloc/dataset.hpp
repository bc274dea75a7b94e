#pragma once

#include "piezoloc/core.hpp"
#include "piezoloc/lattice.hpp"
#include "piezoloc/signal_chain.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace piezoloc {

enum class ProtocolKind { grid, random };

struct ProtocolSpec {
    ProtocolKind kind = ProtocolKind::grid;
    double spacing = 2.0;     // mm, grid only
    std::size_t count = 60;   // random only
    double depth = 3.0;       // mm
    std::uint64_t seed = 0;
    std::size_t repeats = 1;

    friend bool operator==(const ProtocolSpec&, const ProtocolSpec&) = default;
};

/// Lattice points {0, s, .., width} x {0, s, .., height}, row-major in y then x.
std::vector<Point2> grid_points(const SensorGeometry& geometry, double spacing);

/// Grid locations in seeded random order, reshuffled for every repeat.
std::vector<Indentation> grid_protocol(const SensorGeometry& geometry, const ProtocolSpec& spec);

/// spec.count uniformly distributed locations per repeat.
std::vector<Indentation> random_protocol(const SensorGeometry& geometry, const ProtocolSpec& spec);

std::vector<Indentation> make_protocol(const SensorGeometry& geometry, const ProtocolSpec& spec);

enum class FeatureSource { ideal, circuit };

struct CollectOptions {
    FeatureSource source = FeatureSource::ideal;
    CircuitConfig circuit;           // circuit source only
    double noise_sd = 0.0;           // ohms (ideal) or volts at the ADC input (circuit)
    std::uint64_t noise_seed = 0;

    friend bool operator==(const CollectOptions&, const CollectOptions&) = default;
};

struct Provenance {
    ProtocolSpec protocol;
    LatticeModel model;
    CollectOptions collection;
    std::string config_hash;
    std::string label;  // free-form tag, e.g. "train" / "test"
    std::size_t saturated_features = 0;  // circuit source: features read at a rail

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Dataset {
    SensorGeometry geometry;
    std::vector<IndentationRecord> records;
    Provenance provenance;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Runs every indentation through the forward model and, for the circuit
/// source, through the emulated measurement chain (rest frame, then loaded
/// frame, features differenced).
Dataset collect(std::span<const Indentation> protocol, const ForwardModel& model, const CollectOptions& options);

/// Default ideal-feature noise: 1% of the median pair resistance change for
/// a protocol-depth indentation at the sensor centre.
double default_ideal_noise(const ForwardModel& model, double depth);

/// Records of `parts` concatenated in order; geometries must agree.
Dataset concatenate(std::span<const Dataset> parts);

inline constexpr int kDatasetSchemaVersion = 1;

void save(const Dataset& dataset, const std::filesystem::path& path);
Dataset load(const std::filesystem::path& path);

std::string to_string(ProtocolKind kind);
std::string to_string(FeatureSource source);
std::string to_string(StrainProfile profile);
ProtocolKind protocol_kind_from_string(const std::string& s);
FeatureSource feature_source_from_string(const std::string& s);
StrainProfile strain_profile_from_string(const std::string& s);

} // namespace piezoloc
