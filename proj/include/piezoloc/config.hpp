#pragma once

// Declarative run configuration. Every field has a default, so an empty
// document ({}) reproduces the standard experiment.

#include "piezoloc/dataset.hpp"
#include "piezoloc/learn.hpp"
#include "piezoloc/serialization.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace piezoloc {

struct RunConfig {
    LatticeModel model;  // carries the sensor geometry
    CircuitConfig circuit;
    ProtocolSpec train_protocol{.kind = ProtocolKind::grid, .spacing = 2.0, .depth = 3.0, .repeats = 4};
    ProtocolSpec test_protocol{.kind = ProtocolKind::random, .count = 60, .depth = 3.0, .repeats = 1};
    FeatureSource source = FeatureSource::ideal;
    /// Empty: 1% of the median centre-indentation change (ideal) or 0 V (circuit).
    std::optional<double> noise_sd;
    GridSearchSpec learning;
    std::uint64_t seed = 7;
    std::string output_dir = "out";

    const SensorGeometry& geometry() const { return model.geometry; }
};

/// Seeds for the independent random streams of one run, derived from the master seed.
struct RunSeeds {
    std::uint64_t train_protocol;
    std::uint64_t test_protocol;
    std::uint64_t train_noise;
    std::uint64_t test_noise;
    std::uint64_t random_baseline;
};
RunSeeds derive_seeds(std::uint64_t master);

RunConfig default_config();
/// Throws ConfigError naming the dotted path of the first bad or unknown field.
RunConfig config_from_json(const Json& j);
Json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);

/// Digest of the canonical config document, excluding output_dir.
std::string config_hash(const RunConfig& cfg);

} // namespace piezoloc
