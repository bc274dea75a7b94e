#pragma once

// JSON encoding of the configuration-bearing types. Decoders start from a
// default value, override the keys present, and reject unknown keys with
// the dotted path of the offending field.

#include "piezoloc/core.hpp"
#include "piezoloc/dataset.hpp"
#include "piezoloc/errors.hpp"
#include "piezoloc/lattice.hpp"
#include "piezoloc/signal_chain.hpp"

#include <nlohmann/json.hpp>

#include <set>
#include <string>

namespace piezoloc {

using Json = nlohmann::ordered_json;

/// Strict view over a JSON object. Every accessed key is recorded so that
/// finish() can report the first key nobody asked for.
class ObjectReader {
public:
    ObjectReader(const Json& object, std::string path);

    template <typename T>
    void get(const char* key, T& out) {
        const Json* node = find(key);
        if (node == nullptr) return;
        try {
            out = node->get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(field(key) + ": wrong type");
        }
    }

    template <typename T>
    void get(const char* key, std::optional<T>& out) {
        const Json* node = find(key);
        if (node == nullptr) return;
        if (node->is_null()) {
            out.reset();
            return;
        }
        T value{};
        get(key, value);
        out = value;
    }

    /// Nullptr when the key is absent.
    const Json* find(const char* key);
    std::string field(const char* key) const;
    void finish() const;

private:
    const Json& object_;
    std::string path_;
    std::set<std::string> seen_;
};

Json to_json(Point2 p);
Point2 point_from_json(const Json& j, const std::string& path);

Json to_json(const SensorGeometry& g);
SensorGeometry geometry_from_json(const Json& j, const std::string& path);

Json to_json(const LatticeModel& m);
/// `geometry` is used for the model's own geometry field.
LatticeModel lattice_model_from_json(const Json& j, const std::string& path, const SensorGeometry& geometry);

Json to_json(const CircuitConfig& c);
CircuitConfig circuit_from_json(const Json& j, const std::string& path);

Json to_json(const ProtocolSpec& p);
ProtocolSpec protocol_from_json(const Json& j, const std::string& path, ProtocolSpec defaults);

Json to_json(const CollectOptions& c);
CollectOptions collect_options_from_json(const Json& j, const std::string& path);

/// 64-bit FNV-1a digest rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

} // namespace piezoloc
