#include "piezoloc/serialization.hpp"

#include "piezoloc/errors.hpp"

#include <cstdint>
#include <cstdio>

namespace piezoloc {

ObjectReader::ObjectReader(const Json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) {
        throw ConfigError((path_.empty() ? std::string("<root>") : path_) + ": expected an object");
    }
}

const Json* ObjectReader::find(const char* key) {
    seen_.insert(key);
    auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
}

std::string ObjectReader::field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

void ObjectReader::finish() const {
    for (auto it = object_.begin(); it != object_.end(); ++it) {
        if (!seen_.contains(it.key())) {
            throw ConfigError(field(it.key().c_str()) + ": unknown key");
        }
    }
}

Json to_json(Point2 p) { return Json::array({p.x, p.y}); }

Point2 point_from_json(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ConfigError(path + ": expected [x, y]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

Json to_json(const SensorGeometry& g) {
    Json electrodes = Json::array();
    for (Point2 e : g.electrodes()) electrodes.push_back(to_json(e));
    Json j;
    j["width_mm"] = g.width();
    j["height_mm"] = g.height();
    j["thickness_mm"] = g.thickness();
    j["electrodes"] = electrodes;
    return j;
}

SensorGeometry geometry_from_json(const Json& j, const std::string& path) {
    const SensorGeometry defaults;
    ObjectReader r(j, path);
    double width = defaults.width();
    double height = defaults.height();
    double thickness = defaults.thickness();
    r.get("width_mm", width);
    r.get("height_mm", height);
    r.get("thickness_mm", thickness);
    std::vector<Point2> electrodes = corner_electrodes(width, height);
    if (const Json* e = r.find("electrodes")) {
        if (!e->is_array()) throw ConfigError(r.field("electrodes") + ": expected an array");
        electrodes.clear();
        for (std::size_t k = 0; k < e->size(); ++k) {
            electrodes.push_back(point_from_json((*e)[k], r.field("electrodes") + "[" + std::to_string(k) + "]"));
        }
    }
    r.finish();
    try {
        return SensorGeometry(width, height, thickness, std::move(electrodes));
    } catch (const ConfigError& err) {
        throw ConfigError(path + ": " + err.what());
    }
}

Json to_json(const LatticeModel& m) {
    Json j;
    j["node_spacing_mm"] = m.node_spacing;
    j["base_conductance_s"] = m.base_conductance ? Json(*m.base_conductance) : Json(nullptr);
    j["rest_band_ohm"] = Json::array({m.rest_band.first, m.rest_band.second});
    j["piezo_coefficient"] = m.piezo_coefficient;
    j["indenter_radius_mm"] = m.indenter_radius;
    j["strain_profile"] = to_string(m.strain_profile);
    return j;
}

LatticeModel lattice_model_from_json(const Json& j, const std::string& path, const SensorGeometry& geometry) {
    LatticeModel m{.geometry = geometry};
    ObjectReader r(j, path);
    r.get("node_spacing_mm", m.node_spacing);
    r.get("base_conductance_s", m.base_conductance);
    if (const Json* band = r.find("rest_band_ohm")) {
        if (!band->is_array() || band->size() != 2 || !(*band)[0].is_number() || !(*band)[1].is_number()) {
            throw ConfigError(r.field("rest_band_ohm") + ": expected [low, high]");
        }
        m.rest_band = {(*band)[0].get<double>(), (*band)[1].get<double>()};
    }
    r.get("piezo_coefficient", m.piezo_coefficient);
    r.get("indenter_radius_mm", m.indenter_radius);
    std::string profile = to_string(m.strain_profile);
    r.get("strain_profile", profile);
    try {
        m.strain_profile = strain_profile_from_string(profile);
    } catch (const ConfigError&) {
        throw ConfigError(r.field("strain_profile") + ": expected gaussian or parabolic-cap");
    }
    r.finish();
    try {
        validate(m);
    } catch (const ConfigError& err) {
        throw ConfigError(path + ": " + err.what());
    }
    return m;
}

Json to_json(const CircuitConfig& c) {
    Json j;
    j["vcc_v"] = c.vcc;
    j["r1_ohm"] = c.r1 ? Json(*c.r1) : Json(nullptr);
    j["gain"] = c.gain;
    j["dac_bits"] = c.dac_bits;
    j["adc_bits"] = c.adc_bits;
    j["frame_period_ms"] = c.frame_period_ms;
    j["output_offset_v"] = c.output_offset ? Json(*c.output_offset) : Json(nullptr);
    return j;
}

CircuitConfig circuit_from_json(const Json& j, const std::string& path) {
    CircuitConfig c;
    ObjectReader r(j, path);
    r.get("vcc_v", c.vcc);
    r.get("r1_ohm", c.r1);
    r.get("gain", c.gain);
    r.get("dac_bits", c.dac_bits);
    r.get("adc_bits", c.adc_bits);
    r.get("frame_period_ms", c.frame_period_ms);
    r.get("output_offset_v", c.output_offset);
    r.finish();
    try {
        validate(c, {});
    } catch (const ConfigError& err) {
        throw ConfigError(path + ": " + err.what());
    }
    return c;
}

Json to_json(const ProtocolSpec& p) {
    Json j;
    j["kind"] = to_string(p.kind);
    j["spacing_mm"] = p.spacing;
    j["count"] = p.count;
    j["depth_mm"] = p.depth;
    j["seed"] = p.seed;
    j["repeats"] = p.repeats;
    return j;
}

ProtocolSpec protocol_from_json(const Json& j, const std::string& path, ProtocolSpec p) {
    ObjectReader r(j, path);
    std::string kind = to_string(p.kind);
    r.get("kind", kind);
    try {
        p.kind = protocol_kind_from_string(kind);
    } catch (const ConfigError&) {
        throw ConfigError(r.field("kind") + ": expected grid or random");
    }
    r.get("spacing_mm", p.spacing);
    r.get("count", p.count);
    r.get("depth_mm", p.depth);
    r.get("seed", p.seed);
    r.get("repeats", p.repeats);
    r.finish();
    if (p.kind == ProtocolKind::grid && !(p.spacing > 0.0)) throw ConfigError(r.field("spacing_mm") + ": must be positive");
    if (p.kind == ProtocolKind::random && p.count == 0) throw ConfigError(r.field("count") + ": must be positive");
    if (p.repeats == 0) throw ConfigError(r.field("repeats") + ": must be positive");
    if (!(p.depth >= 0.0)) throw ConfigError(r.field("depth_mm") + ": must be non-negative");
    return p;
}

Json to_json(const CollectOptions& c) {
    Json j;
    j["source"] = to_string(c.source);
    j["circuit"] = to_json(c.circuit);
    j["noise_sd"] = c.noise_sd;
    j["noise_seed"] = c.noise_seed;
    return j;
}

CollectOptions collect_options_from_json(const Json& j, const std::string& path) {
    CollectOptions c;
    ObjectReader r(j, path);
    std::string source = to_string(c.source);
    r.get("source", source);
    c.source = feature_source_from_string(source);
    if (const Json* circuit = r.find("circuit")) c.circuit = circuit_from_json(*circuit, r.field("circuit"));
    r.get("noise_sd", c.noise_sd);
    r.get("noise_seed", c.noise_seed);
    r.finish();
    return c;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace piezoloc
