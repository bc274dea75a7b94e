#include "piezoloc/config.hpp"

#include "piezoloc/errors.hpp"

#include <fstream>

namespace piezoloc {
namespace {

// splitmix64 finaliser: decorrelates consecutive stream indices.
std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<double> grid_from_json(const Json& j, const std::string& path) {
    if (j.is_array()) {
        std::vector<double> out;
        for (const Json& v : j) {
            if (!v.is_number() || !(v.get<double>() > 0.0)) throw ConfigError(path + ": grid values must be positive numbers");
            out.push_back(v.get<double>());
        }
        if (out.empty()) throw ConfigError(path + ": grid must not be empty");
        return out;
    }
    ObjectReader r(j, path);
    double lo = 0.0, hi = 0.0;
    std::size_t count = 0;
    if (!j.contains("min") || !j.contains("max") || !j.contains("count")) {
        throw ConfigError(path + ": expected an array or {min, max, count}");
    }
    r.get("min", lo);
    r.get("max", hi);
    r.get("count", count);
    r.finish();
    if (!(lo > 0.0) || !(hi >= lo) || count == 0) throw ConfigError(path + ": need 0 < min <= max and count > 0");
    return log_space(lo, hi, count);
}

ProtocolSpec protocol_section(const Json& j, const std::string& path, ProtocolSpec defaults) {
    if (j.is_object() && j.contains("seed")) {
        throw ConfigError(path + ".seed: protocol seeds derive from the top-level seed");
    }
    return protocol_from_json(j, path, defaults);
}

Json protocol_section_json(const ProtocolSpec& p) {
    Json j = to_json(p);
    j.erase("seed");
    return j;
}

} // namespace

RunSeeds derive_seeds(std::uint64_t master) {
    return {mix(master ^ 1), mix(master ^ 2), mix(master ^ 3), mix(master ^ 4), mix(master ^ 5)};
}

RunConfig default_config() { return RunConfig{}; }

RunConfig config_from_json(const Json& j) {
    RunConfig cfg;
    ObjectReader r(j, "");
    r.get("seed", cfg.seed);
    r.get("output_dir", cfg.output_dir);

    SensorGeometry geometry;
    if (const Json* g = r.find("geometry")) geometry = geometry_from_json(*g, "geometry");
    cfg.model.geometry = geometry;
    if (const Json* m = r.find("lattice")) {
        cfg.model = lattice_model_from_json(*m, "lattice", geometry);
    } else {
        validate(cfg.model);
    }
    if (const Json* c = r.find("circuit")) cfg.circuit = circuit_from_json(*c, "circuit");

    if (const Json* p = r.find("protocol")) {
        ObjectReader pr(*p, "protocol");
        if (const Json* t = pr.find("train")) cfg.train_protocol = protocol_section(*t, "protocol.train", cfg.train_protocol);
        if (const Json* t = pr.find("test")) cfg.test_protocol = protocol_section(*t, "protocol.test", cfg.test_protocol);
        pr.finish();
    }
    if (const Json* f = r.find("features")) {
        ObjectReader fr(*f, "features");
        std::string source = to_string(cfg.source);
        fr.get("source", source);
        try {
            cfg.source = feature_source_from_string(source);
        } catch (const ConfigError&) {
            throw ConfigError("features.source: expected ideal or circuit");
        }
        fr.get("noise_sd", cfg.noise_sd);
        fr.finish();
        if (cfg.noise_sd && !(*cfg.noise_sd >= 0.0)) throw ConfigError("features.noise_sd: must be non-negative");
    }
    if (const Json* l = r.find("learning")) {
        ObjectReader lr(*l, "learning");
        if (const Json* g = lr.find("lambda_grid")) cfg.learning.lambda_grid = grid_from_json(*g, "learning.lambda_grid");
        if (const Json* g = lr.find("sigma_grid")) cfg.learning.sigma_grid = grid_from_json(*g, "learning.sigma_grid");
        std::string scaling = cfg.learning.options.scaling == RidgeScaling::scaled ? "scaled" : "unscaled";
        lr.get("ridge_scaling", scaling);
        if (scaling != "scaled" && scaling != "unscaled") {
            throw ConfigError("learning.ridge_scaling: expected scaled or unscaled");
        }
        cfg.learning.options.scaling = scaling == "scaled" ? RidgeScaling::scaled : RidgeScaling::unscaled;
        lr.get("standardize", cfg.learning.options.standardize);
        lr.finish();
    }
    r.finish();
    return cfg;
}

Json config_to_json(const RunConfig& cfg) {
    Json j;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    j["geometry"] = to_json(cfg.geometry());
    j["lattice"] = to_json(cfg.model);
    j["circuit"] = to_json(cfg.circuit);
    j["protocol"]["train"] = protocol_section_json(cfg.train_protocol);
    j["protocol"]["test"] = protocol_section_json(cfg.test_protocol);
    j["features"]["source"] = to_string(cfg.source);
    j["features"]["noise_sd"] = cfg.noise_sd ? Json(*cfg.noise_sd) : Json(nullptr);
    j["learning"]["lambda_grid"] = cfg.learning.lambda_grid;
    j["learning"]["sigma_grid"] = cfg.learning.sigma_grid;
    j["learning"]["ridge_scaling"] = cfg.learning.options.scaling == RidgeScaling::scaled ? "scaled" : "unscaled";
    j["learning"]["standardize"] = cfg.learning.options.standardize;
    return j;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path.string());
    Json j;
    try {
        j = Json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

std::string config_hash(const RunConfig& cfg) {
    Json j = config_to_json(cfg);
    j.erase("output_dir");
    return fnv1a_hex(j.dump());
}

} // namespace piezoloc
