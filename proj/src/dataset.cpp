#include "piezoloc/dataset.hpp"

#include "piezoloc/errors.hpp"
#include "piezoloc/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace piezoloc {
namespace {

std::size_t grid_steps(double length, double spacing, const char* side) {
    if (!(spacing > 0.0)) {
        throw ConfigError("grid protocol: spacing must be positive");
    }
    const double ratio = length / spacing;
    const double snapped = std::round(ratio);
    if (snapped < 1.0 || std::abs(ratio - snapped) > 1e-9 * std::max(1.0, ratio)) {
        throw ConfigError(std::string("grid protocol: spacing does not tile the sensor ") + side);
    }
    return static_cast<std::size_t>(snapped);
}

} // namespace

std::string to_string(ProtocolKind kind) { return kind == ProtocolKind::grid ? "grid" : "random"; }
std::string to_string(FeatureSource source) { return source == FeatureSource::ideal ? "ideal" : "circuit"; }
std::string to_string(StrainProfile profile) {
    return profile == StrainProfile::gaussian ? "gaussian" : "parabolic-cap";
}

ProtocolKind protocol_kind_from_string(const std::string& s) {
    if (s == "grid") return ProtocolKind::grid;
    if (s == "random") return ProtocolKind::random;
    throw ConfigError("unknown protocol kind '" + s + "'");
}

FeatureSource feature_source_from_string(const std::string& s) {
    if (s == "ideal") return FeatureSource::ideal;
    if (s == "circuit") return FeatureSource::circuit;
    throw ConfigError("unknown feature source '" + s + "'");
}

StrainProfile strain_profile_from_string(const std::string& s) {
    if (s == "gaussian") return StrainProfile::gaussian;
    if (s == "parabolic-cap") return StrainProfile::parabolic_cap;
    throw ConfigError("unknown strain profile '" + s + "'");
}

std::vector<Point2> grid_points(const SensorGeometry& geometry, double spacing) {
    const std::size_t nx = grid_steps(geometry.width(), spacing, "width") + 1;
    const std::size_t ny = grid_steps(geometry.height(), spacing, "height") + 1;
    const double dx = geometry.width() / static_cast<double>(nx - 1);
    const double dy = geometry.height() / static_cast<double>(ny - 1);
    std::vector<Point2> points;
    points.reserve(nx * ny);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            points.push_back({static_cast<double>(i) * dx, static_cast<double>(j) * dy});
        }
    }
    return points;
}

std::vector<Indentation> grid_protocol(const SensorGeometry& geometry, const ProtocolSpec& spec) {
    if (spec.kind != ProtocolKind::grid) {
        throw ConfigError("grid protocol: spec kind must be grid");
    }
    const std::vector<Point2> lattice = grid_points(geometry, spec.spacing);
    std::mt19937_64 rng(spec.seed);
    std::vector<Indentation> out;
    out.reserve(lattice.size() * spec.repeats);
    for (std::size_t r = 0; r < spec.repeats; ++r) {
        std::vector<Point2> order = lattice;
        std::shuffle(order.begin(), order.end(), rng);
        for (Point2 p : order) {
            Indentation ind{p, spec.depth};
            validate(ind, geometry);
            out.push_back(ind);
        }
    }
    return out;
}

std::vector<Indentation> random_protocol(const SensorGeometry& geometry, const ProtocolSpec& spec) {
    if (spec.kind != ProtocolKind::random) {
        throw ConfigError("random protocol: spec kind must be random");
    }
    if (spec.count == 0) {
        throw ConfigError("random protocol: count must be positive");
    }
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> ux(0.0, geometry.width());
    std::uniform_real_distribution<double> uy(0.0, geometry.height());
    std::vector<Indentation> out;
    out.reserve(spec.count * spec.repeats);
    for (std::size_t k = 0; k < spec.count * spec.repeats; ++k) {
        const double x = ux(rng);
        const double y = uy(rng);
        Indentation ind{{x, y}, spec.depth};
        validate(ind, geometry);
        out.push_back(ind);
    }
    return out;
}

std::vector<Indentation> make_protocol(const SensorGeometry& geometry, const ProtocolSpec& spec) {
    return spec.kind == ProtocolKind::grid ? grid_protocol(geometry, spec) : random_protocol(geometry, spec);
}

double default_ideal_noise(const ForwardModel& model, double depth) {
    const IndentationRecord rec = model.simulate({model.geometry().center(), depth});
    std::vector<double> dr(rec.dr().begin(), rec.dr().end());
    const auto mid = dr.begin() + static_cast<std::ptrdiff_t>(dr.size() / 2);
    std::nth_element(dr.begin(), mid, dr.end());
    double median = *mid;
    if (dr.size() % 2 == 0) {
        median = 0.5 * (median + *std::max_element(dr.begin(), mid));
    }
    return 0.01 * std::abs(median);
}

Dataset collect(std::span<const Indentation> protocol, const ForwardModel& model, const CollectOptions& options) {
    if (!(options.noise_sd >= 0.0)) {
        throw ConfigError("collect: noise_sd must be non-negative");
    }
    Dataset out{.geometry = model.geometry()};
    out.provenance.model = model.model();
    out.provenance.collection = options;
    out.records.reserve(protocol.size());

    if (options.source == FeatureSource::ideal) {
        std::mt19937_64 rng(options.noise_seed);
        std::normal_distribution<double> noise(0.0, options.noise_sd > 0.0 ? options.noise_sd : 1.0);
        for (const Indentation& ind : protocol) {
            const IndentationRecord clean = model.simulate(ind);
            std::vector<double> dr(clean.dr().begin(), clean.dr().end());
            if (options.noise_sd > 0.0) {
                for (double& v : dr) v += noise(rng);
            }
            out.records.emplace_back(model.geometry(), ind, std::move(dr));
        }
        return out;
    }

    const CircuitConfig cfg = resolve(options.circuit, model.rest_resistances());
    out.provenance.collection.circuit = cfg;
    const std::vector<std::uint32_t> baselines = capture_baseline(model.rest_resistances(), cfg);
    FrameStream stream(cfg, baselines, options.noise_sd, options.noise_seed);
    for (const Indentation& ind : protocol) {
        const Frame rest = stream.next(model.rest_resistances());
        const std::vector<double> loaded_r = model.indented_resistances(ind);
        const Frame loaded = stream.next(loaded_r);
        const PairEstimate at_rest = counts_to_features(rest, baselines, cfg);
        const PairEstimate at_depth = counts_to_features(loaded, baselines, cfg);
        std::vector<double> dr(baselines.size());
        for (std::size_t k = 0; k < dr.size(); ++k) {
            dr[k] = at_depth.delta_rs[k] - at_rest.delta_rs[k];
            if (at_rest.saturated[k]) ++out.provenance.saturated_features;
            if (at_depth.saturated[k]) ++out.provenance.saturated_features;
        }
        out.records.emplace_back(model.geometry(), ind, std::move(dr));
    }
    return out;
}

Dataset concatenate(std::span<const Dataset> parts) {
    if (parts.empty()) {
        throw ShapeError("concatenate: no datasets given");
    }
    Dataset out{.geometry = parts.front().geometry, .provenance = parts.front().provenance};
    for (const Dataset& d : parts) {
        if (!(d.geometry == out.geometry)) {
            throw ShapeError("concatenate: datasets have different geometries");
        }
        out.records.insert(out.records.end(), d.records.begin(), d.records.end());
    }
    return out;
}

void save(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw LoadError("cannot open " + path.string() + " for writing");
    }
    Json provenance;
    provenance["label"] = dataset.provenance.label;
    provenance["config_hash"] = dataset.provenance.config_hash;
    provenance["protocol"] = to_json(dataset.provenance.protocol);
    provenance["model"] = to_json(dataset.provenance.model);
    provenance["collection"] = to_json(dataset.provenance.collection);
    provenance["saturated_features"] = dataset.provenance.saturated_features;

    Json meta;
    meta["schema_version"] = kDatasetSchemaVersion;
    meta["kind"] = "piezoloc.dataset";
    meta["record_count"] = dataset.records.size();
    meta["geometry"] = to_json(dataset.geometry);
    meta["provenance"] = provenance;
    os << meta.dump() << '\n';
    for (const IndentationRecord& rec : dataset.records) {
        Json row;
        row["x_mm"] = rec.location().x;
        row["y_mm"] = rec.location().y;
        row["depth_mm"] = rec.depth();
        row["dr"] = std::vector<double>(rec.dr().begin(), rec.dr().end());
        os << row.dump() << '\n';
    }
    if (!os) {
        throw LoadError("write failed for " + path.string());
    }
}

Dataset load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw LoadError("cannot open " + path.string());
    }
    const std::string where = path.string();
    auto fail = [&](std::size_t line, const std::string& what) -> LoadError {
        return LoadError(where + ":" + std::to_string(line) + ": " + what);
    };

    std::string text;
    std::size_t line_no = 0;
    if (!std::getline(is, text)) {
        throw fail(1, "empty file, expected metadata line");
    }
    line_no = 1;

    Dataset out;
    std::size_t expected = 0;
    try {
        const Json meta = Json::parse(text);
        ObjectReader r(meta, "");
        int version = -1;
        r.get("schema_version", version);
        if (version != kDatasetSchemaVersion) {
            throw fail(line_no, "unsupported schema_version " + std::to_string(version));
        }
        std::string kind;
        r.get("kind", kind);
        if (kind != "piezoloc.dataset") {
            throw fail(line_no, "not a dataset file (kind '" + kind + "')");
        }
        r.get("record_count", expected);
        const Json* geometry = r.find("geometry");
        const Json* provenance = r.find("provenance");
        if (geometry == nullptr || provenance == nullptr) {
            throw fail(line_no, "metadata lacks geometry or provenance");
        }
        r.finish();
        out.geometry = geometry_from_json(*geometry, "geometry");
        ObjectReader p(*provenance, "provenance");
        p.get("label", out.provenance.label);
        p.get("config_hash", out.provenance.config_hash);
        if (const Json* j = p.find("protocol")) out.provenance.protocol = protocol_from_json(*j, "provenance.protocol", {});
        if (const Json* j = p.find("model")) {
            out.provenance.model = lattice_model_from_json(*j, "provenance.model", out.geometry);
        } else {
            out.provenance.model.geometry = out.geometry;
        }
        if (const Json* j = p.find("collection")) {
            out.provenance.collection = collect_options_from_json(*j, "provenance.collection");
        }
        p.get("saturated_features", out.provenance.saturated_features);
        p.finish();
    } catch (const nlohmann::json::exception& e) {
        throw fail(line_no, std::string("malformed metadata: ") + e.what());
    } catch (const LoadError&) {
        throw;
    } catch (const Error& e) {
        throw fail(line_no, e.what());
    }

    out.records.reserve(expected);
    while (std::getline(is, text)) {
        ++line_no;
        if (text.empty()) {
            continue;
        }
        try {
            const Json row = Json::parse(text);
            ObjectReader r(row, "");
            double x = 0.0, y = 0.0, depth = 0.0;
            std::vector<double> dr;
            if (!row.contains("x_mm") || !row.contains("y_mm") || !row.contains("depth_mm") || !row.contains("dr")) {
                throw fail(line_no, "record needs x_mm, y_mm, depth_mm and dr");
            }
            r.get("x_mm", x);
            r.get("y_mm", y);
            r.get("depth_mm", depth);
            r.get("dr", dr);
            r.finish();
            out.records.emplace_back(out.geometry, Indentation{{x, y}, depth}, std::move(dr));
        } catch (const nlohmann::json::exception& e) {
            throw fail(line_no, std::string("malformed record: ") + e.what());
        } catch (const LoadError&) {
            throw;
        } catch (const Error& e) {
            throw fail(line_no, e.what());
        }
    }
    if (out.records.size() != expected) {
        throw fail(line_no + 1, "expected " + std::to_string(expected) + " records, found " +
                                    std::to_string(out.records.size()) + " (file truncated?)");
    }
    return out;
}

} // namespace piezoloc
