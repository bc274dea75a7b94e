#include "piezoloc/pipeline.hpp"

#include "piezoloc/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace piezoloc {
namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw LoadError("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw LoadError("write failed for " + path.string());
}

double resolve_noise(const RunConfig& cfg, const ForwardModel& model) {
    if (cfg.noise_sd) return *cfg.noise_sd;
    return cfg.source == FeatureSource::ideal ? default_ideal_noise(model, cfg.train_protocol.depth) : 0.0;
}

} // namespace

SimulationResult simulate_run(const RunConfig& cfg) {
    const ForwardModel model(cfg.model);
    const RunSeeds seeds = derive_seeds(cfg.seed);
    const std::string hash = config_hash(cfg);

    SimulationResult out;
    out.noise_sd = resolve_noise(cfg, model);

    auto run = [&](ProtocolSpec spec, std::uint64_t protocol_seed, std::uint64_t noise_seed, const char* label) {
        spec.seed = protocol_seed;
        const CollectOptions options{
            .source = cfg.source, .circuit = cfg.circuit, .noise_sd = out.noise_sd, .noise_seed = noise_seed};
        Dataset d = collect(make_protocol(model.geometry(), spec), model, options);
        d.provenance.protocol = spec;
        d.provenance.config_hash = hash;
        d.provenance.label = label;
        return d;
    };
    out.train = run(cfg.train_protocol, seeds.train_protocol, seeds.train_noise, "train");
    out.test = run(cfg.test_protocol, seeds.test_protocol, seeds.test_noise, "test");
    return out;
}

std::vector<Dataset> split_repeats(const Dataset& grid_data) {
    const ProtocolSpec& spec = grid_data.provenance.protocol;
    if (spec.kind != ProtocolKind::grid || spec.repeats == 0 || grid_data.size() % spec.repeats != 0) {
        throw ShapeError("split_repeats: dataset is not a repeated grid protocol");
    }
    const std::size_t per = grid_data.size() / spec.repeats;
    std::vector<Dataset> grids;
    for (std::size_t r = 0; r < spec.repeats; ++r) {
        Dataset d{.geometry = grid_data.geometry, .provenance = grid_data.provenance};
        d.provenance.protocol.repeats = 1;
        d.records.assign(grid_data.records.begin() + static_cast<std::ptrdiff_t>(r * per),
                         grid_data.records.begin() + static_cast<std::ptrdiff_t>((r + 1) * per));
        grids.push_back(std::move(d));
    }
    return grids;
}

Method method_from_string(const std::string& s) {
    if (s == "linear") return Method::linear;
    if (s == "krr") return Method::krr;
    throw ConfigError("unknown method '" + s + "' (expected linear or krr)");
}

std::string to_string(Method m) { return m == Method::linear ? "linear" : "krr"; }

TrainResult train_model(const Dataset& train, Method method, const GridSearchSpec& spec) {
    if (method == Method::linear) return {fit_linear(train), std::nullopt};
    GridSearchResult search = grid_search(train, spec);
    TrainedModel model = search.model;
    return {std::move(model), std::move(search)};
}

std::vector<ReportRow> evaluation_rows(const Dataset& test,
                                       const std::vector<std::pair<std::string, TrainedModel>>& models,
                                       std::uint64_t random_baseline_seed) {
    std::vector<ReportRow> rows;
    rows.push_back({"center", evaluate_baseline(BaselineKind::center, 0, test)});
    rows.push_back({"random", evaluate_baseline(BaselineKind::random, random_baseline_seed, test)});
    for (const auto& [name, model] : models) {
        if (feature_count(model) != test.geometry.pair_count()) {
            throw ShapeError("model '" + name + "' expects " + std::to_string(feature_count(model)) +
                             " features but the test set has " + std::to_string(test.geometry.pair_count()));
        }
        rows.push_back({name, evaluate([&m = model](std::span<const double> f) { return predict(m, f); }, test)});
    }
    return rows;
}

std::string format_report_text(const std::vector<ReportRow>& rows, const std::string& header) {
    std::ostringstream os;
    os << header;
    os << "predictor    median_mm   mean_mm    std_mm\n";
    for (const ReportRow& r : rows) {
        std::string name = r.name;
        name.resize(std::max<std::size_t>(name.size(), 12), ' ');
        os << name << ' ' << fixed(r.stats.median, 3) << "      " << fixed(r.stats.mean, 3) << "      "
           << fixed(r.stats.std_dev, 3) << '\n';
    }
    return os.str();
}

std::string format_report_csv(const std::vector<ReportRow>& rows) {
    std::ostringstream os;
    os << "predictor,median_mm,mean_mm,std_mm\n";
    for (const ReportRow& r : rows) {
        os << r.name << ',' << fixed(r.stats.median, 6) << ',' << fixed(r.stats.mean, 6) << ','
           << fixed(r.stats.std_dev, 6) << '\n';
    }
    return os.str();
}

SimulateOutputs cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log) {
    std::filesystem::create_directories(out);
    const SimulationResult sim = simulate_run(cfg);
    SimulateOutputs files{out / "train.jsonl", out / "test.jsonl", out / "holdout_train.jsonl",
                          out / "holdout_test.jsonl"};
    save(sim.train, files.train);
    save(sim.test, files.test);
    log << "wrote " << files.train.string() << " (" << sim.train.size() << " records)\n";
    log << "wrote " << files.test.string() << " (" << sim.test.size() << " records)\n";

    if (sim.train.provenance.protocol.kind == ProtocolKind::grid && sim.train.provenance.protocol.repeats >= 2) {
        const std::vector<Dataset> grids = split_repeats(sim.train);
        auto [holdout_train, holdout_test] = leave_one_grid_out(grids, grids.size() - 1);
        holdout_train.provenance.label = "holdout_train";
        holdout_train.provenance.protocol.repeats = grids.size() - 1;
        holdout_test.provenance.label = "holdout_test";
        save(holdout_train, files.holdout_train);
        save(holdout_test, files.holdout_test);
        log << "wrote " << files.holdout_train.string() << " (" << holdout_train.size() << " records)\n";
        log << "wrote " << files.holdout_test.string() << " (" << holdout_test.size() << " records)\n";
    } else {
        files.holdout_train.clear();
        files.holdout_test.clear();
    }
    log << "noise_sd " << sim.noise_sd << ", config " << config_hash(cfg) << '\n';
    return files;
}

void save_model(const TrainResult& result, const nlohmann::ordered_json& metadata, const std::filesystem::path& path) {
    nlohmann::ordered_json j = model_to_json(result.model);
    j["metadata"] = metadata;
    if (result.search) {
        nlohmann::ordered_json s;
        s["lambda"] = result.search->lambda;
        s["sigma"] = result.search->sigma;
        s["calibration_median_mm"] = result.search->calibration_median;
        s["cells"] = nlohmann::ordered_json::array();
        for (const GridCell& c : result.search->cells) {
            s["cells"].push_back({c.lambda, c.sigma, std::isfinite(c.median_error) ? nlohmann::ordered_json(c.median_error)
                                                                                    : nlohmann::ordered_json(nullptr)});
        }
        j["metadata"]["grid_search"] = s;
    }
    write_text(path, j.dump(2) + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw LoadError("cannot open model file " + path.string());
    try {
        return model_from_json(nlohmann::ordered_json::parse(is));
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(path.string() + ": " + e.what());
    } catch (const LoadError& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
}

std::filesystem::path cmd_train(const RunConfig& cfg, const std::filesystem::path& train_file, Method method,
                                const std::filesystem::path& out, std::ostream& log) {
    const Dataset train = load(train_file);
    const TrainResult result = train_model(train, method, cfg.learning);
    std::filesystem::create_directories(out);
    const std::filesystem::path path = out / ("model_" + to_string(method) + ".json");

    nlohmann::ordered_json meta;
    meta["config_hash"] = config_hash(cfg);
    meta["train_file"] = train_file.filename().string();
    meta["train_config_hash"] = train.provenance.config_hash;
    meta["train_records"] = train.size();
    save_model(result, meta, path);

    if (result.search) {
        log << "krr: lambda* = " << result.search->lambda << ", sigma* = " << result.search->sigma
            << ", calibration median = " << fixed(result.search->calibration_median, 3) << " mm\n";
    } else {
        log << "linear: fitted on " << train.size() << " records\n";
    }
    log << "wrote " << path.string() << '\n';
    return path;
}

void cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& test_file,
                  const std::vector<std::filesystem::path>& model_files, const std::filesystem::path& out,
                  std::ostream& log) {
    const Dataset test = load(test_file);
    std::vector<std::pair<std::string, TrainedModel>> models;
    for (const auto& file : model_files) {
        TrainedModel m = load_model(file);
        std::string name = method_name(m);
        for (const auto& [existing, _] : models) {
            if (existing == name) name = file.stem().string();
        }
        models.emplace_back(name, std::move(m));
    }
    const std::string hash = config_hash(cfg);
    const std::vector<ReportRow> rows = evaluation_rows(test, models, derive_seeds(cfg.seed).random_baseline);

    std::filesystem::create_directories(out);
    std::ostringstream header;
    header << "# localisation error on " << test_file.filename().string() << " (" << test.size() << " records)\n";
    header << "# config_hash=" << hash << " test_config_hash=" << test.provenance.config_hash << '\n';
    const std::string report = format_report_text(rows, header.str());
    write_text(out / "report.txt", report);
    write_text(out / "report.csv", "# config_hash=" + hash + "\n" + format_report_csv(rows));
    log << report;

    const std::string comment = "config_hash=" + hash;
    for (std::size_t k = 2; k < rows.size(); ++k) {
        const ReportRow& row = rows[k];
        export_vector_field(row.stats, test.geometry, out / ("vector_field_" + row.name + ".csv"),
                            out / ("vector_field_" + row.name + ".svg"), comment);
        try {
            export_heatmap(row.stats, out / ("heatmap_" + row.name + ".csv"), out / ("heatmap_" + row.name + ".svg"),
                           comment);
            const EdgeInteriorMeans m = edge_interior_means(build_heatmap(row.stats));
            log << row.name << " heatmap: edge mean " << fixed(m.edge, 3) << " mm, interior mean "
                << fixed(m.interior, 3) << " mm\n";
        } catch (const ShapeError&) {
            // not a lattice test set; no heatmap
        }
    }
    log << "wrote report to " << (out / "report.txt").string() << '\n';
}

} // namespace piezoloc
