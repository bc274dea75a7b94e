#include "oracles.hpp"

#include "piezoloc/errors.hpp"
#include "piezoloc/pipeline.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace piezoloc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// One full default run shared by the tests below.
struct Run {
    fs::path dir;
    SimulateOutputs files;
    fs::path linear;
    fs::path krr;
};

const Run& default_run() {
    static const Run run = [] {
        Run r;
        r.dir = testing_support::scratch_dir("pipeline_default");
        const RunConfig cfg = default_config();
        std::ostringstream log;
        r.files = cmd_simulate(cfg, r.dir, log);
        r.linear = cmd_train(cfg, r.files.train, Method::linear, r.dir, log);
        r.krr = cmd_train(cfg, r.files.train, Method::krr, r.dir, log);
        cmd_evaluate(cfg, r.files.test, {r.krr, r.linear}, r.dir, log);
        return r;
    }();
    return run;
}

} // namespace

TEST_CASE("default configuration") {
    const RunConfig cfg = config_from_json(Json::object());
    CHECK(cfg.seed == 7);
    CHECK(cfg.geometry().width() == 16.0);
    CHECK(cfg.geometry().height() == 10.0);
    CHECK(cfg.geometry().thickness() == 6.0);
    CHECK(cfg.model.node_spacing == 0.5);
    CHECK(cfg.circuit.gain == 50.0);
    CHECK(cfg.train_protocol.repeats == 4);
    CHECK(cfg.test_protocol.count == 60);
    CHECK(cfg.learning.lambda_grid.size() == 16);
    CHECK(cfg.learning.sigma_grid.front() == 1e-6);
    CHECK(config_to_json(cfg) == config_to_json(default_config()));
    CHECK(config_from_json(config_to_json(cfg)).seed == cfg.seed);
}

TEST_CASE("config errors name the offending path") {
    auto message = [](const char* text) -> std::string {
        try {
            config_from_json(Json::parse(text));
        } catch (const ConfigError& e) {
            return e.what();
        }
        return "";
    };
    CHECK(message(R"({"lattice": {"bogus": 1}})").find("lattice.bogus") != std::string::npos);
    CHECK(message(R"({"protocol": {"train": {"spacing": "x"}}})").find("protocol.train.spacing") != std::string::npos);
    CHECK(message(R"({"protocol": {"test": {"seed": 3}}})").find("protocol.test.seed") != std::string::npos);
    CHECK(message(R"({"learning": {"lambda_grid": []}})").find("learning.lambda_grid") != std::string::npos);
    CHECK_FALSE(message(R"({"geometry": {"width": -1}})").empty());
    CHECK(message(R"({"seed": 3})").empty());
}

TEST_CASE("config hash ignores the output directory") {
    RunConfig a = default_config();
    RunConfig b = a;
    b.output_dir = "elsewhere";
    CHECK(config_hash(a) == config_hash(b));
    b.seed = 8;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a).size() == 16);
}

TEST_CASE("derived seeds are distinct") {
    const RunSeeds s = derive_seeds(7);
    const std::vector<std::uint64_t> v{s.train_protocol, s.test_protocol, s.train_noise, s.test_noise,
                                       s.random_baseline};
    for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t j = i + 1; j < v.size(); ++j) CHECK(v[i] != v[j]);
    }
    CHECK(derive_seeds(8).train_protocol != s.train_protocol);
}

TEST_CASE("simulate writes the expected datasets") {
    const Run& r = default_run();
    CHECK(load(r.files.train).size() == 216);
    CHECK(load(r.files.test).size() == 60);
    CHECK(load(r.files.holdout_train).size() == 162);
    CHECK(load(r.files.holdout_test).size() == 54);
    const auto grids = split_repeats(load(r.files.train));
    CHECK(grids.size() == 4);
    CHECK(grids[3].records == load(r.files.holdout_test).records);

    RunConfig one = default_config();
    one.train_protocol.repeats = 1;
    const fs::path dir = testing_support::scratch_dir("pipeline_one");
    std::ostringstream log;
    const SimulateOutputs f = cmd_simulate(one, dir, log);
    CHECK(load(f.train).size() == 54);
}

TEST_CASE("model files") {
    const Run& r = default_run();
    const Json lin = Json::parse(slurp(r.linear));
    CHECK(lin["method"] == "linear");
    REQUIRE(lin["weights"].size() == 2);
    CHECK(lin["weights"][0].size() == 6);
    CHECK(lin["metadata"]["train_records"] == 216);

    const Json krr = Json::parse(slurp(r.krr));
    CHECK(krr["method"] == "krr");
    const auto& gs = krr["metadata"]["grid_search"];
    const RunConfig cfg = default_config();
    const double lambda = gs["lambda"].get<double>();
    const double sigma = gs["sigma"].get<double>();
    CHECK(std::find(cfg.learning.lambda_grid.begin(), cfg.learning.lambda_grid.end(), lambda) !=
          cfg.learning.lambda_grid.end());
    CHECK(std::find(cfg.learning.sigma_grid.begin(), cfg.learning.sigma_grid.end(), sigma) !=
          cfg.learning.sigma_grid.end());
    CHECK(gs["cells"].size() == 256);
    CHECK(feature_count(load_model(r.krr)) == 6);
    CHECK_THROWS_AS(load_model(r.dir / "missing.json"), LoadError);
}

TEST_CASE("report ordering on the default run") {
    const Run& r = default_run();
    const std::string csv = slurp(r.dir / "report.csv");
    CHECK(csv.find("predictor,median_mm,mean_mm,std_mm") != std::string::npos);
    const Dataset test = load(r.files.test);
    const auto rows = evaluation_rows(test, {{"krr", load_model(r.krr)}, {"linear", load_model(r.linear)}},
                                      derive_seeds(7).random_baseline);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].name == "center");
    CHECK(rows[1].name == "random");
    CHECK(rows[2].stats.median < rows[3].stats.median);
    CHECK(rows[3].stats.median < rows[0].stats.median);
    for (const char* f : {"report.txt", "vector_field_krr.csv", "vector_field_linear.svg"}) {
        CHECK(fs::exists(r.dir / f));
    }
    CHECK(slurp(r.dir / "report.txt").find(config_hash(default_config())) != std::string::npos);
}

TEST_CASE("a perfect model yields a zero row") {
    // Features are the coordinates themselves; an identity linear map is exact.
    const SensorGeometry g;
    Dataset test{.geometry = g};
    for (const Point2& p : grid_points(g, 2.0)) {
        test.records.emplace_back(g, Indentation{p, 3.0}, std::vector<double>{p.x, p.y, 0, 0, 0, 0});
    }
    LinearModel ident;
    ident.weights = Eigen::MatrixXd::Zero(2, 6);
    ident.weights(0, 0) = 1.0;
    ident.weights(1, 1) = 1.0;
    ident.intercept = Eigen::Vector2d::Zero();
    const auto rows = evaluation_rows(test, {{"linear", ident}}, 1);
    CHECK(rows.back().stats.median == 0.0);
    CHECK(rows.back().stats.mean == 0.0);
    CHECK(rows.back().stats.std_dev == 0.0);

    LinearModel wrong;
    wrong.weights = Eigen::MatrixXd::Zero(2, 5);
    wrong.intercept = Eigen::Vector2d::Zero();
    CHECK_THROWS_AS(evaluation_rows(test, {{"linear", wrong}}, 1), ShapeError);
}

TEST_CASE("reruns are byte identical") {
    const Run& r = default_run();
    const fs::path dir = testing_support::scratch_dir("pipeline_rerun");
    const RunConfig cfg = default_config();
    std::ostringstream log;
    const SimulateOutputs f = cmd_simulate(cfg, dir, log);
    const fs::path lin = cmd_train(cfg, f.train, Method::linear, dir, log);
    CHECK(slurp(f.train) == slurp(r.files.train));
    CHECK(slurp(f.test) == slurp(r.files.test));
    CHECK(slurp(lin) == slurp(r.linear));
}
