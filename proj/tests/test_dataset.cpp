#include "oracles.hpp"

#include "piezoloc/dataset.hpp"
#include "piezoloc/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

using namespace piezoloc;

namespace {

bool point_less(Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }

std::vector<Point2> locations(std::span<const Indentation> inds) {
    std::vector<Point2> out;
    for (const auto& i : inds) out.push_back(i.location);
    return out;
}

const ForwardModel& default_model() {
    static const ForwardModel model{LatticeModel{}};
    return model;
}

std::string read_all(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

} // namespace

TEST_CASE("grid protocol counts") {
    const SensorGeometry g;
    ProtocolSpec spec{.kind = ProtocolKind::grid, .spacing = 2.0, .depth = 3.0, .seed = 11, .repeats = 1};
    CHECK(grid_protocol(g, spec).size() == 54);
    spec.repeats = 4;
    const auto all = grid_protocol(g, spec);
    CHECK(all.size() == 216);
    for (const auto& ind : all) CHECK(ind.depth == 3.0);
    spec.spacing = 3.0;
    CHECK_THROWS_AS(grid_protocol(g, spec), ConfigError);
    spec.kind = ProtocolKind::random;
    CHECK_THROWS_AS(grid_protocol(g, spec), ConfigError);
}

TEST_CASE("grid protocol covers each lattice point once per repeat, in shuffled order") {
    const SensorGeometry g;
    const ProtocolSpec spec{.kind = ProtocolKind::grid, .spacing = 2.0, .depth = 3.0, .seed = 5, .repeats = 4};
    const auto all = grid_protocol(g, spec);
    std::vector<Point2> lattice = grid_points(g, 2.0);
    std::sort(lattice.begin(), lattice.end(), point_less);
    std::vector<std::vector<Point2>> orders;
    for (std::size_t r = 0; r < 4; ++r) {
        std::vector<Point2> rep = locations(std::span(all).subspan(r * 54, 54));
        orders.push_back(rep);
        std::sort(rep.begin(), rep.end(), point_less);
        CHECK(rep == lattice);
    }
    CHECK(orders[0] != orders[1]);  // fresh shuffle per repeat
    CHECK(orders[0] != grid_points(g, 2.0));
    CHECK(grid_protocol(g, spec) == all);
    ProtocolSpec other = spec;
    other.seed = 6;
    CHECK(grid_protocol(g, other) != all);
}

TEST_CASE("random protocol") {
    const SensorGeometry g;
    ProtocolSpec spec{.kind = ProtocolKind::random, .count = 60, .depth = 3.0, .seed = 3};
    const auto a = random_protocol(g, spec);
    CHECK(a.size() == 60);
    for (const auto& ind : a) CHECK(contains(g, ind.location));
    CHECK(random_protocol(g, spec) == a);
    spec.seed = 4;
    CHECK(random_protocol(g, spec) != a);
    spec.count = 0;
    CHECK_THROWS_AS(random_protocol(g, spec), ConfigError);
}

TEST_CASE("random protocol quadrant balance") {
    const SensorGeometry g;
    for (std::size_t count : {60u, 1000u}) {
        const ProtocolSpec spec{.kind = ProtocolKind::random, .count = count, .depth = 3.0, .seed = 0};
        std::array<double, 4> quadrant{};
        for (const auto& ind : random_protocol(g, spec)) {
            const int q = (ind.location.x >= 8.0 ? 1 : 0) + (ind.location.y >= 5.0 ? 2 : 0);
            quadrant[q] += 1;
        }
        const double n = static_cast<double>(count);
        for (double q : quadrant) CHECK(std::abs(q - n / 4) <= 4 * std::sqrt(n));
    }
}

TEST_CASE("collect: zero depth gives zero changes") {
    const SensorGeometry g;
    const ProtocolSpec spec{.kind = ProtocolKind::grid, .spacing = 2.0, .depth = 0.0, .seed = 1};
    const Dataset d = collect(grid_protocol(g, spec), default_model(), {});
    CHECK(d.size() == 54);
    for (const auto& rec : d.records) {
        for (double v : rec.dr()) CHECK(v == 0.0);
    }
}

TEST_CASE("collect is deterministic and noise is seeded") {
    const SensorGeometry g;
    const ProtocolSpec spec{.kind = ProtocolKind::random, .count = 10, .depth = 3.0, .seed = 2};
    const auto protocol = random_protocol(g, spec);
    const CollectOptions noisy{.noise_sd = 30.0, .noise_seed = 9};
    const Dataset a = collect(protocol, default_model(), noisy);
    CHECK(a == collect(protocol, default_model(), noisy));
    const Dataset clean = collect(protocol, default_model(), {});
    CHECK_FALSE(a == clean);
    double sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t k = 0; k < 6; ++k) {
            const double e = a.records[i].dr()[k] - clean.records[i].dr()[k];
            sq += e * e;
            ++n;
        }
    }
    const double rms = std::sqrt(sq / static_cast<double>(n));
    CHECK(rms > 15.0);
    CHECK(rms < 45.0);
}

TEST_CASE("default ideal noise is 1% of the median centre change") {
    const IndentationRecord rec = default_model().simulate({{8, 5}, 3});
    std::vector<double> dr(rec.dr().begin(), rec.dr().end());
    std::sort(dr.begin(), dr.end());
    CHECK(default_ideal_noise(default_model(), 3.0) == doctest::Approx(0.01 * 0.5 * (dr[2] + dr[3])));
}

TEST_CASE("circuit features agree with ideal features within the quantisation bound") {
    const SensorGeometry g;
    const ForwardModel& model = default_model();
    CircuitConfig circuit;
    circuit.gain = 3.0;  // keeps every reading off the rails, even beside an electrode
    const ProtocolSpec spec{.kind = ProtocolKind::random, .count = 40, .depth = 3.0, .seed = 21};
    const auto protocol = random_protocol(g, spec);
    const Dataset ideal = collect(protocol, model, {});
    const Dataset measured = collect(protocol, model, {.source = FeatureSource::circuit, .circuit = circuit});
    REQUIRE(measured.provenance.saturated_features == 0);

    const CircuitConfig cfg = measured.provenance.collection.circuit;
    REQUIRE(cfg.r1.has_value());
    const auto base = capture_baseline(model.rest_resistances(), cfg);
    std::mt19937_64 rng(0);
    const Frame rest = scan_frame(model.rest_resistances(), base, cfg, 0, 0, rng);
    for (std::size_t i = 0; i < protocol.size(); ++i) {
        const Frame loaded = scan_frame(model.indented_resistances(protocol[i]), base, cfg, 0, 0, rng);
        for (std::size_t k = 0; k < 6; ++k) {
            const double bound = count_preimage(rest.counts[k], base[k], cfg).width() +
                                 count_preimage(loaded.counts[k], base[k], cfg).width();
            CHECK(std::abs(measured.records[i].dr()[k] - ideal.records[i].dr()[k]) <= bound);
        }
    }
}

TEST_CASE("circuit collection requires r1 below every rest resistance") {
    CircuitConfig circuit;
    circuit.r1 = 1e9;
    const std::vector<Indentation> one{{{8, 5}, 3}};
    CHECK_THROWS_AS(collect(one, default_model(), {.source = FeatureSource::circuit, .circuit = circuit}), ConfigError);
}

TEST_CASE("save/load round trip") {
    const auto dir = testing_support::scratch_dir("dataset_roundtrip");
    const SensorGeometry g;
    const ProtocolSpec spec{.kind = ProtocolKind::grid, .spacing = 2.0, .depth = 3.0, .seed = 77, .repeats = 4};
    Dataset d = collect(grid_protocol(g, spec), default_model(), {.noise_sd = 31.5, .noise_seed = 8});
    d.provenance.protocol = spec;
    d.provenance.label = "train";
    d.provenance.config_hash = "0123456789abcdef";
    REQUIRE(d.size() == 216);
    save(d, dir / "d.jsonl");
    const Dataset back = load(dir / "d.jsonl");
    CHECK(back == d);
    CHECK(back.provenance.protocol.seed == 77);
    CHECK(back.provenance.model.base_conductance == d.provenance.model.base_conductance);
    save(back, dir / "again.jsonl");
    CHECK(read_all(dir / "d.jsonl") == read_all(dir / "again.jsonl"));
}

TEST_CASE("save/load is lossless for arbitrary finite values") {
    const auto dir = testing_support::scratch_dir("dataset_lossless");
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> expo(-300, 300);
    std::uniform_real_distribution<double> ux(0.0, 16.0), uy(0.0, 10.0), ud(0.0, 6.0);
    const SensorGeometry g;
    Dataset d{.geometry = g};
    d.provenance.model.geometry = g;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> dr(6);
        for (double& v : dr) v = std::ldexp(mant(rng), expo(rng));
        d.records.emplace_back(g, Indentation{{ux(rng), uy(rng)}, ud(rng)}, dr);
    }
    d.records.emplace_back(g, Indentation{{16, 10}, 6}, std::vector<double>{0.0, -0.0, 1e-320, -1e308, 5e-324, 1.0});
    save(d, dir / "d.jsonl");
    const Dataset back = load(dir / "d.jsonl");
    REQUIRE(back.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(back.records[i].location() == d.records[i].location());
        CHECK(back.records[i].depth() == d.records[i].depth());
        for (std::size_t k = 0; k < 6; ++k) CHECK(back.records[i].dr()[k] == d.records[i].dr()[k]);
    }
}

TEST_CASE("load errors name the offending line") {
    const auto dir = testing_support::scratch_dir("dataset_errors");
    const SensorGeometry g;
    const ProtocolSpec spec{.kind = ProtocolKind::grid, .spacing = 2.0, .depth = 3.0, .seed = 1};
    const Dataset d = collect(grid_protocol(g, spec), default_model(), {});
    save(d, dir / "ok.jsonl");
    const std::string text = read_all(dir / "ok.jsonl");

    auto expect_error = [&](const std::string& contents, const std::string& needle) {
        {
            std::ofstream os(dir / "bad.jsonl", std::ios::binary | std::ios::trunc);
            os << contents;
        }
        try {
            load(dir / "bad.jsonl");
            FAIL("expected LoadError");
        } catch (const LoadError& e) {
            CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
        }
    };

    // cut mid-way through the fourth record (line 5)
    std::size_t pos = 0;
    for (int k = 0; k < 4; ++k) pos = text.find('\n', pos) + 1;
    expect_error(text.substr(0, pos + 20), "bad.jsonl:5:");

    // whole lines missing at the end
    std::size_t last = text.rfind('\n', text.size() - 2);
    expect_error(text.substr(0, last + 1), "expected 54 records");

    // wrong dr length on line 2
    std::string wrong = text;
    const std::size_t l2 = wrong.find('\n') + 1;
    const std::size_t dr_at = wrong.find("\"dr\":[", l2) + 6;
    wrong.insert(dr_at, "1.0,");
    expect_error(wrong, "bad.jsonl:2:");

    std::string version = text;
    version.replace(version.find("\"schema_version\":1"), 18, "\"schema_version\":9");
    expect_error(version, "schema_version 9");

    expect_error("", "bad.jsonl:1:");
    expect_error(text.substr(0, text.find('\n') + 1) + "{\"x_mm\":1}\n", "bad.jsonl:2:");

    CHECK_THROWS_AS(load(dir / "missing.jsonl"), LoadError);
}

TEST_CASE("concatenate keeps order") {
    const SensorGeometry g;
    const ProtocolSpec spec{.kind = ProtocolKind::random, .count = 5, .depth = 3.0, .seed = 1};
    const Dataset a = collect(random_protocol(g, spec), default_model(), {});
    const Dataset b = collect(random_protocol(g, {.kind = ProtocolKind::random, .count = 3, .depth = 2.0, .seed = 2}),
                              default_model(), {});
    const std::vector<Dataset> parts{a, b};
    const Dataset c = concatenate(parts);
    CHECK(c.size() == 8);
    CHECK(c.records[5] == b.records[0]);
}
