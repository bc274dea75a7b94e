#include "piezoloc/errors.hpp"
#include "piezoloc/signal_chain.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <vector>

using namespace piezoloc;

namespace {

CircuitConfig with_r1(double r1) {
    CircuitConfig c;
    c.r1 = r1;
    return c;
}

} // namespace

TEST_CASE("first stage follows the inverting-stage law") {
    const CircuitConfig c = with_r1(1000.0);
    CHECK(first_stage(2000.0, c) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(first_stage(1000.0, c) == 0.0);
    CHECK(first_stage(1e9, c) == doctest::Approx(4.999995).epsilon(1e-12));
    CHECK(first_stage(500.0, c) == 0.0);  // clamped
    CHECK_THROWS_AS(first_stage(0.0, c), DomainError);
    CHECK_THROWS_AS(first_stage(-5.0, c), DomainError);
    CHECK_THROWS_AS(first_stage(2000.0, CircuitConfig{}), ConfigError);
}

TEST_CASE("first stage is strictly increasing in rs above r1") {
    const CircuitConfig c = with_r1(1000.0);
    double prev = first_stage(1000.0, c);
    for (double rs = 1001.0; rs < 1e6; rs *= 1.05) {
        const double v = first_stage(rs, c);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("baseline capture quantises with round half up") {
    const CircuitConfig c = with_r1(1000.0);
    const std::vector<double> rest{2000.0, 1000.0, 1e12};
    const auto codes = capture_baseline(rest, c);
    CHECK(codes == std::vector<std::uint32_t>{2048, 0, 4095});
    CHECK(dac_voltage(2048, c) == doctest::Approx(2048.0 / 4095.0 * 5.0));
    CHECK(dac_voltage(2048, c) == doctest::Approx(2.5006).epsilon(1e-5));
    CHECK(dac_voltage(0, c) == 0.0);
    CHECK(dac_voltage(4095, c) == 5.0);
    CHECK(round_half_up(511.5) == 512.0);
    CHECK(round_half_up(2.49) == 2.0);
}

TEST_CASE("second stage") {
    const CircuitConfig c = with_r1(1000.0);
    CHECK(second_stage(1.7, 1.7, c) == 2.5);
    CHECK(second_stage(1.71, 1.70, c) == doctest::Approx(3.0));
    CHECK(second_stage(2.7, 1.7, c) == 5.0);
    CHECK(second_stage(0.7, 1.7, c) == 0.0);
    CircuitConfig zero = c;
    zero.output_offset = 0.0;
    CHECK(second_stage(1.7, 1.7, zero) == 0.0);
}

TEST_CASE("adc read") {
    const CircuitConfig c = with_r1(1000.0);
    std::mt19937_64 rng(1);
    CHECK(adc_read(0.0, c, 0.0, rng) == 0);
    CHECK(adc_read(5.0, c, 0.0, rng) == 1023);
    CHECK(adc_read(2.5, c, 0.0, rng) == 512);
    CHECK(adc_read(7.0, c, 0.0, rng) == 1023);
    CHECK(adc_read(-1.0, c, 0.0, rng) == 0);
    CHECK_THROWS_AS(adc_read(1.0, c, -0.1, rng), DomainError);
}

TEST_CASE("scan frame at rest reads mid-rail when the rest voltage sits on a DAC code") {
    const double r1 = 1000.0;
    const CircuitConfig c = with_r1(r1);
    // V1 = 5 * (1 - 1/3) and 5 * (1 - 2/3) are exact DAC codes 2730 and 1365.
    const std::vector<double> rest{3.0 * r1, 1.5 * r1};
    const auto base = capture_baseline(rest, c);
    CHECK(base == std::vector<std::uint32_t>{2730, 1365});
    std::mt19937_64 rng(0);
    const Frame f = scan_frame(rest, base, c, 0.0, 0.0, rng);
    CHECK(f.counts == std::vector<std::uint32_t>{512, 512});
    CHECK(f.baseline_refs == base);
}

TEST_CASE("scan frame pairs are independent") {
    const CircuitConfig c = with_r1(20e3);
    const std::vector<double> rest{40e3, 45e3, 50e3, 41e3, 43e3, 60e3};
    const auto base = capture_baseline(rest, c);
    std::mt19937_64 rng(0);
    const Frame at_rest = scan_frame(rest, base, c, 0.0, 0.0, rng);
    std::vector<double> bumped = rest;
    bumped[3] *= 1.01;
    const Frame loaded = scan_frame(bumped, base, c, 25.0, 0.0, rng);
    for (std::size_t k = 0; k < rest.size(); ++k) {
        if (k == 3) {
            CHECK(loaded.counts[k] > at_rest.counts[k]);
        } else {
            CHECK(loaded.counts[k] == at_rest.counts[k]);
        }
    }
    CHECK_THROWS_AS(scan_frame(std::vector<double>(5, 40e3), base, c, 0.0, 0.0, rng), ShapeError);
}

TEST_CASE("frame stream cadence is 40 frames per second") {
    const CircuitConfig c = with_r1(20e3);
    const std::vector<double> rest{40e3, 45e3};
    FrameStream stream(c, capture_baseline(rest, c), 0.0, 9);
    std::vector<Frame> frames;
    for (int k = 0; k < 41; ++k) frames.push_back(stream.next(rest));
    CHECK(frames[1].t_ms - frames[0].t_ms == 25.0);
    CHECK(frames.back().t_ms - frames.front().t_ms == 1000.0);
    CHECK(stream.frames_emitted() == 41);
    for (std::size_t n = 1; n <= frames.size(); ++n) {
        CHECK(frames[n - 1].t_ms - frames[0].t_ms == static_cast<double>(n - 1) * c.frame_period_ms);
    }
}

TEST_CASE("noisy streams are reproducible per seed") {
    const CircuitConfig c = with_r1(20e3);
    const std::vector<double> rest{40e3, 45e3, 50e3};
    const auto base = capture_baseline(rest, c);
    FrameStream a(c, base, 0.01, 5), b(c, base, 0.01, 5), other(c, base, 0.01, 6);
    bool differs = false;
    for (int k = 0; k < 20; ++k) {
        const Frame fa = a.next(rest);
        CHECK(fa == b.next(rest));
        differs |= fa.counts != other.next(rest).counts;
    }
    CHECK(differs);
}

TEST_CASE("counts_to_features at mid-rail is within one step of zero") {
    const CircuitConfig c = with_r1(20e3);
    const std::vector<std::uint32_t> base{2048};
    Frame f;
    f.counts = {512};
    const PairEstimate est = counts_to_features(f, base, c);
    const Interval step = count_preimage(512, 2048, c);
    CHECK(std::abs(est.delta_rs[0]) <= step.width());
    CHECK_FALSE(est.saturated[0]);
}

TEST_CASE("counts_to_features flags saturation") {
    const CircuitConfig c = with_r1(20e3);
    const std::vector<std::uint32_t> base{2048, 2048};
    Frame f;
    f.counts = {1023, 0};
    const PairEstimate est = counts_to_features(f, base, c);
    CHECK(est.saturated[0]);
    CHECK(est.saturated[1]);
    CHECK(std::isfinite(est.delta_rs[0]));
    // A reference at full scale pushes V1 against the guard.
    Frame g;
    g.counts = {700};
    const PairEstimate guarded = counts_to_features(g, std::vector<std::uint32_t>{4095}, c);
    CHECK(guarded.saturated[0]);
    CHECK(std::isfinite(guarded.delta_rs[0]));
    Frame bad;
    bad.counts = {1024};
    CHECK_THROWS_AS(counts_to_features(bad, std::vector<std::uint32_t>{2048}, c), RangeError);
}

TEST_CASE("noise-free round trip stays inside the quantisation pre-image") {
    const double r0 = 30e3;
    const CircuitConfig c = with_r1(0.5 * r0);
    const std::vector<double> rest{r0};
    const auto base = capture_baseline(rest, c);
    const double ref = *c.r1 / (1.0 - dac_voltage(base[0], c) / c.vcc);
    std::mt19937_64 rng(0);
    std::uint32_t prev_count = 0;
    std::size_t checked = 0;
    for (int i = 0; i <= 400; ++i) {
        const double rs = r0 * (0.97 + 0.06 * i / 400.0);
        const std::vector<double> r{rs};
        const Frame f = scan_frame(r, base, c, 0.0, 0.0, rng);
        CHECK(f.counts[0] >= prev_count);
        prev_count = f.counts[0];
        const PairEstimate est = counts_to_features(f, base, c);
        if (est.saturated[0]) continue;
        const Interval box = count_preimage(f.counts[0], base[0], c);
        const double truth = rs - ref;
        CHECK(truth >= box.lo - 1e-9 * r0);
        CHECK(truth <= box.hi + 1e-9 * r0);
        CHECK(std::abs(est.delta_rs[0] - truth) <= box.width());
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("resolve derives r1 and validates it") {
    const std::vector<double> rest{40e3, 30e3, 50e3};
    const CircuitConfig c = resolve(CircuitConfig{}, rest);
    CHECK(*c.r1 == 15e3);
    CHECK_THROWS_AS(resolve(with_r1(30e3), rest), ConfigError);
    CircuitConfig bits;
    bits.adc_bits = 7;
    CHECK_THROWS_AS(validate(bits, {}), ConfigError);
    bits.adc_bits = 10;
    bits.frame_period_ms = 0;
    CHECK_THROWS_AS(validate(bits, {}), ConfigError);
}

TEST_CASE("frame JSON line") {
    const CircuitConfig c = with_r1(20e3);
    Frame f;
    f.t_ms = 50.0;
    f.counts = {0, 512, 1023};
    const auto j = nlohmann::json::parse(frame_to_json_line(f, c));
    CHECK(j.at("t_ms").get<double>() == 50.0);
    CHECK(j.at("counts").get<std::vector<int>>() == std::vector<int>{0, 512, 1023});
    CHECK(j.at("saturated").get<std::vector<bool>>() == std::vector<bool>{true, false, true});
    CHECK(j.size() == 3);
}
