#include "piezoloc/signal_chain.hpp"

#include "piezoloc/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace piezoloc {
namespace {

constexpr double kSaturationGuard = 1e-9;

// Resistance implied by a first-stage voltage, with the ratio clamped away from 1.
double rs_from_v1(double v1, const CircuitConfig& cfg) {
    const double ratio = std::clamp(v1 / cfg.vcc, 0.0, 1.0 - kSaturationGuard);
    return *cfg.r1 / (1.0 - ratio);
}

double v1_from_count_voltage(double v2, std::uint32_t baseline, const CircuitConfig& cfg) {
    return (v2 - cfg.offset()) / cfg.gain + dac_voltage(baseline, cfg);
}

void require_r1(const CircuitConfig& cfg) {
    if (!cfg.r1) {
        throw ConfigError("circuit: r1 unresolved; call resolve() with the rest resistances first");
    }
}

} // namespace

void validate(const CircuitConfig& cfg, std::span<const double> rest_resistances) {
    if (!(cfg.vcc > 0.0)) throw ConfigError("circuit: vcc must be positive");
    if (!(cfg.gain > 0.0)) throw ConfigError("circuit: gain must be positive");
    if (cfg.dac_bits < 8 || cfg.dac_bits > 16) throw ConfigError("circuit: dac_bits must lie in [8, 16]");
    if (cfg.adc_bits < 8 || cfg.adc_bits > 16) throw ConfigError("circuit: adc_bits must lie in [8, 16]");
    if (!(cfg.frame_period_ms > 0.0)) throw ConfigError("circuit: frame_period_ms must be positive");
    if (cfg.r1) {
        if (!(*cfg.r1 > 0.0)) throw ConfigError("circuit: r1 must be positive");
        for (double r : rest_resistances) {
            if (!(*cfg.r1 < r)) {
                throw ConfigError("circuit: r1 must be smaller than every rest pair resistance");
            }
        }
    }
}

CircuitConfig resolve(CircuitConfig cfg, std::span<const double> rest_resistances) {
    if (!cfg.r1) {
        if (rest_resistances.empty()) {
            throw ConfigError("circuit: cannot derive r1 without rest resistances");
        }
        cfg.r1 = 0.5 * *std::min_element(rest_resistances.begin(), rest_resistances.end());
    }
    validate(cfg, rest_resistances);
    return cfg;
}

double round_half_up(double x) { return std::floor(x + 0.5); }

double first_stage(double rs, const CircuitConfig& cfg) {
    require_r1(cfg);
    if (!(rs > 0.0)) {
        throw DomainError("first stage: resistance must be positive");
    }
    return std::clamp(cfg.vcc - cfg.vcc * (*cfg.r1 / rs), 0.0, cfg.vcc);
}

std::vector<std::uint32_t> capture_baseline(std::span<const double> rest_resistances, const CircuitConfig& cfg) {
    std::vector<std::uint32_t> codes;
    codes.reserve(rest_resistances.size());
    const double full = cfg.dac_full_scale();
    for (double rs : rest_resistances) {
        const double v1 = first_stage(rs, cfg);
        codes.push_back(static_cast<std::uint32_t>(std::clamp(round_half_up(v1 / cfg.vcc * full), 0.0, full)));
    }
    return codes;
}

double dac_voltage(std::uint32_t code, const CircuitConfig& cfg) {
    return static_cast<double>(code) / static_cast<double>(cfg.dac_full_scale()) * cfg.vcc;
}

double second_stage(double v1, double vref, const CircuitConfig& cfg) {
    return std::clamp(cfg.gain * (v1 - vref) + cfg.offset(), 0.0, cfg.vcc);
}

std::uint32_t adc_read(double v, const CircuitConfig& cfg, double noise_sd, std::mt19937_64& rng) {
    if (!(noise_sd >= 0.0)) {
        throw DomainError("adc: noise standard deviation must be non-negative");
    }
    double noisy = v;
    if (noise_sd > 0.0) {
        noisy += std::normal_distribution<double>(0.0, noise_sd)(rng);
    }
    const double full = cfg.adc_full_scale();
    return static_cast<std::uint32_t>(std::clamp(round_half_up(noisy / cfg.vcc * full), 0.0, full));
}

bool is_saturated(std::uint32_t count, const CircuitConfig& cfg) {
    return count == 0 || count >= cfg.adc_full_scale();
}

Frame scan_frame(std::span<const double> resistances, std::span<const std::uint32_t> baselines,
                 const CircuitConfig& cfg, double t_ms, double noise_sd, std::mt19937_64& rng) {
    if (resistances.size() != baselines.size()) {
        throw ShapeError("scan frame: one baseline per pair required");
    }
    Frame frame;
    frame.t_ms = t_ms;
    frame.baseline_refs.assign(baselines.begin(), baselines.end());
    frame.counts.reserve(resistances.size());
    for (std::size_t k = 0; k < resistances.size(); ++k) {
        const double v1 = first_stage(resistances[k], cfg);
        const double v2 = second_stage(v1, dac_voltage(baselines[k], cfg), cfg);
        frame.counts.push_back(adc_read(v2, cfg, noise_sd, rng));
    }
    return frame;
}

PairEstimate counts_to_features(const Frame& frame, std::span<const std::uint32_t> baselines,
                                const CircuitConfig& cfg) {
    require_r1(cfg);
    if (frame.counts.size() != baselines.size()) {
        throw ShapeError("counts_to_features: one baseline per pair required");
    }
    PairEstimate out;
    out.delta_rs.reserve(baselines.size());
    out.saturated.reserve(baselines.size());
    const double full = cfg.adc_full_scale();
    for (std::size_t k = 0; k < baselines.size(); ++k) {
        const std::uint32_t count = frame.counts[k];
        if (count > cfg.adc_full_scale()) {
            throw RangeError("counts_to_features: count exceeds ADC full scale");
        }
        const double v2 = static_cast<double>(count) / full * cfg.vcc;
        const double v1 = v1_from_count_voltage(v2, baselines[k], cfg);
        const double vref = dac_voltage(baselines[k], cfg);
        const bool guarded = v1 / cfg.vcc >= 1.0 - kSaturationGuard;
        out.delta_rs.push_back(rs_from_v1(v1, cfg) - rs_from_v1(vref, cfg));
        out.saturated.push_back(guarded || is_saturated(count, cfg));
    }
    return out;
}

Interval count_preimage(std::uint32_t count, std::uint32_t baseline, const CircuitConfig& cfg) {
    require_r1(cfg);
    const double full = cfg.adc_full_scale();
    const double step = cfg.vcc / full;
    const double v2_lo = (static_cast<double>(count) - 0.5) * step;
    const double v2_hi = (static_cast<double>(count) + 0.5) * step;
    const double ref = rs_from_v1(dac_voltage(baseline, cfg), cfg);
    // rs is increasing in v1, v1 increasing in v2.
    return {rs_from_v1(v1_from_count_voltage(v2_lo, baseline, cfg), cfg) - ref,
            rs_from_v1(v1_from_count_voltage(v2_hi, baseline, cfg), cfg) - ref};
}

FrameStream::FrameStream(CircuitConfig cfg, std::vector<std::uint32_t> baselines, double noise_sd, std::uint64_t seed)
    : cfg_(std::move(cfg)), baselines_(std::move(baselines)), noise_sd_(noise_sd), rng_(seed) {}

Frame FrameStream::next(std::span<const double> resistances) {
    const double t = static_cast<double>(emitted_) * cfg_.frame_period_ms;
    ++emitted_;
    return scan_frame(resistances, baselines_, cfg_, t, noise_sd_, rng_);
}

std::string frame_to_json_line(const Frame& frame, const CircuitConfig& cfg) {
    nlohmann::ordered_json j;
    j["t_ms"] = frame.t_ms;
    j["counts"] = frame.counts;
    std::vector<bool> saturated;
    saturated.reserve(frame.counts.size());
    for (std::uint32_t c : frame.counts) {
        saturated.push_back(is_saturated(c, cfg));
    }
    j["saturated"] = saturated;
    return j.dump();
}

} // namespace piezoloc
