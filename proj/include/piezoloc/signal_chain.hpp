#pragma once

// Emulation of the two-stage pairwise measurement circuit: an inverting
// first stage (V1 = Vcc - Vcc * R1 / Rs), a DAC-held rest reference, a
// difference amplifier with mid-rail offset, and ADC quantisation, cycled
// over every electrode pair by the switching matrix once per frame.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace piezoloc {

struct CircuitConfig {
    double vcc = 5.0;
    /// First-stage reference resistor. Empty means 0.5 x the smallest rest resistance.
    std::optional<double> r1;
    double gain = 50.0;
    int dac_bits = 12;
    int adc_bits = 10;
    double frame_period_ms = 25.0;
    /// Added after the gain so signed differences stay inside the ADC range.
    std::optional<double> output_offset;  // defaults to vcc / 2

    double offset() const { return output_offset.value_or(vcc / 2.0); }
    std::uint32_t dac_full_scale() const { return (1u << dac_bits) - 1u; }
    std::uint32_t adc_full_scale() const { return (1u << adc_bits) - 1u; }

    friend bool operator==(const CircuitConfig&, const CircuitConfig&) = default;
};

/// Checks ranges and, when r1 is set, that it lies strictly below every rest resistance.
void validate(const CircuitConfig& cfg, std::span<const double> rest_resistances);

/// Returns cfg with r1 filled from the rest resistances if it was left empty, then validates.
CircuitConfig resolve(CircuitConfig cfg, std::span<const double> rest_resistances);

/// Round half up, the rule used for both converters.
double round_half_up(double x);

double first_stage(double rs, const CircuitConfig& cfg);

/// DAC codes reproducing the first-stage rest voltage of each pair.
std::vector<std::uint32_t> capture_baseline(std::span<const double> rest_resistances, const CircuitConfig& cfg);

double dac_voltage(std::uint32_t code, const CircuitConfig& cfg);

double second_stage(double v1, double vref, const CircuitConfig& cfg);

/// Quantise v (plus Gaussian noise of noise_sd volts drawn from rng) to an ADC count.
std::uint32_t adc_read(double v, const CircuitConfig& cfg, double noise_sd, std::mt19937_64& rng);

struct Frame {
    double t_ms = 0.0;
    std::vector<std::uint32_t> counts;
    std::vector<std::uint32_t> baseline_refs;

    friend bool operator==(const Frame&, const Frame&) = default;
};

/// A count at either rail: the difference amplifier (or ADC) clipped.
bool is_saturated(std::uint32_t count, const CircuitConfig& cfg);

/// One pass of the switching matrix over all pairs in canonical order.
Frame scan_frame(std::span<const double> resistances, std::span<const std::uint32_t> baselines,
                 const CircuitConfig& cfg, double t_ms, double noise_sd, std::mt19937_64& rng);

struct PairEstimate {
    std::vector<double> delta_rs;  // ohms, relative to the DAC-held reference
    std::vector<bool> saturated;
};

/// Inverts quantisation, gain and the first stage. Each estimate is the
/// resistance implied by the count minus the resistance implied by the
/// held DAC reference.
PairEstimate counts_to_features(const Frame& frame, std::span<const std::uint32_t> baselines,
                                const CircuitConfig& cfg);

/// Bounds [lo, hi] on the delta a noise-free count can stand for: the
/// pre-image of the count's half-step interval through the chain.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};
Interval count_preimage(std::uint32_t count, std::uint32_t baseline, const CircuitConfig& cfg);

/// Emits frames at a fixed cadence; owns its own noise generator.
class FrameStream {
public:
    FrameStream(CircuitConfig cfg, std::vector<std::uint32_t> baselines, double noise_sd, std::uint64_t seed);

    Frame next(std::span<const double> resistances);
    std::size_t frames_emitted() const { return emitted_; }

private:
    CircuitConfig cfg_;
    std::vector<std::uint32_t> baselines_;
    double noise_sd_;
    std::mt19937_64 rng_;
    std::size_t emitted_ = 0;
};

/// JSON-lines record: {"t_ms":..,"counts":[..],"saturated":[..]}.
std::string frame_to_json_line(const Frame& frame, const CircuitConfig& cfg);

} // namespace piezoloc
