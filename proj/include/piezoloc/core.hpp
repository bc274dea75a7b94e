#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace piezoloc {

/// Location on the sensor surface, in millimetres.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(Point2 a, Point2 b);

/// Rectangular effective sensing area with embedded electrodes.
///
/// The origin sits at one corner of the rectangle, x runs along the long
/// (width) side and y along the short (height) side.
class SensorGeometry {
public:
    /// 16 x 10 mm, 6 mm thick, four corner electrodes.
    SensorGeometry();
    SensorGeometry(double width, double height, double thickness, std::vector<Point2> electrodes);

    double width() const { return width_; }
    double height() const { return height_; }
    double thickness() const { return thickness_; }
    const std::vector<Point2>& electrodes() const { return electrodes_; }
    std::size_t electrode_count() const { return electrodes_.size(); }
    std::size_t pair_count() const;
    Point2 center() const { return {width_ / 2.0, height_ / 2.0}; }

    friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;

private:
    double width_;
    double height_;
    double thickness_;
    std::vector<Point2> electrodes_;
};

/// Corner positions (0,0), (w,0), (0,h), (w,h) in that order.
std::vector<Point2> corner_electrodes(double width, double height);

/// Inclusive bounds test against the sensor rectangle.
bool contains(const SensorGeometry& geometry, Point2 p);

/// Unordered electrode pair stored canonically with a < b.
class ElectrodePair {
public:
    ElectrodePair(std::size_t first, std::size_t second);

    std::size_t a() const { return a_; }
    std::size_t b() const { return b_; }

    friend bool operator==(const ElectrodePair&, const ElectrodePair&) = default;
    friend auto operator<=>(const ElectrodePair&, const ElectrodePair&) = default;

private:
    std::size_t a_;
    std::size_t b_;
};

/// All pairs (a, b) with a < b < n in lexicographic order.
std::vector<ElectrodePair> enumerate_pairs(std::size_t n);

inline std::size_t pair_count(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

struct Indentation {
    Point2 location;
    double depth = 0.0;  // mm

    friend bool operator==(const Indentation&, const Indentation&) = default;
};

/// Throws ConfigError unless the indentation lies on the surface with 0 <= depth <= thickness.
void validate(const Indentation& ind, const SensorGeometry& geometry);

/// One measured tuple: contact location, depth and the per-pair resistance
/// changes (ohms) in canonical pair order.
class IndentationRecord {
public:
    IndentationRecord(const SensorGeometry& geometry, Indentation indentation, std::vector<double> dr);

    const Indentation& indentation() const { return indentation_; }
    Point2 location() const { return indentation_.location; }
    double depth() const { return indentation_.depth; }
    std::span<const double> dr() const { return dr_; }

    friend bool operator==(const IndentationRecord&, const IndentationRecord&) = default;

private:
    Indentation indentation_;
    std::vector<double> dr_;
};

} // namespace piezoloc
