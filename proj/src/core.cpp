#include "piezoloc/core.hpp"

#include "piezoloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace piezoloc {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::vector<Point2> corner_electrodes(double width, double height) {
    return {{0.0, 0.0}, {width, 0.0}, {0.0, height}, {width, height}};
}

SensorGeometry::SensorGeometry() : SensorGeometry(16.0, 10.0, 6.0, corner_electrodes(16.0, 10.0)) {}

SensorGeometry::SensorGeometry(double width, double height, double thickness, std::vector<Point2> electrodes)
    : width_(width), height_(height), thickness_(thickness), electrodes_(std::move(electrodes)) {
    if (!(std::isfinite(width_) && width_ > 0.0) || !(std::isfinite(height_) && height_ > 0.0) ||
        !(std::isfinite(thickness_) && thickness_ > 0.0)) {
        throw ConfigError("sensor geometry: width, height and thickness must be positive");
    }
    if (electrodes_.size() < 2) {
        throw ConfigError("sensor geometry: at least 2 electrodes required");
    }
    for (std::size_t i = 0; i < electrodes_.size(); ++i) {
        const Point2 e = electrodes_[i];
        if (!std::isfinite(e.x) || !std::isfinite(e.y) || e.x < 0.0 || e.x > width_ || e.y < 0.0 ||
            e.y > height_) {
            throw ConfigError("sensor geometry: electrode " + std::to_string(i) + " outside the sensor area");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (electrodes_[j] == e) {
                throw ConfigError("sensor geometry: electrodes " + std::to_string(j) + " and " +
                                  std::to_string(i) + " coincide");
            }
        }
    }
}

std::size_t SensorGeometry::pair_count() const { return piezoloc::pair_count(electrodes_.size()); }

bool contains(const SensorGeometry& geometry, Point2 p) {
    return p.x >= 0.0 && p.x <= geometry.width() && p.y >= 0.0 && p.y <= geometry.height();
}

ElectrodePair::ElectrodePair(std::size_t first, std::size_t second) {
    if (first == second) {
        throw ConfigError("electrode pair needs two distinct electrodes");
    }
    a_ = std::min(first, second);
    b_ = std::max(first, second);
}

std::vector<ElectrodePair> enumerate_pairs(std::size_t n) {
    std::vector<ElectrodePair> pairs;
    pairs.reserve(pair_count(n));
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            pairs.emplace_back(a, b);
        }
    }
    return pairs;
}

void validate(const Indentation& ind, const SensorGeometry& geometry) {
    if (!std::isfinite(ind.location.x) || !std::isfinite(ind.location.y) || !contains(geometry, ind.location)) {
        throw ConfigError("indentation location outside the sensor area");
    }
    if (!(ind.depth >= 0.0 && ind.depth <= geometry.thickness())) {
        throw ConfigError("indentation depth must lie in [0, thickness]");
    }
}

IndentationRecord::IndentationRecord(const SensorGeometry& geometry, Indentation indentation, std::vector<double> dr)
    : indentation_(indentation), dr_(std::move(dr)) {
    validate(indentation_, geometry);
    if (dr_.size() != geometry.pair_count()) {
        throw ShapeError("indentation record: expected " + std::to_string(geometry.pair_count()) +
                         " resistance changes, got " + std::to_string(dr_.size()));
    }
    for (double v : dr_) {
        if (!std::isfinite(v)) {
            throw DomainError("indentation record: non-finite resistance change");
        }
    }
}

} // namespace piezoloc
