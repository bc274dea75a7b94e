#pragma once

#include <span>

namespace piezoloc {

/// Middle order statistic; mean of the two central values for even counts.
/// Throws ShapeError on empty input.
double median(std::span<const double> values);
double mean(std::span<const double> values);
/// Population standard deviation.
double std_dev(std::span<const double> values);

} // namespace piezoloc
