#include "piezoloc/stats.hpp"

#include "piezoloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace piezoloc {

double median(std::span<const double> values) {
    if (values.empty()) throw ShapeError("median of an empty set");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(std::span<const double> values) {
    if (values.empty()) throw ShapeError("mean of an empty set");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double std_dev(std::span<const double> values) {
    const double m = mean(values);
    double acc = 0.0;
    for (double v : values) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(values.size()));
}

} // namespace piezoloc
