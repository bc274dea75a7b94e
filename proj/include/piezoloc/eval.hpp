#pragma once

// Evaluation: baseline predictors, localisation error statistics and the
// figure-data exports (error vector field, error heatmap).

#include "piezoloc/core.hpp"
#include "piezoloc/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace piezoloc {

struct PointError {
    Point2 truth;
    Point2 predicted;
    double error = 0.0;  // mm, Euclidean
};

struct ErrorStats {
    double median = 0.0;
    double mean = 0.0;
    double std_dev = 0.0;  // population
    std::vector<PointError> per_point;
};

using Predictor = std::function<Point2(std::span<const double>)>;

ErrorStats summarize(std::vector<PointError> per_point);

/// Runs the predictor over every test record, in order.
ErrorStats evaluate(const Predictor& predictor, const Dataset& test);

enum class BaselineKind { center, random };

/// Feature-blind reference predictor. The random kind owns its generator,
/// so every draw advances it.
class Baseline {
public:
    Baseline(BaselineKind kind, SensorGeometry geometry, std::uint64_t seed = 0);

    BaselineKind kind() const { return kind_; }
    Point2 predict(std::span<const double> features);

private:
    BaselineKind kind_;
    SensorGeometry geometry_;
    std::mt19937_64 rng_;
};

Point2 baseline_predict(Baseline& baseline, std::span<const double> features);

/// Evaluates a freshly seeded baseline so repeated calls give identical stats.
ErrorStats evaluate_baseline(BaselineKind kind, std::uint64_t seed, const Dataset& test);

/// CSV columns truth_x,truth_y,pred_x,pred_y,err_mm. A non-empty `comment`
/// becomes a leading "# ..." line.
void export_vector_field_csv(const ErrorStats& stats, const std::filesystem::path& path,
                             const std::string& comment = {});
std::vector<PointError> read_vector_field_csv(const std::filesystem::path& path);

/// Arrows from truth to prediction over the sensor outline; canvas keeps the
/// sensor aspect ratio.
std::string vector_field_svg(const ErrorStats& stats, const SensorGeometry& geometry, const std::string& comment = {});

/// Error magnitudes on a regular lattice; values are row-major, one row per y.
struct Heatmap {
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> values;

    std::size_t columns() const { return xs.size(); }
    std::size_t rows() const { return ys.size(); }
    double at(std::size_t row, std::size_t col) const { return values[row * xs.size() + col]; }
};

/// Throws ShapeError unless the truth points form a full, evenly spaced lattice
/// with each node hit exactly once.
Heatmap build_heatmap(const ErrorStats& stats);

/// Mean error over cells on the lattice boundary and over interior cells.
struct EdgeInteriorMeans {
    double edge = 0.0;
    double interior = 0.0;
};
EdgeInteriorMeans edge_interior_means(const Heatmap& map);

/// Header "y_mm\x_mm,x0,x1,..", then one row per y: "y,e(x0),e(x1),..".
void export_heatmap_csv(const Heatmap& map, const std::filesystem::path& path, const std::string& comment = {});

/// Raster with a viridis-like ramp from 0 (dark purple) to the map maximum (yellow).
std::string heatmap_svg(const Heatmap& map, const std::string& comment = {});
std::string color_ramp(double t);

/// Convenience: stats -> heatmap -> CSV (and SVG if svg_path is set).
void export_heatmap(const ErrorStats& grid_stats, const std::filesystem::path& csv_path,
                    const std::optional<std::filesystem::path>& svg_path = std::nullopt,
                    const std::string& comment = {});
void export_vector_field(const ErrorStats& stats, const SensorGeometry& geometry,
                         const std::filesystem::path& csv_path,
                         const std::optional<std::filesystem::path>& svg_path = std::nullopt,
                         const std::string& comment = {});

/// Holds grids[index] out for testing and concatenates the rest for training.
std::pair<Dataset, Dataset> leave_one_grid_out(std::span<const Dataset> grids, std::size_t index);

} // namespace piezoloc
