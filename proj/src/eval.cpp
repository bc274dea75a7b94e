#include "piezoloc/eval.hpp"

#include "piezoloc/errors.hpp"
#include "piezoloc/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace piezoloc {
namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw LoadError("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw LoadError("write failed for " + path.string());
}

// Distinct sorted coordinates, merging values closer than tol.
std::vector<double> distinct(std::vector<double> v, double tol) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v) {
        if (out.empty() || x - out.back() > tol) out.push_back(x);
    }
    return out;
}

std::size_t index_of(const std::vector<double>& axis, double v, double tol) {
    auto it = std::lower_bound(axis.begin(), axis.end(), v - tol);
    if (it == axis.end() || std::abs(*it - v) > tol) throw ShapeError("heatmap: point off the lattice");
    return static_cast<std::size_t>(it - axis.begin());
}

void check_even(const std::vector<double>& axis, double tol, const char* name) {
    if (axis.size() < 2) throw ShapeError(std::string("heatmap: need at least two distinct ") + name + " values");
    const double step = axis[1] - axis[0];
    for (std::size_t k = 2; k < axis.size(); ++k) {
        if (std::abs(axis[k] - axis[k - 1] - step) > tol) {
            throw ShapeError(std::string("heatmap: ") + name + " values are not evenly spaced");
        }
    }
}

} // namespace

ErrorStats summarize(std::vector<PointError> per_point) {
    if (per_point.empty()) throw ShapeError("error statistics need at least one point");
    std::vector<double> errors;
    errors.reserve(per_point.size());
    for (const PointError& p : per_point) errors.push_back(p.error);
    ErrorStats s;
    s.median = median(errors);
    s.mean = mean(errors);
    s.std_dev = std_dev(errors);
    s.per_point = std::move(per_point);
    return s;
}

ErrorStats evaluate(const Predictor& predictor, const Dataset& test) {
    if (test.empty()) throw ShapeError("evaluate: empty test set");
    std::vector<PointError> points;
    points.reserve(test.size());
    for (const IndentationRecord& rec : test.records) {
        const Point2 pred = predictor(rec.dr());
        points.push_back({rec.location(), pred, distance(rec.location(), pred)});
    }
    return summarize(std::move(points));
}

Baseline::Baseline(BaselineKind kind, SensorGeometry geometry, std::uint64_t seed)
    : kind_(kind), geometry_(std::move(geometry)), rng_(seed) {}

Point2 Baseline::predict(std::span<const double>) {
    if (kind_ == BaselineKind::center) return geometry_.center();
    std::uniform_real_distribution<double> ux(0.0, geometry_.width());
    std::uniform_real_distribution<double> uy(0.0, geometry_.height());
    const double x = ux(rng_);
    return {x, uy(rng_)};
}

Point2 baseline_predict(Baseline& baseline, std::span<const double> features) { return baseline.predict(features); }

ErrorStats evaluate_baseline(BaselineKind kind, std::uint64_t seed, const Dataset& test) {
    Baseline b(kind, test.geometry, seed);
    return evaluate([&b](std::span<const double> f) { return b.predict(f); }, test);
}

void export_vector_field_csv(const ErrorStats& stats, const std::filesystem::path& path, const std::string& comment) {
    std::ostringstream os;
    if (!comment.empty()) os << "# " << comment << '\n';
    os << "truth_x,truth_y,pred_x,pred_y,err_mm\n";
    for (const PointError& p : stats.per_point) {
        os << num(p.truth.x) << ',' << num(p.truth.y) << ',' << num(p.predicted.x) << ',' << num(p.predicted.y)
           << ',' << num(p.error) << '\n';
    }
    write_file(path, os.str());
}

std::vector<PointError> read_vector_field_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw LoadError("cannot open " + path.string());
    std::vector<PointError> out;
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            if (line != "truth_x,truth_y,pred_x,pred_y,err_mm") {
                throw LoadError(path.string() + ":" + std::to_string(line_no) + ": unexpected header");
            }
            header = true;
            continue;
        }
        std::array<double, 5> v{};
        std::istringstream row(line);
        std::string cell;
        std::size_t k = 0;
        while (std::getline(row, cell, ',')) {
            if (k >= v.size()) break;
            try {
                std::size_t used = 0;
                v[k] = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw LoadError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
            ++k;
        }
        if (k != v.size()) throw LoadError(path.string() + ":" + std::to_string(line_no) + ": expected 5 columns");
        out.push_back({{v[0], v[1]}, {v[2], v[3]}, v[4]});
    }
    return out;
}

std::string vector_field_svg(const ErrorStats& stats, const SensorGeometry& geometry, const std::string& comment) {
    constexpr double scale = 40.0;  // px per mm
    const double w = geometry.width();
    const double h = geometry.height();
    const double mx = 0.1 * w;
    const double my = 0.1 * h;
    const double cw = (w + 2 * mx) * scale;
    const double ch = (h + 2 * my) * scale;
    // y grows upward on the sensor, downward in SVG.
    auto sx = [&](double x) { return (x + mx) * scale; };
    auto sy = [&](double y) { return (h + my - y) * scale; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(cw) << "\" height=\"" << px(ch)
       << "\" viewBox=\"0 0 " << px(cw) << ' ' << px(ch) << "\">\n";
    if (!comment.empty()) os << "<!-- " << comment << " -->\n";
    os << "<defs><marker id=\"head\" markerWidth=\"6\" markerHeight=\"6\" refX=\"5\" refY=\"3\" orient=\"auto\">"
          "<path d=\"M0,0 L6,3 L0,6 z\" fill=\"#c0392b\"/></marker></defs>\n";
    os << "<rect x=\"" << px(sx(0)) << "\" y=\"" << px(sy(h)) << "\" width=\"" << px(w * scale) << "\" height=\""
       << px(h * scale) << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"2\"/>\n";
    for (Point2 e : geometry.electrodes()) {
        os << "<circle cx=\"" << px(sx(e.x)) << "\" cy=\"" << px(sy(e.y)) << "\" r=\"5\" fill=\"#b87333\"/>\n";
    }
    for (const PointError& p : stats.per_point) {
        os << "<circle cx=\"" << px(sx(p.truth.x)) << "\" cy=\"" << px(sy(p.truth.y))
           << "\" r=\"2\" fill=\"#2c3e50\"/>\n";
        os << "<line x1=\"" << px(sx(p.truth.x)) << "\" y1=\"" << px(sy(p.truth.y)) << "\" x2=\""
           << px(sx(p.predicted.x)) << "\" y2=\"" << px(sy(p.predicted.y))
           << "\" stroke=\"#c0392b\" stroke-width=\"1.5\" marker-end=\"url(#head)\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

Heatmap build_heatmap(const ErrorStats& stats) {
    if (stats.per_point.empty()) throw ShapeError("heatmap: no points");
    std::vector<double> xs_raw, ys_raw;
    for (const PointError& p : stats.per_point) {
        xs_raw.push_back(p.truth.x);
        ys_raw.push_back(p.truth.y);
    }
    constexpr double tol = 1e-6;
    Heatmap map;
    map.xs = distinct(xs_raw, tol);
    map.ys = distinct(ys_raw, tol);
    check_even(map.xs, tol, "x");
    check_even(map.ys, tol, "y");
    if (map.xs.size() * map.ys.size() != stats.per_point.size()) {
        throw ShapeError("heatmap: test points do not fill the lattice exactly once");
    }
    map.values.assign(map.xs.size() * map.ys.size(), 0.0);
    std::vector<char> filled(map.values.size(), 0);
    for (const PointError& p : stats.per_point) {
        const std::size_t idx = index_of(map.ys, p.truth.y, tol) * map.xs.size() + index_of(map.xs, p.truth.x, tol);
        if (filled[idx]) throw ShapeError("heatmap: lattice node visited twice");
        filled[idx] = 1;
        map.values[idx] = p.error;
    }
    return map;
}

EdgeInteriorMeans edge_interior_means(const Heatmap& map) {
    double edge = 0.0, interior = 0.0;
    std::size_t n_edge = 0, n_interior = 0;
    for (std::size_t r = 0; r < map.rows(); ++r) {
        for (std::size_t c = 0; c < map.columns(); ++c) {
            const bool on_edge = r == 0 || c == 0 || r + 1 == map.rows() || c + 1 == map.columns();
            (on_edge ? edge : interior) += map.at(r, c);
            ++(on_edge ? n_edge : n_interior);
        }
    }
    if (n_interior == 0) throw ShapeError("heatmap: no interior cells");
    return {edge / static_cast<double>(n_edge), interior / static_cast<double>(n_interior)};
}

void export_heatmap_csv(const Heatmap& map, const std::filesystem::path& path, const std::string& comment) {
    std::ostringstream os;
    if (!comment.empty()) os << "# " << comment << '\n';
    os << "y_mm\\x_mm";
    for (double x : map.xs) os << ',' << num(x);
    os << '\n';
    for (std::size_t r = 0; r < map.rows(); ++r) {
        os << num(map.ys[r]);
        for (std::size_t c = 0; c < map.columns(); ++c) os << ',' << num(map.at(r, c));
        os << '\n';
    }
    write_file(path, os.str());
}

std::string color_ramp(double t) {
    static constexpr std::array<std::array<double, 3>, 5> stops{{
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37},
    }};
    t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
    const double pos = t * static_cast<double>(stops.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(pos), stops.size() - 2);
    const double f = pos - static_cast<double>(i);
    char buf[8];
    int rgb[3];
    for (int k = 0; k < 3; ++k) {
        rgb[k] = static_cast<int>(std::lround(stops[i][k] + f * (stops[i + 1][k] - stops[i][k])));
    }
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
    return buf;
}

std::string heatmap_svg(const Heatmap& map, const std::string& comment) {
    constexpr double cell = 40.0;
    const double cw = cell * static_cast<double>(map.columns());
    const double ch = cell * static_cast<double>(map.rows());
    const double top = map.values.empty() ? 0.0 : *std::max_element(map.values.begin(), map.values.end());
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(cw) << "\" height=\"" << px(ch)
       << "\" viewBox=\"0 0 " << px(cw) << ' ' << px(ch) << "\">\n";
    if (!comment.empty()) os << "<!-- " << comment << " -->\n";
    os << "<!-- color: 0 mm dark purple -> " << num(top) << " mm yellow -->\n";
    for (std::size_t r = 0; r < map.rows(); ++r) {
        // Highest y on top.
        const double y = static_cast<double>(map.rows() - 1 - r) * cell;
        for (std::size_t c = 0; c < map.columns(); ++c) {
            const double v = map.at(r, c);
            os << "<rect x=\"" << px(static_cast<double>(c) * cell) << "\" y=\"" << px(y) << "\" width=\"" << px(cell)
               << "\" height=\"" << px(cell) << "\" fill=\"" << color_ramp(top > 0.0 ? v / top : 0.0)
               << "\"><title>" << px(v) << " mm</title></rect>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

void export_heatmap(const ErrorStats& grid_stats, const std::filesystem::path& csv_path,
                    const std::optional<std::filesystem::path>& svg_path, const std::string& comment) {
    const Heatmap map = build_heatmap(grid_stats);
    export_heatmap_csv(map, csv_path, comment);
    if (svg_path) write_file(*svg_path, heatmap_svg(map, comment));
}

void export_vector_field(const ErrorStats& stats, const SensorGeometry& geometry,
                         const std::filesystem::path& csv_path,
                         const std::optional<std::filesystem::path>& svg_path, const std::string& comment) {
    export_vector_field_csv(stats, csv_path, comment);
    if (svg_path) write_file(*svg_path, vector_field_svg(stats, geometry, comment));
}

std::pair<Dataset, Dataset> leave_one_grid_out(std::span<const Dataset> grids, std::size_t index) {
    if (grids.size() < 2) throw ShapeError("leave_one_grid_out: need at least 2 grids");
    if (index >= grids.size()) throw RangeError("leave_one_grid_out: grid index out of range");
    std::vector<Dataset> rest;
    for (std::size_t k = 0; k < grids.size(); ++k) {
        if (k != index) rest.push_back(grids[k]);
    }
    return {concatenate(rest), grids[index]};
}

} // namespace piezoloc
