#include "piezoloc/learn.hpp"

#include "piezoloc/errors.hpp"
#include "piezoloc/stats.hpp"

#include <cmath>
#include <limits>

namespace piezoloc {
namespace {

using Json = nlohmann::ordered_json;

void check_length(std::size_t expected, std::size_t got) {
    if (expected != got) {
        throw ShapeError("feature length mismatch: model expects " + std::to_string(expected) + ", got " +
                         std::to_string(got));
    }
}

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> v) {
    return {v.data(), static_cast<Eigen::Index>(v.size())};
}

// Pairwise L1 distances between rows of a and rows of b.
Eigen::MatrixXd l1_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd d(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            d(i, j) = (a.row(i) - b.row(j)).cwiseAbs().sum();
        }
    }
    return d;
}

// Solves (K + ridge * I) A = Y_centered for the given distance matrix.
Eigen::MatrixX2d solve_duals(const Eigen::MatrixXd& distances, const Eigen::MatrixX2d& centered, double lambda,
                             double sigma, RidgeScaling scaling) {
    const auto n = distances.rows();
    Eigen::MatrixXd system = (-sigma * distances.array()).exp().matrix();
    const double ridge = scaling == RidgeScaling::scaled ? lambda * static_cast<double>(n) : lambda;
    system.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
    const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
    const double eps = std::numeric_limits<double>::epsilon();
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < eps ||
        pivots.minCoeff() < eps * pivots.maxCoeff()) {
        throw FitError("kernel ridge system is singular or ill-conditioned (duplicate supports? try lambda > 0)");
    }
    Eigen::MatrixX2d duals = ldlt.solve(centered);
    if (!duals.allFinite()) {
        throw FitError("kernel ridge solve produced non-finite coefficients");
    }
    return duals;
}

void validate_hyper(double lambda, double sigma) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw FitError("lambda must be finite and >= 0");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw FitError("sigma must be finite and > 0");
}

struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static Standardizer from(const Eigen::MatrixXd& x) {
        Standardizer s;
        s.mean = x.colwise().mean().transpose();
        s.scale.resize(x.cols());
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            const double sd = std::sqrt((x.col(c).array() - s.mean(c)).square().mean());
            s.scale(c) = sd > 0.0 ? sd : 1.0;
        }
        return s;
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
        return ((x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
    }
};

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd vector_from(const Json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json matrix_rows(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_std(m.row(i).transpose()));
    return rows;
}

Eigen::MatrixXd matrix_from_rows(const Json& j, Eigen::Index cols) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const auto row = j.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != cols) throw LoadError("model file: ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)];
    }
    return m;
}

} // namespace

Eigen::MatrixXd feature_matrix(const Dataset& data) {
    const auto p = static_cast<Eigen::Index>(data.geometry.pair_count());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), p);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const auto dr = data.records[static_cast<std::size_t>(i)].dr();
        check_length(static_cast<std::size_t>(p), dr.size());
        x.row(i) = as_vector(dr).transpose();
    }
    return x;
}

Eigen::MatrixX2d label_matrix(const Dataset& data) {
    Eigen::MatrixX2d y(static_cast<Eigen::Index>(data.size()), 2);
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const Point2 p = data.records[static_cast<std::size_t>(i)].location();
        y(i, 0) = p.x;
        y(i, 1) = p.y;
    }
    return y;
}

LinearModel fit_linear(const Eigen::MatrixXd& features, const Eigen::MatrixX2d& labels) {
    const auto n = features.rows();
    const auto p = features.cols();
    if (labels.rows() != n) throw ShapeError("fit_linear: feature and label row counts differ");
    if (n < p + 1) {
        throw FitError("fit_linear: need at least " + std::to_string(p + 1) + " records, got " + std::to_string(n));
    }
    // Centring absorbs the intercept; a constant column then contributes
    // nothing and the stabiliser pins its weight at zero.
    const Eigen::RowVectorXd x_mean = features.colwise().mean();
    const Eigen::RowVector2d y_mean = labels.colwise().mean();
    const Eigen::MatrixXd xc = features.rowwise() - x_mean;
    const Eigen::MatrixX2d yc = labels.rowwise() - y_mean;

    Eigen::MatrixXd gram = xc.transpose() * xc;
    const double trace_scale = p > 0 ? gram.trace() / static_cast<double>(p) : 0.0;
    gram.diagonal().array() += 1e-10 * (trace_scale > 0.0 ? trace_scale : 1.0);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw FitError("fit_linear: normal equations are rank deficient");
    }
    const Eigen::MatrixXd w = ldlt.solve(xc.transpose() * yc);  // p x 2
    if (!w.allFinite()) throw FitError("fit_linear: non-finite weights");

    LinearModel model;
    model.weights = w.transpose();
    model.intercept = (y_mean - x_mean * w).transpose();
    return model;
}

LinearModel fit_linear(const Dataset& train) { return fit_linear(feature_matrix(train), label_matrix(train)); }

double laplacian_kernel(std::span<const double> a, std::span<const double> b, double sigma) {
    if (a.size() != b.size()) throw ShapeError("laplacian_kernel: length mismatch");
    if (!(sigma > 0.0)) throw DomainError("laplacian_kernel: sigma must be positive");
    double l1 = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) l1 += std::abs(a[k] - b[k]);
    return std::exp(-sigma * l1);
}

KrrModel fit_krr(const Eigen::MatrixXd& features, const Eigen::MatrixX2d& labels, double lambda, double sigma,
                 const KrrOptions& options) {
    validate_hyper(lambda, sigma);
    if (features.rows() < 1) throw FitError("fit_krr: empty training set");
    if (labels.rows() != features.rows()) throw ShapeError("fit_krr: feature and label row counts differ");

    KrrModel model;
    model.sigma = sigma;
    model.lambda = lambda;
    model.options = options;
    model.support = features;
    if (options.standardize) {
        const Standardizer s = Standardizer::from(features);
        model.feature_mean = s.mean;
        model.feature_scale = s.scale;
        model.support = s.apply(features);
    }
    model.label_offset = labels.colwise().mean().transpose();
    const Eigen::MatrixX2d centered = labels.rowwise() - model.label_offset.transpose();
    model.dual = solve_duals(l1_distances(model.support, model.support), centered, lambda, sigma, options.scaling);
    return model;
}

KrrModel fit_krr(const Dataset& train, double lambda, double sigma, const KrrOptions& options) {
    return fit_krr(feature_matrix(train), label_matrix(train), lambda, sigma, options);
}

Point2 predict(const LinearModel& model, std::span<const double> features) {
    check_length(model.feature_count(), features.size());
    const Eigen::Vector2d out = model.weights * as_vector(features) + model.intercept;
    return {out(0), out(1)};
}

Point2 predict(const KrrModel& model, std::span<const double> features) {
    check_length(model.feature_count(), features.size());
    Eigen::VectorXd f = as_vector(features);
    if (model.options.standardize) {
        f = (f - model.feature_mean).cwiseQuotient(model.feature_scale);
    }
    Eigen::VectorXd k(model.support.rows());
    for (Eigen::Index i = 0; i < k.size(); ++i) {
        k(i) = std::exp(-model.sigma * (model.support.row(i).transpose() - f).cwiseAbs().sum());
    }
    const Eigen::Vector2d out = model.label_offset + model.dual.transpose() * k;
    return {out(0), out(1)};
}

Point2 predict(const TrainedModel& model, std::span<const double> features) {
    return std::visit([&](const auto& m) { return predict(m, features); }, model);
}

std::size_t feature_count(const TrainedModel& model) {
    return std::visit([](const auto& m) { return m.feature_count(); }, model);
}

std::string method_name(const TrainedModel& model) {
    return std::holds_alternative<LinearModel>(model) ? "linear" : "krr";
}

std::pair<Dataset, Dataset> split_halves(const Dataset& train) {
    if (train.size() < 2) throw ShapeError("split_halves: need at least 2 records");
    const std::size_t first = (train.size() + 1) / 2;
    Dataset fit{.geometry = train.geometry, .provenance = train.provenance};
    Dataset calib{.geometry = train.geometry, .provenance = train.provenance};
    fit.records.assign(train.records.begin(), train.records.begin() + static_cast<std::ptrdiff_t>(first));
    calib.records.assign(train.records.begin() + static_cast<std::ptrdiff_t>(first), train.records.end());
    return {std::move(fit), std::move(calib)};
}

std::vector<double> log_space(double lo, double hi, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {lo};
    std::vector<double> out(n);
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t k = 0; k < n; ++k) {
        out[k] = std::pow(10.0, a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

GridSearchResult grid_search(const Dataset& train, const GridSearchSpec& spec) {
    if (spec.lambda_grid.empty() || spec.sigma_grid.empty()) {
        throw FitError("grid search: empty hyperparameter grid");
    }
    const auto [fit_half, calib_half] = split_halves(train);
    Eigen::MatrixXd x_fit = feature_matrix(fit_half);
    Eigen::MatrixXd x_cal = feature_matrix(calib_half);
    const Eigen::MatrixX2d y_fit = label_matrix(fit_half);
    const Eigen::MatrixX2d y_cal = label_matrix(calib_half);
    if (spec.options.standardize) {
        const Standardizer s = Standardizer::from(x_fit);
        x_fit = s.apply(x_fit);
        x_cal = s.apply(x_cal);
    }
    const Eigen::RowVector2d offset = y_fit.colwise().mean();
    const Eigen::MatrixX2d centered = y_fit.rowwise() - offset;
    const Eigen::MatrixXd d_fit = l1_distances(x_fit, x_fit);
    const Eigen::MatrixXd d_cal = l1_distances(x_cal, x_fit);

    GridSearchResult result;
    result.cells.reserve(spec.lambda_grid.size() * spec.sigma_grid.size());
    bool found = false;
    std::vector<double> errors(static_cast<std::size_t>(x_cal.rows()));
    for (double lambda : spec.lambda_grid) {
        for (double sigma : spec.sigma_grid) {
            GridCell cell{lambda, sigma, std::numeric_limits<double>::infinity()};
            try {
                validate_hyper(lambda, sigma);
                const Eigen::MatrixX2d duals = solve_duals(d_fit, centered, lambda, sigma, spec.options.scaling);
                const Eigen::MatrixX2d pred =
                    ((-sigma * d_cal.array()).exp().matrix() * duals).rowwise() + offset;
                for (Eigen::Index i = 0; i < pred.rows(); ++i) {
                    errors[static_cast<std::size_t>(i)] = (pred.row(i) - y_cal.row(i)).norm();
                }
                cell.median_error = median(errors);
            } catch (const FitError&) {
            }
            result.cells.push_back(cell);
            if (!std::isfinite(cell.median_error)) continue;
            // scores within rounding noise count as ties
            const double tol = 1e-12 * std::max(1.0, result.calibration_median);
            const bool better = !found || cell.median_error < result.calibration_median - tol ||
                                (std::abs(cell.median_error - result.calibration_median) <= tol &&
                                 (lambda > result.lambda || (lambda == result.lambda && sigma > result.sigma)));
            if (better) {
                found = true;
                result.lambda = lambda;
                result.sigma = sigma;
                result.calibration_median = cell.median_error;
            }
        }
    }
    if (!found) throw FitError("grid search: every (lambda, sigma) fit failed");
    result.model = fit_krr(train, result.lambda, result.sigma, spec.options);
    return result;
}

Json model_to_json(const TrainedModel& model) {
    Json j;
    j["schema_version"] = kModelSchemaVersion;
    j["kind"] = "piezoloc.model";
    j["method"] = method_name(model);
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        j["feature_count"] = lin->feature_count();
        j["weights"] = matrix_rows(lin->weights);
        j["intercept"] = to_std(lin->intercept);
    } else {
        const auto& krr = std::get<KrrModel>(model);
        j["feature_count"] = krr.feature_count();
        j["lambda"] = krr.lambda;
        j["sigma"] = krr.sigma;
        j["ridge_scaling"] = krr.options.scaling == RidgeScaling::scaled ? "scaled" : "unscaled";
        j["standardize"] = krr.options.standardize;
        j["label_offset"] = to_std(krr.label_offset);
        j["feature_mean"] = to_std(krr.feature_mean);
        j["feature_scale"] = to_std(krr.feature_scale);
        j["supports"] = matrix_rows(krr.support);
        j["duals"] = matrix_rows(krr.dual);
    }
    return j;
}

TrainedModel model_from_json(const Json& j) {
    try {
        if (j.at("kind").get<std::string>() != "piezoloc.model") throw LoadError("not a model file");
        const int version = j.at("schema_version").get<int>();
        if (version != kModelSchemaVersion) {
            throw LoadError("unsupported model schema_version " + std::to_string(version));
        }
        const auto p = j.at("feature_count").get<Eigen::Index>();
        const std::string method = j.at("method").get<std::string>();
        if (method == "linear") {
            LinearModel m;
            const Eigen::MatrixXd w = matrix_from_rows(j.at("weights"), p);
            if (w.rows() != 2) throw LoadError("linear model: weights must have 2 rows");
            m.weights = w;
            const Eigen::VectorXd b = vector_from(j.at("intercept"));
            if (b.size() != 2) throw LoadError("linear model: intercept must have 2 entries");
            m.intercept = b;
            return m;
        }
        if (method == "krr") {
            KrrModel m;
            m.lambda = j.at("lambda").get<double>();
            m.sigma = j.at("sigma").get<double>();
            const std::string scaling = j.at("ridge_scaling").get<std::string>();
            if (scaling != "scaled" && scaling != "unscaled") throw LoadError("krr model: unknown ridge_scaling");
            m.options.scaling = scaling == "scaled" ? RidgeScaling::scaled : RidgeScaling::unscaled;
            m.options.standardize = j.at("standardize").get<bool>();
            const Eigen::VectorXd off = vector_from(j.at("label_offset"));
            if (off.size() != 2) throw LoadError("krr model: label_offset must have 2 entries");
            m.label_offset = off;
            m.feature_mean = vector_from(j.at("feature_mean"));
            m.feature_scale = vector_from(j.at("feature_scale"));
            m.support = matrix_from_rows(j.at("supports"), p);
            m.dual = matrix_from_rows(j.at("duals"), 2);
            if (m.dual.rows() != m.support.rows()) throw LoadError("krr model: dual rows must match support count");
            if (m.options.standardize && (m.feature_mean.size() != p || m.feature_scale.size() != p)) {
                throw LoadError("krr model: standardisation vectors have the wrong length");
            }
            if (!(m.sigma > 0.0) || !(m.lambda >= 0.0)) throw LoadError("krr model: invalid hyperparameters");
            return m;
        }
        throw LoadError("unknown model method '" + method + "'");
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("malformed model file: ") + e.what());
    }
}

} // namespace piezoloc
