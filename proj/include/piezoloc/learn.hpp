#pragma once

// Regression from per-pair resistance changes to contact location:
// ordinary least squares and kernel ridge regression with a Laplacian
// (L1) kernel, tuned by grid search on a held-out half of the training set.

#include "piezoloc/core.hpp"
#include "piezoloc/dataset.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace piezoloc {

using FeatureVector = std::vector<double>;

/// n x p feature matrix and n x 2 label matrix (mm) of a dataset.
Eigen::MatrixXd feature_matrix(const Dataset& data);
Eigen::MatrixX2d label_matrix(const Dataset& data);

struct LinearModel {
    Eigen::Matrix<double, 2, Eigen::Dynamic> weights;  // 2 x p
    Eigen::Vector2d intercept = Eigen::Vector2d::Zero();

    std::size_t feature_count() const { return static_cast<std::size_t>(weights.cols()); }
};

/// Least squares with intercept. Needs at least p + 1 rows.
LinearModel fit_linear(const Eigen::MatrixXd& features, const Eigen::MatrixX2d& labels);
LinearModel fit_linear(const Dataset& train);

enum class RidgeScaling {
    scaled,    // (K + lambda * n * I)
    unscaled,  // (K + lambda * I)
};

struct KrrOptions {
    RidgeScaling scaling = RidgeScaling::scaled;
    /// Z-score features with fit-set statistics before the kernel.
    bool standardize = false;
};

struct KrrModel {
    Eigen::MatrixXd support;  // n x p, in kernel space (standardised if enabled)
    Eigen::MatrixX2d dual;    // n x 2
    double sigma = 1.0;
    double lambda = 0.0;
    Eigen::Vector2d label_offset = Eigen::Vector2d::Zero();
    KrrOptions options;
    Eigen::VectorXd feature_mean;   // empty unless standardised
    Eigen::VectorXd feature_scale;

    std::size_t feature_count() const { return static_cast<std::size_t>(support.cols()); }
};

/// exp(-sigma * ||a - b||_1).
double laplacian_kernel(std::span<const double> a, std::span<const double> b, double sigma);

KrrModel fit_krr(const Eigen::MatrixXd& features, const Eigen::MatrixX2d& labels, double lambda, double sigma,
                 const KrrOptions& options = {});
KrrModel fit_krr(const Dataset& train, double lambda, double sigma, const KrrOptions& options = {});

Point2 predict(const LinearModel& model, std::span<const double> features);
Point2 predict(const KrrModel& model, std::span<const double> features);

using TrainedModel = std::variant<LinearModel, KrrModel>;
Point2 predict(const TrainedModel& model, std::span<const double> features);
std::size_t feature_count(const TrainedModel& model);
std::string method_name(const TrainedModel& model);

/// First ceil(n/2) records for fitting, the rest for calibration; order kept.
std::pair<Dataset, Dataset> split_halves(const Dataset& train);

/// n points log-spaced from lo to hi inclusive.
std::vector<double> log_space(double lo, double hi, std::size_t n);

struct GridSearchSpec {
    std::vector<double> lambda_grid = log_space(1e-4, 1e1, 16);
    std::vector<double> sigma_grid = log_space(1e-6, 1e-1, 16);
    KrrOptions options;
};

struct GridCell {
    double lambda = 0.0;
    double sigma = 0.0;
    double median_error = 0.0;  // mm on the calibration half; +inf if the fit failed
};

struct GridSearchResult {
    double lambda = 0.0;
    double sigma = 0.0;
    double calibration_median = 0.0;
    KrrModel model;  // refit on the full training set
    std::vector<GridCell> cells;  // lambda-major, in grid order
};

/// Fit on the first half, score the median error on the second, pick the
/// minimum (ties: larger lambda, then larger sigma), refit on everything.
GridSearchResult grid_search(const Dataset& train, const GridSearchSpec& spec);

inline constexpr int kModelSchemaVersion = 1;

nlohmann::ordered_json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::ordered_json& j);

} // namespace piezoloc
