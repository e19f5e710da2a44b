#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "flunow/featureset.hpp"
#include "flunow/healthdata.hpp"

namespace flunow {

enum class Optimizer { coordinate_descent, proximal_sgd };

struct LassoConfig {
    std::vector<double> lambda_grid;  // empty -> default grid from lambda_max
    Optimizer optimizer = Optimizer::coordinate_descent;
    int max_epochs = 2000;
    double step_size = 0.01;   // proximal SGD only
    double tolerance = 1e-8;   // max coefficient change per sweep (CD)
    std::uint64_t seed = 42;
    double fallback_lambda = 1e-2;  // used when CV has a single training season
};

struct TrainedModel {
    std::vector<std::string> col_names;
    std::vector<double> weights;
    double intercept = 0.0;
    double lambda = 0.0;
    int nonzero_count = 0;
    double final_objective = 0.0;
    int epochs_run = 0;
    bool converged = false;
    std::string optimizer_name;
    std::uint64_t seed = 0;
};

/// sign(z) * max(|z| - t, 0).
double soft_threshold(double z, double t);

/// (1/2n) * sum (y - Xw - b)^2 + lambda * ||w||_1, intercept unpenalized.
double lasso_objective(const std::vector<std::vector<double>>& cols,
                       std::span<const double> y, std::span<const double> w,
                       double intercept, double lambda);

/// Smallest lambda that zeroes every weight: max_j |X_j . (y - mean(y))| / n.
double lambda_max(const std::vector<std::vector<double>>& cols,
                  std::span<const double> y);

/// 50 points log-spaced from lambda_max down to lambda_max * 1e-4, ascending.
std::vector<double> default_lambda_grid(const std::vector<std::vector<double>>& cols,
                                        std::span<const double> y);

TrainedModel fit_lasso(const std::vector<std::vector<double>>& cols,
                       const std::vector<std::string>& col_names,
                       std::span<const double> y, double lambda,
                       const LassoConfig& cfg);

struct CvResult {
    double chosen_lambda = 0.0;
    std::vector<std::pair<double, double>> curve;  // (lambda, mean val MSE)
    bool single_season_fallback = false;
};

/// Leave-one-season-out folds within the training rows; grid argmin by mean
/// validation MSE, ties resolved toward the larger (sparser) lambda.
CvResult cross_validate_lambda(const std::vector<std::vector<double>>& cols,
                               const std::vector<std::string>& col_names,
                               std::span<const double> y,
                               std::span<const int> season_of_row,
                               const LassoConfig& cfg);

/// Counts reads of each target entry during training; the LOSO acceptance
/// check asserts held-out entries are never read.
struct TargetAccessLog {
    std::vector<long> reads;
};

struct LosoResult {
    std::vector<TrainedModel> models;        // one per held-out season
    std::vector<std::string> held_out;       // season labels, model order
    std::vector<double> chosen_lambdas;
    std::vector<double> predictions_raw;     // aligned to target rows
    std::vector<double> predictions;         // clamped at zero
};

/// `build` receives the training-row indices of the current fold and returns
/// the design matrix over all rows (standardized on those training rows, or
/// globally if it chooses to ignore them). Training only ever sees target
/// values materialized from the training rows.
LosoResult loso_protocol(
    const std::function<FeatureMatrix(std::span<const std::size_t>)>& build,
    const AlignedTarget& target, const LassoConfig& cfg,
    TargetAccessLog* log = nullptr);

std::vector<double> predict_raw(const TrainedModel& m, const FeatureMatrix& x,
                                std::span<const std::size_t> rows);

void save_model_json(const std::string& path, const TrainedModel& m,
                     const std::string& config_hash = "");
TrainedModel load_model_json(const std::string& path);

}  // namespace flunow
