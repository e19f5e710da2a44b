#include "flunow/regress.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace flunow {

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

double lasso_objective(const std::vector<std::vector<double>>& cols,
                       std::span<const double> y, std::span<const double> w,
                       double intercept, double lambda) {
    const std::size_t n = y.size();
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double pred = intercept;
        for (std::size_t j = 0; j < cols.size(); ++j) pred += w[j] * cols[j][i];
        double e = y[i] - pred;
        rss += e * e;
    }
    double l1 = 0.0;
    for (double wj : w) l1 += std::abs(wj);
    return rss / (2.0 * n) + lambda * l1;
}

double lambda_max(const std::vector<std::vector<double>>& cols,
                  std::span<const double> y) {
    const std::size_t n = y.size();
    double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double best = 0.0;
    for (const auto& col : cols) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += col[i] * (y[i] - mean_y);
        best = std::max(best, std::abs(dot) / n);
    }
    return best;
}

std::vector<double> default_lambda_grid(const std::vector<std::vector<double>>& cols,
                                        std::span<const double> y) {
    double top = lambda_max(cols, y);
    if (top <= 0.0) top = 1.0;
    std::vector<double> grid(50);
    for (int k = 0; k < 50; ++k)
        grid[k] = top * std::pow(1e-4, (49.0 - k) / 49.0);  // ascending
    return grid;
}

namespace {

int count_nonzero(std::span<const double> w) {
    int c = 0;
    for (double x : w)
        if (x != 0.0) ++c;
    return c;
}

void check_finite(double obj, const char* optimizer, double step) {
    if (!std::isfinite(obj)) {
        throw std::runtime_error(std::string(optimizer) +
                                 " diverged (objective not finite); try a smaller "
                                 "step size than " +
                                 std::to_string(step));
    }
}

TrainedModel fit_coordinate_descent(const std::vector<std::vector<double>>& cols,
                                    std::span<const double> y, double lambda,
                                    const LassoConfig& cfg,
                                    std::vector<double> warm_start) {
    const std::size_t n = y.size();
    const std::size_t p = cols.size();
    std::vector<double> w = warm_start.size() == p ? std::move(warm_start)
                                                   : std::vector<double>(p, 0.0);

    std::vector<double> col_sq(p, 0.0);
    for (std::size_t j = 0; j < p; ++j)
        for (double v : cols[j]) col_sq[j] += v * v;

    double intercept = 0.0;
    std::vector<double> residual(y.begin(), y.end());
    for (std::size_t j = 0; j < p; ++j) {
        if (w[j] == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) residual[i] -= w[j] * cols[j][i];
    }
    {
        double mean_r = std::accumulate(residual.begin(), residual.end(), 0.0) / n;
        intercept = mean_r;
        for (double& r : residual) r -= mean_r;
    }

    TrainedModel m;
    m.lambda = lambda;
    m.optimizer_name = "coordinate_descent";
    double prev_obj = lasso_objective(cols, y, w, intercept, lambda);
    int sweep = 0;
    for (; sweep < cfg.max_epochs; ++sweep) {
        double max_delta = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (col_sq[j] == 0.0) continue;
            double old = w[j];
            double rho = 0.0;
            for (std::size_t i = 0; i < n; ++i) rho += cols[j][i] * residual[i];
            rho = rho / n + old * col_sq[j] / n;
            double wj = soft_threshold(rho, lambda) / (col_sq[j] / n);
            if (wj != old) {
                double d = wj - old;
                for (std::size_t i = 0; i < n; ++i) residual[i] -= d * cols[j][i];
                w[j] = wj;
                max_delta = std::max(max_delta, std::abs(d));
            }
        }
        double mean_r = std::accumulate(residual.begin(), residual.end(), 0.0) / n;
        if (mean_r != 0.0) {
            intercept += mean_r;
            for (double& r : residual) r -= mean_r;
            max_delta = std::max(max_delta, std::abs(mean_r));
        }

        double obj = lasso_objective(cols, y, w, intercept, lambda);
        check_finite(obj, "coordinate descent", 0.0);
        if (obj > prev_obj * (1.0 + 1e-12) + 1e-15)
            throw std::logic_error("coordinate descent objective increased within a sweep");
        prev_obj = obj;
        if (max_delta < cfg.tolerance) {
            m.converged = true;
            ++sweep;
            break;
        }
    }
    m.weights = std::move(w);
    m.intercept = intercept;
    m.epochs_run = sweep;
    m.final_objective = prev_obj;
    m.nonzero_count = count_nonzero(m.weights);
    return m;
}

TrainedModel fit_proximal_sgd(const std::vector<std::vector<double>>& cols,
                              std::span<const double> y, double lambda,
                              const LassoConfig& cfg) {
    const std::size_t n = y.size();
    const std::size_t p = cols.size();
    std::vector<double> w(p, 0.0);
    double intercept = std::accumulate(y.begin(), y.end(), 0.0) / n;

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    TrainedModel m;
    m.lambda = lambda;
    m.optimizer_name = "proximal_sgd";
    m.seed = cfg.seed;
    double prev_obj = lasso_objective(cols, y, w, intercept, lambda);
    int epoch = 0;
    for (; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double lr = cfg.step_size / (1.0 + 0.05 * epoch);
        for (std::size_t i : order) {
            double pred = intercept;
            for (std::size_t j = 0; j < p; ++j) pred += w[j] * cols[j][i];
            double err = pred - y[i];
            intercept -= lr * err;
            double thresh = lr * lambda;
            for (std::size_t j = 0; j < p; ++j)
                w[j] = soft_threshold(w[j] - lr * err * cols[j][i], thresh);
        }
        double obj = lasso_objective(cols, y, w, intercept, lambda);
        check_finite(obj, "proximal SGD", cfg.step_size);
        if (std::abs(prev_obj - obj) < cfg.tolerance * std::max(1.0, std::abs(obj))) {
            prev_obj = obj;
            m.converged = true;
            ++epoch;
            break;
        }
        prev_obj = obj;
    }
    m.weights = std::move(w);
    m.intercept = intercept;
    m.epochs_run = epoch;
    m.final_objective = prev_obj;
    m.nonzero_count = count_nonzero(m.weights);
    return m;
}

}  // namespace

TrainedModel fit_lasso(const std::vector<std::vector<double>>& cols,
                       const std::vector<std::string>& col_names,
                       std::span<const double> y, double lambda,
                       const LassoConfig& cfg) {
    if (y.size() < 2) throw std::invalid_argument("fit_lasso: need at least 2 rows");
    for (const auto& col : cols)
        if (col.size() != y.size())
            throw std::invalid_argument("fit_lasso: column/target length mismatch");
    TrainedModel m = cfg.optimizer == Optimizer::coordinate_descent
                         ? fit_coordinate_descent(cols, y, lambda, cfg, {})
                         : fit_proximal_sgd(cols, y, lambda, cfg);
    m.col_names = col_names;
    return m;
}

namespace {

// Restrict column-major data to a row subset.
std::vector<std::vector<double>> slice_cols(const std::vector<std::vector<double>>& cols,
                                            std::span<const std::size_t> rows) {
    std::vector<std::vector<double>> out(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        out[j].reserve(rows.size());
        for (std::size_t r : rows) out[j].push_back(cols[j][r]);
    }
    return out;
}

double read_target(std::span<const double> y, std::size_t i, TargetAccessLog* log) {
    if (log) ++log->reads[i];
    return y[i];
}

}  // namespace

CvResult cross_validate_lambda(const std::vector<std::vector<double>>& cols,
                               const std::vector<std::string>& col_names,
                               std::span<const double> y,
                               std::span<const int> season_of_row,
                               const LassoConfig& cfg) {
    std::set<int> seasons(season_of_row.begin(), season_of_row.end());
    std::vector<double> grid =
        cfg.lambda_grid.empty() ? default_lambda_grid(cols, y)
                                : cfg.lambda_grid;
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw std::invalid_argument("lambda grid must be sorted ascending");

    CvResult cv;
    if (seasons.size() < 2) {
        cv.chosen_lambda = cfg.fallback_lambda;
        cv.single_season_fallback = true;
        return cv;
    }

    std::vector<double> fold_mse(grid.size(), 0.0);
    for (int held : seasons) {
        std::vector<std::size_t> train_rows, val_rows;
        for (std::size_t i = 0; i < season_of_row.size(); ++i)
            (season_of_row[i] == held ? val_rows : train_rows).push_back(i);
        auto train_cols = slice_cols(cols, train_rows);
        std::vector<double> train_y;
        for (std::size_t r : train_rows) train_y.push_back(y[r]);

        // Descend the grid with warm starts; cheap and equivalent to cold fits.
        std::vector<double> warm;
        for (std::size_t k = grid.size(); k-- > 0;) {
            TrainedModel m =
                cfg.optimizer == Optimizer::coordinate_descent
                    ? fit_coordinate_descent(train_cols, train_y, grid[k], cfg, warm)
                    : fit_proximal_sgd(train_cols, train_y, grid[k], cfg);
            warm = m.weights;
            double mse = 0.0;
            for (std::size_t r : val_rows) {
                double pred = m.intercept;
                for (std::size_t j = 0; j < cols.size(); ++j)
                    pred += m.weights[j] * cols[j][r];
                double e = y[r] - pred;
                mse += e * e;
            }
            fold_mse[k] += mse / val_rows.size();
        }
    }

    double best_mse = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double mse = fold_mse[k] / seasons.size();
        cv.curve.emplace_back(grid[k], mse);
        if (mse <= best_mse) {  // ascending scan: ties resolve to larger lambda
            best_mse = mse;
            cv.chosen_lambda = grid[k];
        }
    }
    return cv;
}

LosoResult loso_protocol(
    const std::function<FeatureMatrix(std::span<const std::size_t>)>& build,
    const AlignedTarget& target, const LassoConfig& cfg, TargetAccessLog* log) {
    const std::size_t n = target.rows.size();
    std::set<int> seasons(target.season_of_row.begin(), target.season_of_row.end());
    if (seasons.size() < 2)
        throw std::invalid_argument("leave-one-season-out needs at least 2 seasons");
    if (log) log->reads.assign(n, 0);

    LosoResult result;
    result.predictions_raw.assign(n, 0.0);
    result.predictions.assign(n, 0.0);

    for (int held : seasons) {
        std::vector<std::size_t> train_rows, test_rows;
        std::vector<int> train_seasons;
        for (std::size_t i = 0; i < n; ++i) {
            if (target.season_of_row[i] == held) {
                test_rows.push_back(i);
            } else {
                train_rows.push_back(i);
                train_seasons.push_back(target.season_of_row[i]);
            }
        }

        FeatureMatrix x = build(train_rows);
        auto train_cols = slice_cols(x.cols, train_rows);
        std::vector<double> train_y;
        train_y.reserve(train_rows.size());
        for (std::size_t r : train_rows) train_y.push_back(read_target(target.y, r, log));

        CvResult cv = cross_validate_lambda(train_cols, x.col_names, train_y,
                                            train_seasons, cfg);
        TrainedModel model =
            fit_lasso(train_cols, x.col_names, train_y, cv.chosen_lambda, cfg);

        auto raw = predict_raw(model, x, test_rows);
        for (std::size_t t = 0; t < test_rows.size(); ++t) {
            result.predictions_raw[test_rows[t]] = raw[t];
            result.predictions[test_rows[t]] = std::max(0.0, raw[t]);
        }
        result.models.push_back(std::move(model));
        result.held_out.push_back(target.season_labels[held]);
        result.chosen_lambdas.push_back(cv.chosen_lambda);
    }
    return result;
}

std::vector<double> predict_raw(const TrainedModel& m, const FeatureMatrix& x,
                                std::span<const std::size_t> rows) {
    if (m.weights.size() != x.n_cols())
        throw std::invalid_argument("predict: model has " + std::to_string(m.weights.size()) +
                                    " weights, matrix has " + std::to_string(x.n_cols()) +
                                    " columns");
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) {
        double pred = m.intercept;
        for (std::size_t j = 0; j < x.n_cols(); ++j) pred += m.weights[j] * x.at(r, j);
        out.push_back(pred);
    }
    return out;
}

void save_model_json(const std::string& path, const TrainedModel& m,
                     const std::string& config_hash) {
    nlohmann::json j{{"col_names", m.col_names},
                     {"weights", m.weights},
                     {"intercept", m.intercept},
                     {"lambda", m.lambda},
                     {"nonzero_count", m.nonzero_count},
                     {"final_objective", m.final_objective},
                     {"epochs_run", m.epochs_run},
                     {"converged", m.converged},
                     {"optimizer", m.optimizer_name},
                     {"seed", m.seed},
                     {"config_hash", config_hash},
                     {"version", FLUNOW_VERSION}};
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write model: " + path);
    file << j.dump(2) << "\n";
}

TrainedModel load_model_json(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot open model: " + path);
    nlohmann::json j = nlohmann::json::parse(file);
    TrainedModel m;
    m.col_names = j["col_names"].get<std::vector<std::string>>();
    m.weights = j["weights"].get<std::vector<double>>();
    m.intercept = j["intercept"];
    m.lambda = j["lambda"];
    m.nonzero_count = j["nonzero_count"];
    m.final_objective = j["final_objective"];
    m.epochs_run = j["epochs_run"];
    m.converged = j["converged"];
    m.optimizer_name = j["optimizer"];
    m.seed = j["seed"];
    return m;
}

}  // namespace flunow
