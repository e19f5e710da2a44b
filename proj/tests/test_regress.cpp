#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>

#include "flunow/regress.hpp"
#include "oracles.hpp"

using namespace flunow;

namespace {

std::vector<std::string> names(std::size_t p) {
    std::vector<std::string> out;
    for (std::size_t j = 0; j < p; ++j) out.push_back("c" + std::to_string(j));
    return out;
}

// n=4 design with mean-zero columns satisfying X^T X / n = I.
std::vector<std::vector<double>> orthonormal_design() {
    return {{1, -1, 1, -1}, {1, 1, -1, -1}, {1, -1, -1, 1}};
}

}  // namespace

TEST_CASE("soft_threshold") {
    CHECK(soft_threshold(3.0, 1.0) == 2.0);
    CHECK(soft_threshold(-0.5, 1.0) == 0.0);
    CHECK(soft_threshold(-3.0, 1.0) == -2.0);
    CHECK(soft_threshold(1.25, 0.0) == 1.25);
}

TEST_CASE("kill threshold yields the all-zero model") {
    auto cols = orthonormal_design();
    std::vector<double> y{3.0, 1.0, -2.0, 4.0};
    double top = lambda_max(cols, y);
    LassoConfig cfg;
    auto m = fit_lasso(cols, names(3), y, top * 1.000001, cfg);
    for (double w : m.weights) CHECK(w == 0.0);
    CHECK(m.intercept == doctest::Approx(1.5));  // mean(y)
    CHECK(m.nonzero_count == 0);
}

TEST_CASE("orthonormal design matches the soft-threshold closed form") {
    auto cols = orthonormal_design();
    std::vector<double> y{2.0, -1.0, 0.5, 3.0};
    double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / 4.0;
    LassoConfig cfg;
    for (double lambda : {0.05, 0.2, 0.6, 1.2}) {
        auto m = fit_lasso(cols, names(3), y, lambda, cfg);
        for (std::size_t j = 0; j < cols.size(); ++j) {
            double ols = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) ols += cols[j][i] * (y[i] - mean_y);
            ols /= 4.0;
            CHECK(m.weights[j] == doctest::Approx(soft_threshold(ols, lambda)).epsilon(1e-6));
        }
    }
}

TEST_CASE("lambda -> 0 recovers ordinary least squares") {
    std::mt19937 rng(31);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t n = 30, p = 5;
    std::vector<std::vector<double>> cols(p, std::vector<double>(n));
    for (auto& col : cols)
        for (auto& v : col) v = gauss(rng);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i)
        y[i] = 1.5 + 2.0 * cols[0][i] - 1.0 * cols[2][i] + 0.1 * gauss(rng);

    auto oracle = oracles::ols_with_intercept(cols, y);
    LassoConfig cfg;
    cfg.tolerance = 1e-12;
    cfg.max_epochs = 20000;
    auto m = fit_lasso(cols, names(p), y, 1e-10, cfg);
    for (std::size_t j = 0; j < p; ++j)
        CHECK(m.weights[j] == doctest::Approx(oracle[j]).epsilon(1e-6));
    CHECK(m.intercept == doctest::Approx(oracle[p]).epsilon(1e-6));
}

TEST_CASE("L1 norm shrinks as lambda grows") {
    std::mt19937 rng(37);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t n = 40, p = 8;
    std::vector<std::vector<double>> cols(p, std::vector<double>(n));
    for (auto& col : cols)
        for (auto& v : col) v = gauss(rng);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = cols[1][i] + 0.5 * cols[4][i] + 0.2 * gauss(rng);

    LassoConfig cfg;
    double prev_norm = std::numeric_limits<double>::infinity();
    for (double lambda : {0.01, 0.05, 0.1, 0.3, 0.6}) {
        auto m = fit_lasso(cols, names(p), y, lambda, cfg);
        double norm = 0.0;
        for (double w : m.weights) norm += std::abs(w);
        CHECK(norm <= prev_norm + 1e-8);
        prev_norm = norm;
    }
}

TEST_CASE("proximal SGD objective tracks coordinate descent") {
    std::mt19937 rng(41);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t n = 50, p = 4;
    std::vector<std::vector<double>> cols(p, std::vector<double>(n));
    for (auto& col : cols)
        for (auto& v : col) v = gauss(rng);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = 2.0 * cols[0][i] - cols[3][i] + 0.1 * gauss(rng);

    LassoConfig cd_cfg;
    LassoConfig sgd_cfg;
    sgd_cfg.optimizer = Optimizer::proximal_sgd;
    sgd_cfg.max_epochs = 4000;
    sgd_cfg.step_size = 0.02;
    sgd_cfg.tolerance = 1e-10;
    for (double lambda : {0.05, 0.2}) {
        auto cd = fit_lasso(cols, names(p), y, lambda, cd_cfg);
        auto sgd = fit_lasso(cols, names(p), y, lambda, sgd_cfg);
        CHECK(sgd.final_objective ==
              doctest::Approx(cd.final_objective).epsilon(1e-4));
    }
}

TEST_CASE("proximal SGD is reproducible for a fixed seed") {
    auto cols = orthonormal_design();
    std::vector<double> y{2.0, -1.0, 0.5, 3.0};
    LassoConfig cfg;
    cfg.optimizer = Optimizer::proximal_sgd;
    cfg.seed = 99;
    auto a = fit_lasso(cols, names(3), y, 0.1, cfg);
    auto b = fit_lasso(cols, names(3), y, 0.1, cfg);
    CHECK(a.weights == b.weights);
    CHECK(a.intercept == b.intercept);
}

TEST_CASE("fit_lasso input validation") {
    LassoConfig cfg;
    std::vector<double> y{1.0};
    CHECK_THROWS(fit_lasso({{1.0}}, names(1), y, 0.1, cfg));
    std::vector<double> y2{1.0, 2.0};
    CHECK_THROWS(fit_lasso({{1.0, 2.0, 3.0}}, names(1), y2, 0.1, cfg));
}

TEST_CASE("cross_validate_lambda") {
    std::mt19937 rng(43);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SUBCASE("single huge lambda gives the all-zero model") {
        auto cols = orthonormal_design();
        std::vector<double> y{3.0, 1.0, -2.0, 4.0};
        std::vector<int> seasons{0, 0, 1, 1};
        LassoConfig cfg;
        cfg.lambda_grid = {1e6};
        auto cv = cross_validate_lambda(cols, names(3), y, seasons, cfg);
        CHECK(cv.chosen_lambda == 1e6);
        auto m = fit_lasso(cols, names(3), y, cv.chosen_lambda, cfg);
        CHECK(m.nonzero_count == 0);
    }

    SUBCASE("planted support recovered across seasons") {
        const std::size_t n = 120, p = 50;
        std::vector<std::vector<double>> cols(p, std::vector<double>(n));
        for (auto& col : cols)
            for (auto& v : col) v = gauss(rng);
        std::vector<double> y(n);
        std::vector<int> seasons(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = 3.0 * cols[3][i] + 2.0 * cols[17][i] + 1.5 * cols[40][i] +
                   0.05 * gauss(rng);
            seasons[i] = static_cast<int>(i / 30);  // 4 seasons
        }
        LassoConfig cfg;
        auto cv = cross_validate_lambda(cols, names(p), y, seasons, cfg);
        auto m = fit_lasso(cols, names(p), y, cv.chosen_lambda, cfg);
        for (std::size_t truth : {3u, 17u, 40u}) CHECK(m.weights[truth] != 0.0);
    }

    SUBCASE("tied MSE picks the larger lambda") {
        // Two lambdas above the kill threshold produce identical all-zero
        // models and therefore identical validation MSE.
        auto cols = orthonormal_design();
        std::vector<double> y{3.0, 1.0, -2.0, 4.0};
        std::vector<int> seasons{0, 0, 1, 1};
        LassoConfig cfg;
        cfg.lambda_grid = {1e6, 2e6};
        auto cv = cross_validate_lambda(cols, names(3), y, seasons, cfg);
        CHECK(cv.chosen_lambda == 2e6);
    }

    SUBCASE("single-season training set falls back") {
        auto cols = orthonormal_design();
        std::vector<double> y{3.0, 1.0, -2.0, 4.0};
        std::vector<int> seasons{0, 0, 0, 0};
        LassoConfig cfg;
        auto cv = cross_validate_lambda(cols, names(3), y, seasons, cfg);
        CHECK(cv.single_season_fallback);
        CHECK(cv.chosen_lambda == cfg.fallback_lambda);
    }
}

namespace {

// Small LOSO fixture: 4 seasons x 8 rows, 3 informative columns.
struct LosoFixture {
    FeatureMatrix matrix;
    AlignedTarget target;

    explicit LosoFixture(unsigned seed = 47) {
        std::mt19937 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const std::size_t n = 32, p = 6;
        matrix.page_cols = p;
        matrix.cols.resize(p);
        for (std::size_t j = 0; j < p; ++j) {
            matrix.col_names.push_back("c" + std::to_string(j));
            matrix.cols[j].resize(n);
            for (auto& v : matrix.cols[j]) v = gauss(rng);
        }
        for (std::size_t i = 0; i < n; ++i) {
            matrix.rows.push_back({2010 + static_cast<int>(i / 8), 42});
            target.rows.push_back(matrix.rows.back());
            target.y.push_back(2.0 * matrix.cols[0][i] - matrix.cols[2][i] +
                               0.05 * gauss(rng) + 5.0);
            target.season_of_row.push_back(static_cast<int>(i / 8));
        }
        for (int s = 0; s < 4; ++s)
            target.season_labels.push_back("S" + std::to_string(s));
    }

    std::function<FeatureMatrix(std::span<const std::size_t>)> builder() const {
        return [this](std::span<const std::size_t>) { return matrix; };
    }
};

}  // namespace

TEST_CASE("loso_protocol") {
    LosoFixture fx;
    LassoConfig cfg;

    SUBCASE("one model per held-out season, all rows predicted") {
        auto r = loso_protocol(fx.builder(), fx.target, cfg);
        CHECK(r.models.size() == 4);
        CHECK(r.held_out == std::vector<std::string>{"S0", "S1", "S2", "S3"});
        CHECK(r.predictions.size() == fx.target.rows.size());
    }
    SUBCASE("held-out targets are never read during training") {
        TargetAccessLog log;
        auto r = loso_protocol(fx.builder(), fx.target, cfg, &log);
        // every row is held out exactly once over the 4 folds, so each
        // target is read exactly (folds - 1) times
        for (long reads : log.reads) CHECK(reads == 3);
    }
    SUBCASE("negative raw predictions clamp to zero with raw retained") {
        auto fx2 = fx;
        for (auto& v : fx2.target.y) v -= 30.0;  // force negative predictions
        auto r = loso_protocol(fx2.builder(), fx2.target, cfg);
        bool saw_clamp = false;
        for (std::size_t i = 0; i < r.predictions.size(); ++i) {
            CHECK(r.predictions[i] >= 0.0);
            if (r.predictions_raw[i] < 0.0) {
                CHECK(r.predictions[i] == 0.0);
                saw_clamp = true;
            }
        }
        CHECK(saw_clamp);
    }
    SUBCASE("bit-identical reruns") {
        auto a = loso_protocol(fx.builder(), fx.target, cfg);
        auto b = loso_protocol(fx.builder(), fx.target, cfg);
        CHECK(a.predictions_raw == b.predictions_raw);
        for (std::size_t m = 0; m < a.models.size(); ++m)
            CHECK(a.models[m].weights == b.models[m].weights);
    }
    SUBCASE("two seasons run with the inner-CV fallback") {
        LosoFixture fx2;
        // keep only seasons 0 and 1
        AlignedTarget t;
        for (std::size_t i = 0; i < fx2.target.rows.size(); ++i) {
            if (fx2.target.season_of_row[i] > 1) continue;
            t.rows.push_back(fx2.target.rows[i]);
            t.y.push_back(fx2.target.y[i]);
            t.season_of_row.push_back(fx2.target.season_of_row[i]);
        }
        t.season_labels = {"S0", "S1"};
        FeatureMatrix sliced = fx2.matrix;
        for (auto& col : sliced.cols) col.resize(16);
        sliced.rows.resize(16);
        auto r = loso_protocol(
            [&](std::span<const std::size_t>) { return sliced; }, t, cfg);
        CHECK(r.models.size() == 2);
    }
    SUBCASE("single season is rejected") {
        AlignedTarget t = fx.target;
        std::fill(t.season_of_row.begin(), t.season_of_row.end(), 0);
        CHECK_THROWS(loso_protocol(fx.builder(), t, cfg));
    }
}

TEST_CASE("predict") {
    FeatureMatrix x;
    x.page_cols = 1;
    x.col_names = {"c0"};
    x.cols = {{1.0, 1.0, 1.0}};
    x.rows = {{2010, 1}, {2010, 2}, {2010, 3}};
    std::vector<std::size_t> rows{0, 1, 2};

    TrainedModel zero;
    zero.col_names = x.col_names;
    zero.weights = {0.0};
    zero.intercept = 5.0;
    CHECK(predict_raw(zero, x, rows) == std::vector<double>{5.0, 5.0, 5.0});

    TrainedModel unit;
    unit.weights = {2.0};
    unit.intercept = 0.0;
    CHECK(predict_raw(unit, x, rows) == std::vector<double>{2.0, 2.0, 2.0});

    TrainedModel wrong;
    wrong.weights = {1.0, 2.0};
    CHECK_THROWS(predict_raw(wrong, x, rows));
}

TEST_CASE("model JSON round-trip") {
    TrainedModel m;
    m.col_names = {"a", "b"};
    m.weights = {0.25, 0.0};
    m.intercept = 1.5;
    m.lambda = 0.01;
    m.nonzero_count = 1;
    m.optimizer_name = "coordinate_descent";
    auto path = (std::filesystem::temp_directory_path() / "model_rt.json").string();
    save_model_json(path, m, "beef");
    auto loaded = load_model_json(path);
    CHECK(loaded.weights == m.weights);
    CHECK(loaded.intercept == m.intercept);
    CHECK(loaded.col_names == m.col_names);
    CHECK(loaded.optimizer_name == m.optimizer_name);
}
