#include <doctest.h>

#include <cmath>
#include <random>

#include "flunow/evaluate.hpp"
#include "oracles.hpp"

using namespace flunow;

TEST_CASE("pearson") {
    std::vector<double> a{1, 2, 4, 3, 5};
    SUBCASE("self-correlation and antisymmetry") {
        CHECK(pearson(a, a) == doctest::Approx(1.0).epsilon(1e-12));
        std::vector<double> neg;
        for (double v : a) neg.push_back(-v);
        CHECK(pearson(a, neg) == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("constant series flagged and reported as 0") {
        std::vector<double> flat{2, 2, 2, 2, 2};
        bool flagged = false;
        CHECK(pearson(a, flat, &flagged) == 0.0);
        CHECK(flagged);
    }
    SUBCASE("errors") {
        std::vector<double> shorter{1, 2};
        CHECK_THROWS(pearson(a, shorter));
        std::vector<double> one{1.0};
        CHECK_THROWS(pearson(one, one));
    }
    SUBCASE("matches the direct-formula oracle on random pairs") {
        std::mt19937 rng(53);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<double> x(26), y(26);
            for (std::size_t i = 0; i < 26; ++i) {
                x[i] = gauss(rng);
                y[i] = 0.3 * x[i] + gauss(rng);
            }
            CHECK(pearson(x, y) ==
                  doctest::Approx(oracles::pearson_direct(x, y)).epsilon(1e-12));
        }
    }
    SUBCASE("invariance under positive affine transforms, sign flip on negation") {
        std::mt19937 rng(59);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> x(20), y(20), scaled(20), negated(20);
        for (std::size_t i = 0; i < 20; ++i) {
            x[i] = gauss(rng);
            y[i] = gauss(rng);
            scaled[i] = 3.5 * x[i] + 11.0;
            negated[i] = -x[i];
        }
        double base = pearson(x, y);
        CHECK(pearson(scaled, y) == doctest::Approx(base).epsilon(1e-12));
        CHECK(pearson(negated, y) == doctest::Approx(-base).epsilon(1e-12));
        CHECK(pearson(y, x) == doctest::Approx(base).epsilon(1e-12));
    }
}

namespace {

SeasonScore peak_case(int truth_idx, int pred_idx) {
    std::vector<IsoWeek> weeks;
    std::vector<double> truth(26, 1.0), pred(26, 1.0);
    IsoWeek w{2016, 42};
    for (int i = 0; i < 26; ++i, w = next_week(w)) weeks.push_back(w);
    truth[truth_idx] = 10.0;
    pred[pred_idx] = 10.0;
    return score_season("2016-2017", weeks, truth, pred);
}

}  // namespace

TEST_CASE("peak accuracy") {
    SUBCASE("exact peak") {
        auto s = peak_case(10, 10);
        CHECK(s.peak_exact);
        CHECK(s.peak_within_2);
    }
    SUBCASE("within two weeks") {
        auto s = peak_case(10, 12);
        CHECK_FALSE(s.peak_exact);
        CHECK(s.peak_within_2);
    }
    SUBCASE("outside the window") {
        auto s = peak_case(10, 13);
        CHECK_FALSE(s.peak_exact);
        CHECK_FALSE(s.peak_within_2);
    }
    SUBCASE("exact implies within-2 on random peaks") {
        std::mt19937 rng(61);
        std::uniform_int_distribution<int> idx(0, 25);
        for (int t = 0; t < 100; ++t) {
            auto s = peak_case(idx(rng), idx(rng));
            if (s.peak_exact) CHECK(s.peak_within_2);
        }
    }
    SUBCASE("argmax tie breaks to the earliest week") {
        std::vector<IsoWeek> weeks;
        IsoWeek w{2016, 42};
        for (int i = 0; i < 5; ++i, w = next_week(w)) weeks.push_back(w);
        std::vector<double> truth{1, 9, 9, 1, 1}, pred{1, 9, 9, 1, 1};
        auto s = score_season("t", weeks, truth, pred);
        CHECK(s.peak_truth == IsoWeek{2016, 43});
        CHECK(s.peak_exact);
    }
    SUBCASE("empty season rejected") {
        CHECK_THROWS(score_season("x", {}, {}, {}));
    }
}

TEST_CASE("summarize") {
    auto a = peak_case(10, 10);
    auto b = peak_case(10, 12);
    a.pcc = 0.8;
    b.pcc = 1.0;
    SUBCASE("mean PCC and peak cell") {
        auto r = summarize({a, b});
        CHECK(r.mean_pcc == doctest::Approx(0.9));
        CHECK(r.peak_summary() == "1 (2)");
    }
    SUBCASE("the peaks cell follows the exact <= within nesting") {
        auto c = peak_case(5, 20);
        auto r = summarize({a, b, c, peak_case(3, 3)});
        CHECK(r.peaks_exact <= r.peaks_within_2);
        CHECK(r.peak_summary() == "2 (3)");
    }
    SUBCASE("single season") {
        auto r = summarize({a});
        CHECK(r.mean_pcc == doctest::Approx(0.8));
    }
    SUBCASE("empty input rejected") {
        CHECK_THROWS(summarize({}));
    }
}

TEST_CASE("feature_overlap") {
    std::vector<std::string> a{"W", "X", "Y", "Z"};
    std::vector<std::string> b{"Z", "P1", "P2", "P3", "P4", "P5", "P6", "P7"};
    CHECK(feature_overlap(a, a) == 100.0);
    CHECK(feature_overlap(a, {"other"}) == 0.0);
    CHECK(feature_overlap(a, b) == 25.0);
    CHECK(feature_overlap(b, a) == 12.5);
    CHECK_THROWS(feature_overlap({}, a));
}

namespace {

TrainedModel model_with(std::vector<std::string> cols, std::vector<double> w) {
    TrainedModel m;
    m.col_names = std::move(cols);
    m.weights = std::move(w);
    return m;
}

}  // namespace

TEST_CASE("selected_features") {
    SUBCASE("union and counts") {
        auto m1 = model_with({"A", "B", "C"}, {1.0, 0.5, 0.0});
        auto m2 = model_with({"A", "B", "C"}, {0.0, -0.3, 0.7});
        auto stats = selected_features({m1, m2}, 3);
        CHECK(stats.union_features == std::vector<std::string>{"A", "B", "C"});
        CHECK(stats.per_model == std::vector<int>{2, 2});
        CHECK(stats.format() == "2 / 2 / 2.00");
    }
    SUBCASE("all-zero models") {
        auto m = model_with({"A"}, {0.0});
        auto stats = selected_features({m, m}, 1);
        CHECK(stats.union_features.empty());
        CHECK(stats.format() == "0 / 0 / 0.00");
    }
    SUBCASE("week-bit columns excluded") {
        auto m = model_with({"A", "week_1"}, {1.0, 1.0});
        auto stats = selected_features({m}, 1);
        CHECK(stats.union_features == std::vector<std::string>{"A"});
    }
    SUBCASE("published-style min/max/mean cell") {
        std::vector<TrainedModel> models;
        for (int count : {30, 65, 40, 60}) {
            std::vector<std::string> cols;
            std::vector<double> w;
            for (int j = 0; j < 70; ++j) {
                cols.push_back("p" + std::to_string(j));
                w.push_back(j < count ? 1.0 : 0.0);
            }
            models.push_back(model_with(cols, w));
        }
        auto stats = selected_features(models, 70);
        CHECK(stats.min == 30);
        CHECK(stats.max == 65);
        CHECK(stats.mean == doctest::Approx(48.75));
        CHECK(stats.format() == "30 / 65 / 48.75");
    }
}

TEST_CASE("top_k_predictors") {
    // Planted: column F drives the target.
    std::mt19937 rng(67);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t n = 40;
    FeatureMatrix x;
    x.page_cols = 3;
    x.col_names = {"F", "G", "Influenza"};
    x.cols.resize(3, std::vector<double>(n));
    std::vector<double> incidence(n);
    for (std::size_t i = 0; i < n; ++i) {
        x.cols[0][i] = gauss(rng);
        x.cols[1][i] = gauss(rng);
        x.cols[2][i] = gauss(rng);
        incidence[i] = 4.0 * x.cols[0][i] + 0.01 * gauss(rng);
        x.rows.push_back({2010, static_cast<int>(i % 52) + 1});
    }
    auto m1 = model_with(x.col_names, {2.0, 0.4, 0.5});
    auto m2 = model_with(x.col_names, {1.8, -0.9, 0.5});

    LinkGraph g;
    g.add_edge("F", "Influenza");
    g.add_edge("Influenza", "F");
    g.finalize();

    SUBCASE("planted driver ranks first with PCC near 1") {
        auto rows = top_k_predictors({m1, m2}, x, incidence, &g, "Influenza", 5);
        REQUIRE(!rows.empty());
        CHECK(rows[0].title == "F");
        CHECK(rows[0].pcc > 0.99);
        CHECK(rows[0].distance_class == "1");
    }
    SUBCASE("negative mean weight excluded") {
        auto rows = top_k_predictors({m1, m2}, x, incidence, &g, "Influenza", 5);
        for (const auto& r : rows) CHECK(r.title != "G");
    }
    SUBCASE("reference page as its own predictor has distance 0") {
        auto rows = top_k_predictors({m1, m2}, x, incidence, &g, "Influenza", 5);
        bool found = false;
        for (const auto& r : rows)
            if (r.title == "Influenza") {
                CHECK(r.distance_class == "0");
                found = true;
            }
        CHECK(found);
    }
    SUBCASE("missing graph reports distances unavailable") {
        auto rows = top_k_predictors({m1, m2}, x, incidence, nullptr, "Influenza", 2);
        for (const auto& r : rows) CHECK(r.distance_class == "n/a");
    }
}
