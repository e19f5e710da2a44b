#pragma once

#include <span>
#include <string>
#include <vector>

#include "flunow/healthdata.hpp"
#include "flunow/linkgraph.hpp"
#include "flunow/regress.hpp"
#include "flunow/weeks.hpp"

namespace flunow {

/// Sample Pearson correlation. A constant input makes the coefficient
/// undefined; it is reported as 0 with `constant_flag` set.
double pearson(std::span<const double> a, std::span<const double> b,
               bool* constant_flag = nullptr);

struct SeasonScore {
    std::string season;
    double pcc = 0.0;
    bool pcc_flagged = false;  // constant series
    IsoWeek peak_truth, peak_pred;
    bool peak_exact = false;
    bool peak_within_2 = false;
};

/// Peak = argmax over the season, ties to the earliest week;
/// within_2 when the argmax indices differ by at most 2.
SeasonScore score_season(const std::string& label, std::span<const IsoWeek> weeks,
                         std::span<const double> truth,
                         std::span<const double> pred);

struct EvaluationReport {
    std::string model;    // cyclerank | ppagerank | categories
    std::string dataset;  // PV | PC+PV
    std::string country;
    std::vector<SeasonScore> seasons;
    double mean_pcc = 0.0;
    int peaks_exact = 0;
    int peaks_within_2 = 0;

    /// "e (w)" cell format: exact count, within-two count.
    std::string peak_summary() const;
};

EvaluationReport summarize(const std::vector<SeasonScore>& scores);

/// 100 * |A intersect B| / |A|, exact titles; asymmetric by definition.
double feature_overlap(const std::vector<std::string>& a,
                       const std::vector<std::string>& b);

struct SelectionStats {
    std::vector<std::string> union_features;  // sorted
    std::vector<int> per_model;
    int min = 0, max = 0;
    double mean = 0.0;

    std::string format() const;  // "min / max / mean"
};

/// Union of nonzero-weight page columns across models (week bits excluded),
/// plus per-model nonzero page counts.
SelectionStats selected_features(const std::vector<TrainedModel>& models,
                                 std::size_t page_cols);

struct PredictorRow {
    std::string title;
    double mean_weight = 0.0;
    double pcc = 0.0;
    std::string distance_class;  // "0".."3", "> 3", or "n/a"
};

/// Top-k page features by mean weight across models, positive means only.
/// Per-feature PCC is computed against the incidence rows; distances are
/// taken from `graph` when provided (class "n/a" otherwise).
std::vector<PredictorRow> top_k_predictors(const std::vector<TrainedModel>& models,
                                           const FeatureMatrix& x,
                                           std::span<const double> incidence,
                                           const LinkGraph* graph,
                                           const std::string& ref, std::size_t k);

void write_report_csv(const std::string& path, const EvaluationReport& report,
                      const std::string& config_hash = "");
void write_report_json(const std::string& path, const EvaluationReport& report,
                       const std::string& config_hash = "");

/// Plot-ready per-week CSV `iso_year,iso_week,truth,prediction,model,dataset`.
void write_predictions_csv(const std::string& path, const AlignedTarget& target,
                           std::span<const double> predictions,
                           const std::string& model, const std::string& dataset,
                           const std::string& config_hash = "");

void write_predictor_csv(const std::string& path,
                         const std::vector<PredictorRow>& rows,
                         const std::string& config_hash = "");

}  // namespace flunow
