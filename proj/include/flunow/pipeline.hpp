#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flunow/evaluate.hpp"
#include "flunow/featureset.hpp"
#include "flunow/healthdata.hpp"
#include "flunow/ingest.hpp"
#include "flunow/linkgraph.hpp"
#include "flunow/regress.hpp"

namespace flunow {

/// Stable FNV-1a over the canonical config string; embedded in every output.
std::uint64_t fnv1a(const std::string& text);
std::string config_hash(const std::string& canonical);

/// Everything one experiment cell needs, already loaded from disk.
struct PipelineInputs {
    std::map<std::string, WeeklySeries> weekly;  // merged, provenance-tagged
    IncidenceSeries incidence;
    std::vector<SeasonWindow> seasons;
    const LinkGraph* graph = nullptr;  // required for graph methods and D_I
    std::optional<FeatureList> categories;
    std::string ref_page = "Influenza";
    std::string country;
    LassoConfig lasso;
    std::size_t rank_top_n = 100;
    int cyclerank_k = 4;
    PPageRankOptions ppagerank_opts;
    bool paper_faithful_standardize = false;
    std::string hash;  // carried into output files
};

struct CellSpec {
    std::string method;   // categories | cyclerank | ppagerank
    std::string dataset;  // PV | PC+PV
};

struct CellResult {
    EvaluationReport report;
    LosoResult loso;
    AlignedTarget target;
    std::vector<std::string> feature_titles;
    std::vector<SeasonWindow> evaluated_seasons;
    FeatureMatrix analysis_matrix;  // globally standardized, for reports
};

/// Feature list for a cell: the configured categories list, or the top-n of
/// the requested ranking restricted to pages with weekly data.
FeatureList select_features(const PipelineInputs& in, const std::string& method);

/// PV keeps pageview-provenance points only; PC+PV keeps everything.
std::map<std::string, WeeklySeries> filter_dataset(
    const std::map<std::string, WeeklySeries>& weekly, const std::string& dataset);

/// Seasons fully covered by the filtered data (a season counts as covered
/// when it starts no earlier than the earliest data week).
std::vector<SeasonWindow> covered_seasons(
    const std::map<std::string, WeeklySeries>& weekly,
    const std::vector<SeasonWindow>& seasons);

/// One method x dataset cell: feature selection, leakage-safe LOSO training
/// with inner CV, per-season scoring.
CellResult run_cell(const PipelineInputs& in, const CellSpec& cell,
                    TargetAccessLog* log = nullptr);

/// Combined grid report shaped like the mean-PCC / peaks summary tables:
/// CSV rows country,model,dataset,mean_pcc,peaks.
void write_grid_csv(const std::string& path, const std::vector<CellResult>& cells,
                    const std::string& config_hash);

}  // namespace flunow
