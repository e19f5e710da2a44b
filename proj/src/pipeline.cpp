#include "flunow/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace flunow {

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string config_hash(const std::string& canonical) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(canonical)));
    return buf;
}

FeatureList select_features(const PipelineInputs& in, const std::string& method) {
    if (method == "categories") {
        if (!in.categories)
            throw std::runtime_error("method 'categories' needs a feature list file");
        return *in.categories;
    }
    if (!in.graph)
        throw std::runtime_error("method '" + method + "' needs a link graph");

    RankingResult ranking;
    if (method == "cyclerank") {
        ranking = cyclerank(*in.graph, in.ref_page, in.cyclerank_k);
    } else if (method == "ppagerank") {
        ranking = ppagerank(*in.graph, {in.ref_page}, in.ppagerank_opts);
    } else {
        throw std::runtime_error("unknown feature method '" + method + "'");
    }

    FeatureList list;
    list.method = method;
    // The reference page itself stays eligible as a predictor.
    for (auto& title : top_n(*in.graph, ranking, in.rank_top_n)) {
        if (in.weekly.count(title)) list.titles.push_back(std::move(title));
    }
    if (list.titles.empty())
        throw std::runtime_error("method '" + method + "' selected no pages with weekly data");
    return list;
}

std::map<std::string, WeeklySeries> filter_dataset(
    const std::map<std::string, WeeklySeries>& weekly, const std::string& dataset) {
    if (dataset == "PC+PV") return weekly;
    if (dataset != "PV")
        throw std::runtime_error("unknown dataset '" + dataset + "' (want PV or PC+PV)");
    std::map<std::string, WeeklySeries> out;
    for (const auto& [page, series] : weekly) {
        WeeklySeries filtered;
        filtered.page = page;
        for (const auto& [week, pt] : series.points)
            if (pt.provenance == Provenance::pageviews) filtered.points[week] = pt;
        if (!filtered.points.empty()) out[page] = std::move(filtered);
    }
    return out;
}

std::vector<SeasonWindow> covered_seasons(
    const std::map<std::string, WeeklySeries>& weekly,
    const std::vector<SeasonWindow>& seasons) {
    IsoWeek earliest{9999, 1};
    for (const auto& [page, series] : weekly)
        if (!series.points.empty())
            earliest = std::min(earliest, series.points.begin()->first);
    std::vector<SeasonWindow> out;
    for (const auto& s : seasons)
        if (!(s.weeks.front() < earliest)) out.push_back(s);
    return out;
}

CellResult run_cell(const PipelineInputs& in, const CellSpec& cell,
                    TargetAccessLog* log) {
    CellResult result;
    auto weekly = filter_dataset(in.weekly, cell.dataset);
    result.evaluated_seasons = covered_seasons(weekly, in.seasons);
    if (result.evaluated_seasons.size() < 2)
        throw std::runtime_error("dataset " + cell.dataset +
                                 " covers fewer than 2 seasons; cannot run LOSO");

    FeatureList features = select_features(in, cell.method);
    result.feature_titles = features.titles;
    result.target = align(in.incidence, result.evaluated_seasons);

    std::vector<std::size_t> all_rows(result.target.rows.size());
    std::iota(all_rows.begin(), all_rows.end(), 0);

    auto build = [&](std::span<const std::size_t> fit_rows) {
        return build_matrix(features, weekly, result.target.rows,
                            in.paper_faithful_standardize
                                ? std::span<const std::size_t>(all_rows)
                                : fit_rows);
    };
    result.loso = loso_protocol(build, result.target, in.lasso, log);

    std::vector<SeasonScore> scores;
    for (std::size_t s = 0; s < result.evaluated_seasons.size(); ++s) {
        std::vector<IsoWeek> weeks;
        std::vector<double> truth, pred;
        for (std::size_t i = 0; i < result.target.rows.size(); ++i) {
            if (result.target.season_of_row[i] != static_cast<int>(s)) continue;
            weeks.push_back(result.target.rows[i]);
            truth.push_back(result.target.y[i]);
            pred.push_back(result.loso.predictions[i]);
        }
        scores.push_back(
            score_season(result.evaluated_seasons[s].label, weeks, truth, pred));
    }
    result.report = summarize(scores);
    result.report.model = cell.method;
    result.report.dataset = cell.dataset;
    result.report.country = in.country;

    // Matrix for feature-analysis reports; statistics over all rows.
    result.analysis_matrix =
        build_matrix(features, weekly, result.target.rows, all_rows);
    return result;
}

void write_grid_csv(const std::string& path, const std::vector<CellResult>& cells,
                    const std::string& config_hash) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write grid report: " + path);
    if (!config_hash.empty())
        file << "# config_hash=" << config_hash << " version=" << FLUNOW_VERSION << "\n";
    file << "country,model,dataset,seasons,mean_pcc,peaks\n";
    char buf[32];
    for (const auto& c : cells) {
        std::snprintf(buf, sizeof buf, "%.6f", c.report.mean_pcc);
        file << c.report.country << "," << c.report.model << "," << c.report.dataset
             << "," << c.report.seasons.size() << "," << buf << ",\""
             << c.report.peak_summary() << "\"\n";
    }
}

}  // namespace flunow
