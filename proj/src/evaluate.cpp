#include "flunow/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace flunow {

double pearson(std::span<const double> a, std::span<const double> b,
               bool* constant_flag) {
    if (a.size() != b.size()) throw std::invalid_argument("pearson: length mismatch");
    const std::size_t n = a.size();
    if (n < 2) throw std::invalid_argument("pearson: need at least 2 points");
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (constant_flag) *constant_flag = false;
    if (saa == 0.0 || sbb == 0.0) {
        if (constant_flag) *constant_flag = true;
        return 0.0;
    }
    return sab / std::sqrt(saa * sbb);
}

SeasonScore score_season(const std::string& label, std::span<const IsoWeek> weeks,
                         std::span<const double> truth,
                         std::span<const double> pred) {
    if (weeks.empty()) throw std::invalid_argument("score_season: empty season");
    if (weeks.size() != truth.size() || truth.size() != pred.size())
        throw std::invalid_argument("score_season: length mismatch");

    SeasonScore s;
    s.season = label;
    s.pcc = pearson(truth, pred, &s.pcc_flagged);

    auto argmax_first = [](std::span<const double> v) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i] > v[best]) best = i;  // strict: ties keep the earliest week
        return best;
    };
    std::size_t it = argmax_first(truth), ip = argmax_first(pred);
    s.peak_truth = weeks[it];
    s.peak_pred = weeks[ip];
    s.peak_exact = it == ip;
    long diff = static_cast<long>(it) - static_cast<long>(ip);
    s.peak_within_2 = std::abs(diff) <= 2;
    return s;
}

std::string EvaluationReport::peak_summary() const {
    return std::to_string(peaks_exact) + " (" + std::to_string(peaks_within_2) + ")";
}

EvaluationReport summarize(const std::vector<SeasonScore>& scores) {
    if (scores.empty()) throw std::invalid_argument("summarize: no season scores");
    EvaluationReport r;
    r.seasons = scores;
    for (const auto& s : scores) {
        r.mean_pcc += s.pcc;
        r.peaks_exact += s.peak_exact ? 1 : 0;
        r.peaks_within_2 += s.peak_within_2 ? 1 : 0;
    }
    r.mean_pcc /= scores.size();
    return r;
}

double feature_overlap(const std::vector<std::string>& a,
                       const std::vector<std::string>& b) {
    if (a.empty()) throw std::invalid_argument("feature_overlap: empty reference set");
    std::set<std::string> bset(b.begin(), b.end());
    std::size_t shared = 0;
    for (const auto& t : a)
        if (bset.count(t)) ++shared;
    return 100.0 * static_cast<double>(shared) / static_cast<double>(a.size());
}

std::string SelectionStats::format() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%d / %d / %.2f", min, max, mean);
    return buf;
}

SelectionStats selected_features(const std::vector<TrainedModel>& models,
                                 std::size_t page_cols) {
    if (models.empty()) throw std::invalid_argument("selected_features: no models");
    SelectionStats stats;
    std::set<std::string> uni;
    for (const auto& m : models) {
        int count = 0;
        for (std::size_t j = 0; j < page_cols && j < m.weights.size(); ++j) {
            if (m.weights[j] != 0.0) {
                ++count;
                uni.insert(m.col_names[j]);
            }
        }
        stats.per_model.push_back(count);
    }
    stats.union_features.assign(uni.begin(), uni.end());
    stats.min = *std::min_element(stats.per_model.begin(), stats.per_model.end());
    stats.max = *std::max_element(stats.per_model.begin(), stats.per_model.end());
    double sum = 0.0;
    for (int c : stats.per_model) sum += c;
    stats.mean = sum / stats.per_model.size();
    return stats;
}

std::vector<PredictorRow> top_k_predictors(const std::vector<TrainedModel>& models,
                                           const FeatureMatrix& x,
                                           std::span<const double> incidence,
                                           const LinkGraph* graph,
                                           const std::string& ref, std::size_t k) {
    if (k < 1) throw std::invalid_argument("top_k_predictors: k must be >= 1");
    if (models.empty()) throw std::invalid_argument("top_k_predictors: no models");

    bool have_graph = graph && graph->find(ref).has_value();
    std::vector<PredictorRow> rows;
    for (std::size_t j = 0; j < x.page_cols; ++j) {
        double mean_w = 0.0;
        for (const auto& m : models) mean_w += m.weights[j];
        mean_w /= models.size();
        if (mean_w <= 0.0) continue;

        PredictorRow row;
        row.title = x.col_names[j];
        row.mean_weight = mean_w;
        row.pcc = pearson(x.cols[j], incidence);
        if (have_graph && graph->find(row.title)) {
            row.distance_class =
                distance_class(shortest_path_distance(*graph, row.title, ref));
        } else {
            row.distance_class = "n/a";
        }
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), [](const PredictorRow& a, const PredictorRow& b) {
        if (a.mean_weight != b.mean_weight) return a.mean_weight > b.mean_weight;
        return a.title < b.title;
    });
    if (rows.size() > k) rows.resize(k);
    return rows;
}

namespace {

void write_header(std::ofstream& file, const std::string& config_hash) {
    if (!config_hash.empty())
        file << "# config_hash=" << config_hash << " version=" << FLUNOW_VERSION << "\n";
}

}  // namespace

void write_report_csv(const std::string& path, const EvaluationReport& report,
                      const std::string& config_hash) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write report: " + path);
    write_header(file, config_hash);
    file << "country,model,dataset,season,pcc,peak_truth,peak_pred,peak_exact,peak_within_2\n";
    char buf[32];
    for (const auto& s : report.seasons) {
        std::snprintf(buf, sizeof buf, "%.6f", s.pcc);
        file << report.country << "," << report.model << "," << report.dataset << ","
             << s.season << "," << buf << "," << to_string(s.peak_truth) << ","
             << to_string(s.peak_pred) << "," << (s.peak_exact ? 1 : 0) << ","
             << (s.peak_within_2 ? 1 : 0) << "\n";
    }
    std::snprintf(buf, sizeof buf, "%.6f", report.mean_pcc);
    file << report.country << "," << report.model << "," << report.dataset
         << ",mean," << buf << ",,,," << "\n";
    file << report.country << "," << report.model << "," << report.dataset
         << ",peaks,\"" << report.peak_summary() << "\",,,,\n";
}

void write_report_json(const std::string& path, const EvaluationReport& report,
                       const std::string& config_hash) {
    nlohmann::json seasons = nlohmann::json::array();
    for (const auto& s : report.seasons) {
        seasons.push_back({{"season", s.season},
                           {"pcc", s.pcc},
                           {"pcc_flagged", s.pcc_flagged},
                           {"peak_truth", to_string(s.peak_truth)},
                           {"peak_pred", to_string(s.peak_pred)},
                           {"peak_exact", s.peak_exact},
                           {"peak_within_2", s.peak_within_2}});
    }
    nlohmann::json j{{"country", report.country},
                     {"model", report.model},
                     {"dataset", report.dataset},
                     {"seasons", seasons},
                     {"mean_pcc", report.mean_pcc},
                     {"peaks", report.peak_summary()},
                     {"config_hash", config_hash},
                     {"version", FLUNOW_VERSION}};
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write report: " + path);
    file << j.dump(2) << "\n";
}

void write_predictions_csv(const std::string& path, const AlignedTarget& target,
                           std::span<const double> predictions,
                           const std::string& model, const std::string& dataset,
                           const std::string& config_hash) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write predictions: " + path);
    write_header(file, config_hash);
    file << "iso_year,iso_week,truth,prediction,model,dataset\n";
    char t[32], p[32];
    for (std::size_t i = 0; i < target.rows.size(); ++i) {
        std::snprintf(t, sizeof t, "%.10g", target.y[i]);
        std::snprintf(p, sizeof p, "%.10g", predictions[i]);
        file << target.rows[i].year << "," << target.rows[i].week << "," << t << ","
             << p << "," << model << "," << dataset << "\n";
    }
}

void write_predictor_csv(const std::string& path,
                         const std::vector<PredictorRow>& rows,
                         const std::string& config_hash) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write predictor report: " + path);
    write_header(file, config_hash);
    file << "rank,title,mean_weight,pcc,d_i\n";
    char w[32], p[32];
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::snprintf(w, sizeof w, "%.10g", rows[i].mean_weight);
        std::snprintf(p, sizeof p, "%.4f", rows[i].pcc);
        file << i + 1 << "," << rows[i].title << "," << w << "," << p << ",\""
             << rows[i].distance_class << "\"\n";
    }
}

}  // namespace flunow
