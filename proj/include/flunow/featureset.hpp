#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "flunow/ingest.hpp"
#include "flunow/weeks.hpp"

namespace flunow {

struct FeatureList {
    std::string method;    // categories | cyclerank | ppagerank
    std::string language;
    std::vector<std::string> titles;  // unique, ordered
};

/// Text file, one title per line, '#' comments; duplicates rejected.
FeatureList load_feature_list(const std::string& path, const std::string& method = "",
                              const std::string& language = "");
void write_feature_list(const std::string& path, const FeatureList& list);

struct Scaler {
    double mean = 0.0;
    double std = 0.0;  // population (1/N) convention; 0 marks a constant column
};

inline constexpr std::size_t kWeekBits = 52;

/// Design matrix, column-major. The first `page_cols` columns are
/// standardized page views in feature-list order, followed by 52 one-hot
/// week columns.
struct FeatureMatrix {
    std::vector<IsoWeek> rows;
    std::vector<std::string> col_names;
    std::vector<std::vector<double>> cols;
    std::size_t page_cols = 0;
    std::map<std::string, Scaler> scalers;
    std::vector<std::string> warnings;  // e.g. titles with no series

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_cols() const { return cols.size(); }
    double at(std::size_t row, std::size_t col) const { return cols[col][row]; }
};

/// Values on the full axis: zero before the first observation (page not yet
/// created), last valid value propagated across interior and trailing gaps.
std::vector<double> forward_fill(const WeeklySeries& series,
                                 const std::vector<IsoWeek>& axis);

/// (x - mean)/std with statistics from `fit_rows` only; a constant column
/// maps to all zeros.
std::vector<double> standardize(std::span<const double> column,
                                std::span<const std::size_t> fit_rows,
                                Scaler* fitted = nullptr);

std::vector<double> apply_scaler(std::span<const double> column, const Scaler& s);

/// Bit (week-1) set; week 53 folds onto week 52's slot.
std::array<double, kWeekBits> one_hot_week(int week);

/// Standardization statistics come from `fit_rows`; pass all row indices for
/// the global ("paper-faithful") mode.
FeatureMatrix build_matrix(const FeatureList& list,
                           const std::map<std::string, WeeklySeries>& series,
                           const std::vector<IsoWeek>& rows,
                           std::span<const std::size_t> fit_rows);

/// CSV with header row; scaler parameters in a JSON sidecar `<path>.scalers.json`.
void write_matrix_csv(const std::string& path, const FeatureMatrix& m,
                      const std::string& config_hash = "");
FeatureMatrix read_matrix_csv(const std::string& path);

}  // namespace flunow
