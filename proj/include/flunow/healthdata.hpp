#pragma once

#include <map>
#include <string>
#include <vector>

#include "flunow/weeks.hpp"

namespace flunow {

struct IncidenceSeries {
    std::string country;
    std::map<IsoWeek, double> points;  // incidence per 100,000
};

/// One influenza season: ISO week 42 through week 15 of the following year.
/// 26 weeks normally; 27 when the starting year has an ISO week 53 (flagged).
struct SeasonWindow {
    std::string label;  // "YYYY-YYYY+1"
    std::vector<IsoWeek> weeks;
    bool has_week_53 = false;
};

/// CSV header `country,iso_year,iso_week,incidence`; dot decimal separator.
IncidenceSeries load_incidence_csv(const std::string& path);

void write_incidence_csv(const std::string& path, const IncidenceSeries& inc);

SeasonWindow season_window(const std::string& label);

/// Convenience: consecutive season windows starting at `first_year`.
std::vector<SeasonWindow> season_range(int first_year, int count);

/// Targets aligned row-by-row with a design matrix: row i carries the
/// incidence of rows[i], and season_of_row maps it back to its window.
struct AlignedTarget {
    std::vector<IsoWeek> rows;
    std::vector<double> y;
    std::vector<int> season_of_row;
    std::vector<std::string> season_labels;
};

/// Throws if any requested season week is missing from the incidence series.
AlignedTarget align(const IncidenceSeries& inc,
                    const std::vector<SeasonWindow>& seasons);

}  // namespace flunow
