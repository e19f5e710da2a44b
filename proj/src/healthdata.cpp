#include "flunow/healthdata.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace flunow {

IncidenceSeries load_incidence_csv(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot open incidence CSV: " + path);
    IncidenceSeries inc;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(file, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        char country[64];
        int year = 0, week = 0;
        double value = 0.0;
        if (std::sscanf(line.c_str(), "%63[^,],%d,%d,%lf", country, &year, &week, &value) != 4)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed incidence row");
        if (week < 1 || week > weeks_in_iso_year(year))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": invalid week " +
                                     std::to_string(week));
        if (value < 0.0)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": negative incidence at " + to_string({year, week}));
        if (inc.country.empty()) inc.country = country;
        IsoWeek w{year, week};
        if (!inc.points.emplace(w, value).second)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": duplicate week " +
                                     to_string(w));
    }
    return inc;
}

void write_incidence_csv(const std::string& path, const IncidenceSeries& inc) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write incidence CSV: " + path);
    file << "country,iso_year,iso_week,incidence\n";
    char buf[32];
    for (const auto& [week, value] : inc.points) {
        std::snprintf(buf, sizeof buf, "%.10g", value);
        file << inc.country << "," << week.year << "," << week.week << "," << buf << "\n";
    }
}

SeasonWindow season_window(const std::string& label) {
    int y1 = 0, y2 = 0;
    if (std::sscanf(label.c_str(), "%d-%d", &y1, &y2) != 2 || y2 != y1 + 1)
        throw std::invalid_argument("season label must be consecutive years 'YYYY-YYYY+1': '" +
                                    label + "'");
    SeasonWindow s;
    s.label = label;
    s.weeks = week_range({y1, 42}, {y2, 15});
    s.has_week_53 = weeks_in_iso_year(y1) == 53;
    return s;
}

std::vector<SeasonWindow> season_range(int first_year, int count) {
    std::vector<SeasonWindow> seasons;
    seasons.reserve(count);
    for (int i = 0; i < count; ++i) {
        int y = first_year + i;
        seasons.push_back(season_window(std::to_string(y) + "-" + std::to_string(y + 1)));
    }
    return seasons;
}

AlignedTarget align(const IncidenceSeries& inc, const std::vector<SeasonWindow>& seasons) {
    AlignedTarget out;
    for (std::size_t s = 0; s < seasons.size(); ++s) {
        out.season_labels.push_back(seasons[s].label);
        for (IsoWeek w : seasons[s].weeks) {
            auto it = inc.points.find(w);
            if (it == inc.points.end())
                throw std::runtime_error("incidence missing for season " + seasons[s].label +
                                         " week " + to_string(w));
            out.rows.push_back(w);
            out.y.push_back(it->second);
            out.season_of_row.push_back(static_cast<int>(s));
        }
    }
    return out;
}

}  // namespace flunow
