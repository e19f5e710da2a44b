#include "flunow/featureset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "flunow/linkgraph.hpp"

namespace flunow {

FeatureList load_feature_list(const std::string& path, const std::string& method,
                              const std::string& language) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot open feature list: " + path);
    FeatureList list;
    list.method = method;
    list.language = language;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(file, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::string title = LinkGraph::normalize_title(line);
        if (!seen.insert(title).second)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": duplicate title '" + title + "'");
        list.titles.push_back(std::move(title));
    }
    if (list.titles.empty()) throw std::runtime_error("empty feature list: " + path);
    return list;
}

void write_feature_list(const std::string& path, const FeatureList& list) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write feature list: " + path);
    if (!list.method.empty()) file << "# method=" << list.method << "\n";
    for (const auto& t : list.titles) file << t << "\n";
}

std::vector<double> forward_fill(const WeeklySeries& series,
                                 const std::vector<IsoWeek>& axis) {
    std::vector<double> out(axis.size(), 0.0);
    auto it = series.points.begin();
    bool seen_any = false;
    double last = 0.0;
    for (std::size_t i = 0; i < axis.size(); ++i) {
        while (it != series.points.end() && it->first < axis[i]) {
            last = static_cast<double>(it->second.count);
            seen_any = true;
            ++it;
        }
        if (it != series.points.end() && it->first == axis[i]) {
            last = static_cast<double>(it->second.count);
            seen_any = true;
            ++it;
        }
        out[i] = seen_any ? last : 0.0;
    }
    return out;
}

std::vector<double> standardize(std::span<const double> column,
                                std::span<const std::size_t> fit_rows,
                                Scaler* fitted) {
    if (fit_rows.empty()) throw std::invalid_argument("standardize: empty fit row set");
    double mean = 0.0;
    for (std::size_t r : fit_rows) mean += column[r];
    mean /= static_cast<double>(fit_rows.size());
    double var = 0.0;
    for (std::size_t r : fit_rows) {
        double d = column[r] - mean;
        var += d * d;
    }
    var /= static_cast<double>(fit_rows.size());
    Scaler s{mean, std::sqrt(var)};
    if (fitted) *fitted = s;
    return apply_scaler(column, s);
}

std::vector<double> apply_scaler(std::span<const double> column, const Scaler& s) {
    std::vector<double> out(column.size());
    if (s.std == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
    } else {
        for (std::size_t i = 0; i < column.size(); ++i) out[i] = (column[i] - s.mean) / s.std;
    }
    return out;
}

std::array<double, kWeekBits> one_hot_week(int week) {
    if (week < 1 || week > 53)
        throw std::invalid_argument("week out of range [1,53]: " + std::to_string(week));
    std::array<double, kWeekBits> bits{};
    bits[std::min(week, 52) - 1] = 1.0;
    return bits;
}

FeatureMatrix build_matrix(const FeatureList& list,
                           const std::map<std::string, WeeklySeries>& series,
                           const std::vector<IsoWeek>& rows,
                           std::span<const std::size_t> fit_rows) {
    if (rows.empty()) throw std::invalid_argument("build_matrix: empty row set");
    FeatureMatrix m;
    m.rows = rows;
    m.page_cols = list.titles.size();
    m.cols.resize(list.titles.size() + kWeekBits);
    m.col_names = list.titles;

    static const WeeklySeries kEmpty{};
    std::vector<const WeeklySeries*> sources(list.titles.size(), &kEmpty);
    for (std::size_t j = 0; j < list.titles.size(); ++j) {
        auto it = series.find(list.titles[j]);
        if (it != series.end()) {
            sources[j] = &it->second;
        } else {
            m.warnings.push_back("no weekly series for '" + list.titles[j] +
                                 "', using zero column");
        }
    }

    std::vector<Scaler> fitted(list.titles.size());
#pragma omp parallel for schedule(static)
    for (long j = 0; j < static_cast<long>(list.titles.size()); ++j) {
        auto filled = forward_fill(*sources[j], rows);
        m.cols[j] = standardize(filled, fit_rows, &fitted[j]);
    }
    for (std::size_t j = 0; j < list.titles.size(); ++j)
        m.scalers[list.titles[j]] = fitted[j];

    for (std::size_t b = 0; b < kWeekBits; ++b) {
        m.col_names.push_back("week_" + std::to_string(b + 1));
        m.cols[m.page_cols + b].assign(rows.size(), 0.0);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto bits = one_hot_week(rows[i].week);
        for (std::size_t b = 0; b < kWeekBits; ++b)
            m.cols[m.page_cols + b][i] = bits[b];
    }
    return m;
}

void write_matrix_csv(const std::string& path, const FeatureMatrix& m,
                      const std::string& config_hash) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write matrix: " + path);
    if (!config_hash.empty())
        file << "# page_cols=" << m.page_cols << " config_hash=" << config_hash
             << " version=" << FLUNOW_VERSION << "\n";
    else
        file << "# page_cols=" << m.page_cols << "\n";
    file << "iso_year,iso_week";
    for (const auto& name : m.col_names) file << "," << name;
    file << "\n";
    char buf[32];
    for (std::size_t i = 0; i < m.n_rows(); ++i) {
        file << m.rows[i].year << "," << m.rows[i].week;
        for (std::size_t j = 0; j < m.n_cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m.at(i, j));
            file << "," << buf;
        }
        file << "\n";
    }

    nlohmann::json scalers;
    for (const auto& [title, s] : m.scalers)
        scalers[title] = {{"mean", s.mean}, {"std", s.std}};
    std::ofstream side(path + ".scalers.json");
    side << scalers.dump(2) << "\n";
}

FeatureMatrix read_matrix_csv(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot open matrix: " + path);
    FeatureMatrix m;
    std::string line;
    bool header_seen = false;
    while (std::getline(file, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto pos = line.find("page_cols=");
            if (pos != std::string::npos)
                m.page_cols = std::stoul(line.substr(pos + 10));
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            std::size_t pos = 0;
            int field = 0;
            while (pos <= line.size()) {
                auto c = line.find(',', pos);
                if (c == std::string::npos) c = line.size();
                if (field >= 2) m.col_names.push_back(line.substr(pos, c - pos));
                ++field;
                pos = c + 1;
            }
            m.cols.resize(m.col_names.size());
            continue;
        }
        std::size_t pos = 0;
        int field = 0;
        IsoWeek w;
        while (pos <= line.size()) {
            auto c = line.find(',', pos);
            if (c == std::string::npos) c = line.size();
            std::string tok = line.substr(pos, c - pos);
            if (field == 0)
                w.year = std::stoi(tok);
            else if (field == 1)
                w.week = std::stoi(tok);
            else
                m.cols[field - 2].push_back(std::stod(tok));
            ++field;
            pos = c + 1;
        }
        m.rows.push_back(w);
    }

    std::ifstream side(path + ".scalers.json");
    if (side) {
        nlohmann::json scalers = nlohmann::json::parse(side);
        for (auto& [title, s] : scalers.items())
            m.scalers[title] = Scaler{s["mean"], s["std"]};
    }
    return m;
}

}  // namespace flunow
