#include "flunow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "flunow/featureset.hpp"

namespace flunow {

namespace {

std::string page_name(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%03d", prefix, i);
    return buf;
}

}  // namespace

SynthOutput generate(const SynthScenario& s) {
    if (s.signal_pages > s.pages)
        throw std::invalid_argument("synth: signal_pages must not exceed pages");
    if (s.seasons < 1) throw std::invalid_argument("synth: need at least one season");

    SynthOutput out;
    out.seasons = season_range(s.first_year, s.seasons);
    // Margin around the seasons so forward-fill and merges have room.
    out.axis = week_range({s.first_year, 20}, {s.first_year + s.seasons, 25});

    std::mt19937_64 rng(s.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    out.true_weights = s.true_weights;
    if (out.true_weights.empty()) out.true_weights.assign(s.signal_pages, 1.0);
    if (static_cast<int>(out.true_weights.size()) != s.signal_pages)
        throw std::invalid_argument("synth: true_weights size must equal signal_pages");
    for (double w : out.true_weights)
        if (w <= 0.0) throw std::invalid_argument("synth: true weights must be positive");

    // Incidence: low baseline plus one smooth bump per season, peak drawn
    // between week 49 and week 8.
    out.incidence.country = "SY";
    std::map<IsoWeek, double> inc;
    for (IsoWeek w : out.axis) inc[w] = 2.0;
    for (const auto& season : out.seasons) {
        auto index_of_week = [&](int week) {
            for (std::size_t i = 0; i < season.weeks.size(); ++i)
                if (season.weeks[i].week == week) return static_cast<int>(i);
            return -1;
        };
        int lo = index_of_week(49), hi = index_of_week(8);
        std::uniform_int_distribution<int> peak_dist(lo, hi);
        int peak = peak_dist(rng);
        out.peak_weeks.push_back(season.weeks[peak]);
        double amplitude = s.signal_scale * (0.8 + 0.4 * unif(rng));
        double width = 2.5 + unif(rng);
        for (std::size_t i = 0; i < season.weeks.size(); ++i) {
            double d = (static_cast<double>(i) - peak) / width;
            inc[season.weeks[i]] += amplitude * std::exp(-0.5 * d * d);
        }
    }
    // Integer incidence keeps the noiseless weight-1 page identical to the
    // target after the count rounding below.
    for (auto& [w, v] : inc) v = static_cast<double>(std::llround(v));
    out.incidence.points = std::move(inc);

    // Signal pages follow the incidence; decoys are autocorrelated noise.
    for (int j = 0; j < s.pages; ++j) {
        bool is_signal = j < s.signal_pages;
        std::string name = is_signal ? page_name("Signal", j + 1)
                                     : page_name("Decoy", j - s.signal_pages + 1);
        if (is_signal) out.signal_titles.push_back(name);
        WeeklySeries series;
        series.page = name;
        double ar = 0.0;
        for (IsoWeek w : out.axis) {
            double value;
            if (is_signal) {
                value = out.true_weights[j] * out.incidence.points.at(w) +
                        s.noise_std * gauss(rng);
            } else {
                ar = 0.8 * ar + gauss(rng);
                value = 50.0 + 10.0 * ar;
            }
            if (s.spike_rate > 0.0 && unif(rng) < s.spike_rate) {
                value *= 2.0 + 2.0 * unif(rng);
                ++out.spike_events;
            }
            auto count = static_cast<std::int64_t>(std::llround(std::max(0.0, value)));
            series.points[w] = WeekPoint{
                count, w < kDefaultCutover ? Provenance::pagecounts : Provenance::pageviews};
        }
        out.series[name] = std::move(series);
    }
    return out;
}

LinkGraph synth_graph(const SynthOutput& out, std::uint64_t seed) {
    LinkGraph g;
    int ref = g.add_node(kSynthRefPage);
    std::vector<int> ids;
    for (const auto& [name, series] : out.series) ids.push_back(g.add_node(name));
    for (const auto& name : out.signal_titles) {
        int id = g.require(name);
        g.add_edge(ref, id);
        g.add_edge(id, ref);
    }
    // One-way links into a few decoys, plus decoy-to-decoy clutter.
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
    for (std::size_t k = 0; k < ids.size(); ++k) {
        if (k % 7 == 0) g.add_edge(ref, ids[pick(rng)]);
        g.add_edge(ids[pick(rng)], ids[pick(rng)]);
    }
    g.finalize();
    return g;
}

void write_synth_dataset(const std::string& dir, const SynthScenario& s,
                         const SynthOutput& out) {
    std::filesystem::create_directories(dir);
    auto path = [&](const char* name) { return dir + "/" + name; };

    write_weekly_csv(path("weekly.csv"), out.series);
    write_incidence_csv(path("incidence.csv"), out.incidence);

    FeatureList list;
    list.method = "categories";
    for (const auto& [name, series] : out.series) list.titles.push_back(name);
    write_feature_list(path("pages.txt"), list);

    LinkGraph g = synth_graph(out, s.seed + 1);
    std::ofstream graph_file(path("graph.tsv"));
    for (std::size_t u = 0; u < g.node_count(); ++u)
        for (int v : g.out(static_cast<int>(u)))
            graph_file << g.title(static_cast<int>(u)) << "\t" << g.title(v) << "\n";

    nlohmann::json truth{{"seasons", s.seasons},
                         {"pages", s.pages},
                         {"signal_pages", s.signal_pages},
                         {"noise_std", s.noise_std},
                         {"spike_rate", s.spike_rate},
                         {"seed", s.seed},
                         {"signal_scale", s.signal_scale},
                         {"first_year", s.first_year},
                         {"spike_events", out.spike_events}};
    truth["signal_titles"] = out.signal_titles;
    truth["true_weights"] = out.true_weights;
    for (const auto& w : out.peak_weeks) truth["peak_weeks"].push_back(to_string(w));
    std::ofstream truth_file(path("truth.json"));
    truth_file << truth.dump(2) << "\n";
}

}  // namespace flunow
