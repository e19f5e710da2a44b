#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flunow/healthdata.hpp"
#include "flunow/ingest.hpp"
#include "flunow/linkgraph.hpp"

namespace flunow {

/// Coupled synthetic incidence + pageview scenario with planted linear
/// structure. Deterministic given the seed.
struct SynthScenario {
    int seasons = 6;
    int pages = 200;
    int signal_pages = 10;
    std::vector<double> true_weights;  // empty -> 1.0 per signal page
    double noise_std = 0.0;            // absolute, on page counts
    double spike_rate = 0.0;           // media-spike probability per page-week
    std::uint64_t seed = 1;
    int first_year = 2010;
    double signal_scale = 100.0;       // incidence bump amplitude
};

struct SynthOutput {
    std::map<std::string, WeeklySeries> series;
    IncidenceSeries incidence;
    std::vector<SeasonWindow> seasons;
    std::vector<IsoWeek> axis;  // full weekly axis the series cover
    std::vector<std::string> signal_titles;
    std::vector<double> true_weights;
    std::vector<IsoWeek> peak_weeks;  // one per season
    std::size_t spike_events = 0;
};

SynthOutput generate(const SynthScenario& s);

/// Writes weekly.csv, incidence.csv, pages.txt, graph.tsv and truth.json in
/// the formats the rest of the pipeline consumes.
void write_synth_dataset(const std::string& dir, const SynthScenario& s,
                         const SynthOutput& out);

/// Small link graph matching the scenario: the reference page links to and
/// from every signal page; decoys only receive links.
LinkGraph synth_graph(const SynthOutput& out, std::uint64_t seed);

inline constexpr const char* kSynthRefPage = "Influenza";

}  // namespace flunow
