#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "flunow/evaluate.hpp"
#include "flunow/pipeline.hpp"
#include "flunow/synth.hpp"

namespace fs = std::filesystem;
using namespace flunow;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitPartial = 3;

std::string default_out_dir() {
    if (const char* cache = std::getenv("FLUNOW_CACHE_DIR")) return cache;
    return ".";
}

struct CommonOpts {
    std::string weekly_csv, incidence_csv, graph_path, features_path;
    std::string country = "XX";
    std::string ref_page = "Influenza";
    int first_year = 2010;
    int n_seasons = 6;
    std::size_t rank_top_n = 100;
    int cyclerank_k = 4;
    double damping = 0.85;
    double ppr_tol = 1e-10;
    std::uint64_t seed = 42;
    std::string optimizer = "coordinate_descent";
    int max_epochs = 2000;
    double step_size = 0.01;
    double tolerance = 1e-8;
    bool paper_faithful = false;

    void attach(CLI::App* cmd, bool need_graph) {
        cmd->add_option("--weekly", weekly_csv, "weekly pageview CSV")->required();
        cmd->add_option("--incidence", incidence_csv, "incidence CSV")->required();
        auto* g = cmd->add_option("--graph", graph_path, "edge-list link graph");
        if (need_graph) g->required();
        cmd->add_option("--features", features_path, "feature list (categories method)");
        cmd->add_option("--country", country, "country code for reports");
        cmd->add_option("--ref", ref_page, "reference page title");
        cmd->add_option("--seasons-first-year", first_year, "first season start year");
        cmd->add_option("--seasons", n_seasons, "number of seasons");
        cmd->add_option("--top-n", rank_top_n, "ranking cutoff for graph methods");
        cmd->add_option("--k", cyclerank_k, "max cycle length for cyclerank");
        cmd->add_option("--damping", damping, "ppagerank damping");
        cmd->add_option("--ppr-tol", ppr_tol, "ppagerank L1 tolerance");
        cmd->add_option("--seed", seed, "RNG seed");
        cmd->add_option("--optimizer", optimizer,
                        "coordinate_descent | proximal_sgd")
            ->check(CLI::IsMember({"coordinate_descent", "proximal_sgd"}));
        cmd->add_option("--max-epochs", max_epochs, "optimizer epoch cap");
        cmd->add_option("--step-size", step_size, "proximal SGD step size");
        cmd->add_option("--tolerance", tolerance, "optimizer tolerance");
        cmd->add_flag("--paper-faithful", paper_faithful,
                      "standardize globally instead of per training fold");
    }

    std::string canonical(const std::string& methods, const std::string& datasets) const {
        std::ostringstream s;
        s << "weekly=" << weekly_csv << ";incidence=" << incidence_csv
          << ";graph=" << graph_path << ";features=" << features_path
          << ";country=" << country << ";ref=" << ref_page << ";first=" << first_year
          << ";n=" << n_seasons << ";topn=" << rank_top_n << ";k=" << cyclerank_k
          << ";damping=" << damping << ";pprtol=" << ppr_tol << ";seed=" << seed
          << ";opt=" << optimizer << ";epochs=" << max_epochs << ";step=" << step_size
          << ";tol=" << tolerance << ";faithful=" << paper_faithful
          << ";methods=" << methods << ";datasets=" << datasets;
        return s.str();
    }

    PipelineInputs load(const LinkGraph* graph) const {
        PipelineInputs in;
        in.weekly = read_weekly_csv(weekly_csv);
        in.incidence = load_incidence_csv(incidence_csv);
        in.seasons = season_range(first_year, n_seasons);
        in.graph = graph;
        if (!features_path.empty())
            in.categories = load_feature_list(features_path, "categories");
        in.ref_page = ref_page;
        in.country = country;
        in.lasso.optimizer = optimizer == "proximal_sgd" ? Optimizer::proximal_sgd
                                                         : Optimizer::coordinate_descent;
        in.lasso.max_epochs = max_epochs;
        in.lasso.step_size = step_size;
        in.lasso.tolerance = tolerance;
        in.lasso.seed = seed;
        in.rank_top_n = rank_top_n;
        in.cyclerank_k = cyclerank_k;
        in.ppagerank_opts.damping = damping;
        in.ppagerank_opts.tol = ppr_tol;
        in.paper_faithful_standardize = paper_faithful;
        return in;
    }
};

void write_cell_outputs(const fs::path& dir, const PipelineInputs& in,
                        const CellResult& cell) {
    fs::create_directories(dir);
    write_report_csv((dir / "report.csv").string(), cell.report, in.hash);
    write_report_json((dir / "report.json").string(), cell.report, in.hash);
    write_predictions_csv((dir / "predictions.csv").string(), cell.target,
                          cell.loso.predictions, cell.report.model,
                          cell.report.dataset, in.hash);
    for (std::size_t m = 0; m < cell.loso.models.size(); ++m) {
        save_model_json((dir / ("model_" + cell.loso.held_out[m] + ".json")).string(),
                        cell.loso.models[m], in.hash);
    }
    FeatureList used{cell.report.model, "", cell.feature_titles};
    write_feature_list((dir / "features.txt").string(), used);

    auto stats = selected_features(cell.loso.models, cell.analysis_matrix.page_cols);
    std::ofstream sf((dir / "selected_features.txt").string());
    sf << "# min / max / mean nonzero page features per season model\n"
       << stats.format() << "\n";
    for (const auto& t : stats.union_features) sf << t << "\n";

    auto predictors =
        top_k_predictors(cell.loso.models, cell.analysis_matrix,
                         cell.target.y, in.graph, in.ref_page, 5);
    write_predictor_csv((dir / "top_predictors.csv").string(), predictors, in.hash);
}

int cmd_synth(const SynthScenario& scenario, const std::string& out_dir) {
    auto out = generate(scenario);
    write_synth_dataset(out_dir, scenario, out);
    std::cout << "synthetic dataset in " << out_dir << ": " << scenario.pages
              << " pages, " << scenario.seasons << " seasons, "
              << out.spike_events << " spike events\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wikipedia pageview influenza nowcasting pipeline"};
    app.set_config("--config", "", "TOML run configuration; flags override");
    app.require_subcommand(1);

    // synth
    SynthScenario scenario;
    std::string synth_out = default_out_dir();
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic scenario");
    synth_cmd->add_option("--out", synth_out, "output directory");
    synth_cmd->add_option("--seasons", scenario.seasons);
    synth_cmd->add_option("--pages", scenario.pages);
    synth_cmd->add_option("--signal-pages", scenario.signal_pages);
    synth_cmd->add_option("--noise-std", scenario.noise_std);
    synth_cmd->add_option("--spike-rate", scenario.spike_rate);
    synth_cmd->add_option("--seed", scenario.seed);
    synth_cmd->add_option("--first-year", scenario.first_year);
    synth_cmd->add_option("--signal-scale", scenario.signal_scale);

    // ingest
    std::vector<std::string> ingest_files;
    std::string ingest_dialect = "pageviews", ingest_project = "it";
    std::string ingest_pages, ingest_out = "weekly.csv";
    std::string merge_pc, merge_pv, merge_cutover = "2016-W36";
    bool strict = false;
    auto* ingest_cmd = app.add_subcommand("ingest", "aggregate hourly dumps to weeks");
    ingest_cmd->add_option("--files", ingest_files, "dump files (plain or .gz)");
    ingest_cmd->add_option("--dialect", ingest_dialect)
        ->check(CLI::IsMember({"pagecounts", "pageviews"}));
    ingest_cmd->add_option("--project", ingest_project, "language/project filter");
    ingest_cmd->add_option("--pages", ingest_pages, "optional page list filter");
    ingest_cmd->add_option("--out", ingest_out);
    ingest_cmd->add_flag("--strict", strict, "abort on malformed lines");
    ingest_cmd->add_option("--merge-pc", merge_pc, "merge: pagecounts weekly CSV");
    ingest_cmd->add_option("--merge-pv", merge_pv, "merge: pageviews weekly CSV");
    ingest_cmd->add_option("--cutover", merge_cutover, "merge cutover week (YYYY-Www)");

    // rank
    std::string rank_graph, rank_method = "cyclerank", rank_ref = "Influenza";
    std::string rank_out = "ranking.csv";
    int rank_k = 4;
    double rank_damping = 0.85, rank_tol = 1e-10;
    std::string rank_sigma = "equal";
    auto* rank_cmd = app.add_subcommand("rank", "rank pages against a reference");
    rank_cmd->add_option("--graph", rank_graph)->required();
    rank_cmd->add_option("--method", rank_method)
        ->check(CLI::IsMember({"cyclerank", "ppagerank"}));
    rank_cmd->add_option("--ref", rank_ref)->required();
    rank_cmd->add_option("--k", rank_k, "max cycle length");
    rank_cmd->add_option("--sigma", rank_sigma, "equal | exp")
        ->check(CLI::IsMember({"equal", "exp"}));
    rank_cmd->add_option("--damping", rank_damping);
    rank_cmd->add_option("--tol", rank_tol);
    rank_cmd->add_option("--out", rank_out);

    // build-matrix
    CommonOpts bm;
    std::string bm_dataset = "PC+PV", bm_out = "matrix.csv";
    auto* bm_cmd = app.add_subcommand("build-matrix",
                                      "build the standardized design matrix");
    bm.attach(bm_cmd, false);
    bm_cmd->add_option("--dataset", bm_dataset)->check(CLI::IsMember({"PV", "PC+PV"}));
    bm_cmd->add_option("--out", bm_out);

    // train
    CommonOpts tr;
    std::string tr_method = "categories", tr_dataset = "PC+PV";
    std::string tr_out = default_out_dir();
    auto* tr_cmd = app.add_subcommand("train", "leave-one-season-out training");
    tr.attach(tr_cmd, false);
    tr_cmd->add_option("--method", tr_method)
        ->check(CLI::IsMember({"categories", "cyclerank", "ppagerank"}));
    tr_cmd->add_option("--dataset", tr_dataset)->check(CLI::IsMember({"PV", "PC+PV"}));
    tr_cmd->add_option("--out", tr_out, "output directory");

    // evaluate
    std::string ev_predictions, ev_out = "report";
    std::string ev_country = "XX", ev_model = "", ev_dataset = "";
    int ev_first_year = 2010, ev_seasons = 6;
    auto* ev_cmd = app.add_subcommand("evaluate", "score a predictions file");
    ev_cmd->add_option("--predictions", ev_predictions)->required();
    ev_cmd->add_option("--seasons-first-year", ev_first_year);
    ev_cmd->add_option("--seasons", ev_seasons);
    ev_cmd->add_option("--country", ev_country);
    ev_cmd->add_option("--out", ev_out, "report path prefix");

    // analyze-features
    std::string af_a, af_b;
    auto* af_cmd = app.add_subcommand("analyze-features",
                                      "feature-set overlap between two lists");
    af_cmd->add_option("--list-a", af_a)->required();
    af_cmd->add_option("--list-b", af_b)->required();

    // run-all
    CommonOpts ra;
    std::vector<std::string> ra_methods{"categories", "cyclerank", "ppagerank"};
    std::vector<std::string> ra_datasets{"PV", "PC+PV"};
    std::string ra_out = default_out_dir();
    int ra_jobs = 1;
    auto* ra_cmd = app.add_subcommand("run-all", "full method x dataset grid");
    ra.attach(ra_cmd, false);
    ra_cmd->add_option("--methods", ra_methods, "subset of the grid")->delimiter(',');
    ra_cmd->add_option("--datasets", ra_datasets)->delimiter(',');
    ra_cmd->add_option("--out", ra_out, "output directory");
    ra_cmd->add_option("--jobs", ra_jobs, "parallel grid cells");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) return cmd_synth(scenario, synth_out);

        if (ingest_cmd->parsed()) {
            if (!merge_pc.empty() || !merge_pv.empty()) {
                auto pc = merge_pc.empty() ? std::map<std::string, WeeklySeries>{}
                                           : read_weekly_csv(merge_pc);
                auto pv = merge_pv.empty() ? std::map<std::string, WeeklySeries>{}
                                           : read_weekly_csv(merge_pv);
                auto merged = merge_datasets(pc, pv, parse_iso_week(merge_cutover));
                write_weekly_csv(ingest_out, merged);
                std::cout << "merged " << merged.size() << " pages -> " << ingest_out << "\n";
                return 0;
            }
            if (ingest_files.empty()) {
                std::cerr << "ingest: need --files or --merge-pc/--merge-pv\n";
                return kExitUsage;
            }
            std::set<std::string> pages;
            if (!ingest_pages.empty())
                for (auto& t : load_feature_list(ingest_pages).titles) pages.insert(t);
            IngestStats stats;
            auto dialect = ingest_dialect == "pagecounts" ? DumpDialect::pagecounts
                                                          : DumpDialect::pageviews;
            auto weekly = aggregate_files(ingest_files, dialect, ingest_project, pages,
                                          &stats);
            if (strict && stats.malformed > 0) {
                std::cerr << "ingest: " << stats.malformed << " malformed lines\n";
                return kExitData;
            }
            write_weekly_csv(ingest_out, weekly);
            std::cout << "lines=" << stats.lines << " accepted=" << stats.accepted
                      << " filtered=" << stats.filtered << " malformed=" << stats.malformed
                      << " total_requests=" << stats.total_requests << " -> " << ingest_out
                      << "\n";
            return 0;
        }

        if (rank_cmd->parsed()) {
            LinkGraph g = LinkGraph::load_edge_list(rank_graph, false);
            RankingResult r;
            if (rank_method == "cyclerank") {
                r = cyclerank(g, rank_ref, rank_k,
                              rank_sigma == "exp" ? CycleSigma::exp_decay
                                                  : CycleSigma::equal_split);
            } else {
                PPageRankOptions opts;
                opts.damping = rank_damping;
                opts.tol = rank_tol;
                r = ppagerank(g, {rank_ref}, opts);
            }
            std::ostringstream canon;
            canon << "rank;" << rank_method << ";" << rank_ref << ";" << r.parameters;
            write_ranking_csv(rank_out, g, r, config_hash(canon.str()));
            std::cout << rank_method << " over " << g.node_count() << " nodes ("
                      << r.parameters << ") -> " << rank_out << "\n";
            return 0;
        }

        if (bm_cmd->parsed()) {
            auto in = bm.load(nullptr);
            in.hash = config_hash(bm.canonical("build-matrix", bm_dataset));
            if (!in.categories)
                throw std::runtime_error("build-matrix needs --features");
            auto weekly = filter_dataset(in.weekly, bm_dataset);
            auto seasons = covered_seasons(weekly, in.seasons);
            auto target = align(in.incidence, seasons);
            std::vector<std::size_t> all_rows(target.rows.size());
            std::iota(all_rows.begin(), all_rows.end(), 0);
            auto m = build_matrix(*in.categories, weekly, target.rows, all_rows);
            write_matrix_csv(bm_out, m, in.hash);
            for (const auto& w : m.warnings) std::cerr << "warning: " << w << "\n";
            std::cout << m.n_rows() << " x " << m.n_cols() << " matrix -> " << bm_out << "\n";
            return 0;
        }

        if (tr_cmd->parsed()) {
            std::optional<LinkGraph> graph;
            if (!tr.graph_path.empty())
                graph = LinkGraph::load_edge_list(tr.graph_path, false);
            auto in = tr.load(graph ? &*graph : nullptr);
            in.hash = config_hash(tr.canonical(tr_method, tr_dataset));
            auto cell = run_cell(in, {tr_method, tr_dataset});
            write_cell_outputs(tr_out, in, cell);
            std::cout << tr_method << "/" << tr_dataset << ": mean PCC "
                      << cell.report.mean_pcc << ", peaks " << cell.report.peak_summary()
                      << " -> " << tr_out << "\n";
            return 0;
        }

        if (ev_cmd->parsed()) {
            std::ifstream file(ev_predictions);
            if (!file) throw std::runtime_error("cannot open " + ev_predictions);
            AlignedTarget target;
            std::vector<double> predictions;
            std::string model = ev_model, dataset = ev_dataset, line;
            auto seasons = season_range(ev_first_year, ev_seasons);
            bool header_seen = false;
            while (std::getline(file, line)) {
                if (line.empty() || line[0] == '#') continue;
                if (!header_seen) {
                    header_seen = true;
                    continue;
                }
                int year, week;
                double truth, pred;
                char mod[64] = "", ds[64] = "";
                if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%63[^,],%63s", &year, &week,
                                &truth, &pred, mod, ds) < 4)
                    throw std::runtime_error("malformed prediction row: " + line);
                target.rows.push_back({year, week});
                target.y.push_back(truth);
                predictions.push_back(pred);
                if (model.empty()) model = mod;
                if (dataset.empty()) dataset = ds;
            }
            std::vector<SeasonScore> scores;
            for (std::size_t s = 0; s < seasons.size(); ++s) {
                std::vector<IsoWeek> weeks;
                std::vector<double> truth, pred;
                for (std::size_t i = 0; i < target.rows.size(); ++i) {
                    const auto& sw = seasons[s].weeks;
                    if (std::find(sw.begin(), sw.end(), target.rows[i]) == sw.end())
                        continue;
                    weeks.push_back(target.rows[i]);
                    truth.push_back(target.y[i]);
                    pred.push_back(predictions[i]);
                }
                if (weeks.empty()) continue;
                scores.push_back(score_season(seasons[s].label, weeks, truth, pred));
            }
            auto report = summarize(scores);
            report.country = ev_country;
            report.model = model;
            report.dataset = dataset;
            write_report_csv(ev_out + ".csv", report);
            write_report_json(ev_out + ".json", report);
            std::cout << "mean PCC " << report.mean_pcc << ", peaks "
                      << report.peak_summary() << " -> " << ev_out << ".{csv,json}\n";
            return 0;
        }

        if (af_cmd->parsed()) {
            auto a = load_feature_list(af_a), b = load_feature_list(af_b);
            std::printf("A->B %.2f%%\nB->A %.2f%%\n", feature_overlap(a.titles, b.titles),
                        feature_overlap(b.titles, a.titles));
            return 0;
        }

        if (ra_cmd->parsed()) {
            std::optional<LinkGraph> graph;
            if (!ra.graph_path.empty())
                graph = LinkGraph::load_edge_list(ra.graph_path, false);
            std::string methods_str, datasets_str;
            for (const auto& m : ra_methods) methods_str += m + "+";
            for (const auto& d : ra_datasets) datasets_str += d + "+";
            auto in = ra.load(graph ? &*graph : nullptr);
            in.hash = config_hash(ra.canonical(methods_str, datasets_str));

            std::vector<CellSpec> specs;
            for (const auto& m : ra_methods)
                for (const auto& d : ra_datasets) specs.push_back({m, d});

            std::vector<CellResult> cells(specs.size());
            std::vector<std::string> failures(specs.size());
            auto run_one = [&](std::size_t i) {
                try {
                    cells[i] = run_cell(in, specs[i]);
                } catch (const std::exception& e) {
                    failures[i] = e.what();
                }
            };
            if (ra_jobs > 1) {
                std::vector<std::future<void>> futs;
                for (std::size_t i = 0; i < specs.size(); ++i)
                    futs.push_back(std::async(std::launch::async, run_one, i));
                for (auto& f : futs) f.get();
            } else {
                for (std::size_t i = 0; i < specs.size(); ++i) run_one(i);
            }

            fs::create_directories(ra_out);
            std::vector<CellResult> ok;
            bool partial = false;
            for (std::size_t i = 0; i < specs.size(); ++i) {
                std::string cell_name = specs[i].method + "_" +
                                        (specs[i].dataset == "PV" ? "PV" : "PCPV");
                if (!failures[i].empty()) {
                    partial = true;
                    std::cerr << "cell " << specs[i].method << "/" << specs[i].dataset
                              << " failed: " << failures[i] << "\n";
                    continue;
                }
                write_cell_outputs(fs::path(ra_out) / cell_name, in, cells[i]);
                ok.push_back(cells[i]);
            }
            if (!ok.empty())
                write_grid_csv((fs::path(ra_out) / "grid.csv").string(), ok, in.hash);
            for (const auto& c : ok)
                std::cout << c.report.model << "/" << c.report.dataset << ": mean PCC "
                          << c.report.mean_pcc << ", peaks " << c.report.peak_summary()
                          << "\n";
            return partial ? kExitPartial : 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
