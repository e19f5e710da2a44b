#include "flunow/linkgraph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace flunow {

std::string LinkGraph::normalize_title(std::string_view title) {
    std::string t(title);
    std::replace(t.begin(), t.end(), ' ', '_');
    return t;
}

int LinkGraph::add_node(std::string_view title) {
    std::string key = normalize_title(title);
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(titles_.size());
    index_.emplace(key, id);
    titles_.push_back(std::move(key));
    out_.emplace_back();
    in_.emplace_back();
    return id;
}

bool LinkGraph::add_edge(int src, int dst) {
    if (src == dst) return false;
    auto& fwd = out_[src];
    if (std::find(fwd.begin(), fwd.end(), dst) != fwd.end()) return false;
    fwd.push_back(dst);
    in_[dst].push_back(src);
    ++edge_count_;
    finalized_ = false;
    return true;
}

bool LinkGraph::add_edge(std::string_view src, std::string_view dst) {
    return add_edge(add_node(src), add_node(dst));
}

void LinkGraph::finalize() {
    for (auto& adj : out_) std::sort(adj.begin(), adj.end());
    for (auto& adj : in_) std::sort(adj.begin(), adj.end());
    finalized_ = true;
}

std::optional<int> LinkGraph::find(std::string_view title) const {
    auto it = index_.find(normalize_title(title));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

int LinkGraph::require(std::string_view title) const {
    auto id = find(title);
    if (!id) throw std::invalid_argument("unknown page title: '" + std::string(title) + "'");
    return *id;
}

LinkGraph LinkGraph::load_edge_list(const std::string& path, bool strict,
                                    GraphLoadStats* stats) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot open edge list: " + path);
    LinkGraph g;
    GraphLoadStats local;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(file, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
            line.find('\t', tab + 1) != std::string::npos) {
            if (strict) {
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": malformed edge line (want `source<TAB>target`)");
            }
            ++local.malformed;
            continue;
        }
        std::string src = line.substr(0, tab);
        std::string dst = line.substr(tab + 1);
        int s = g.add_node(src), d = g.add_node(dst);
        if (s == d) {
            ++local.self_loops;
        } else if (!g.add_edge(s, d)) {
            ++local.duplicates;
        }
    }
    g.finalize();
    if (stats) *stats = local;
    return g;
}

namespace {

// BFS depths up to `limit` hops; unreached nodes get limit+1.
std::vector<int> bounded_bfs(const LinkGraph& g, int start, int limit, bool reversed) {
    std::vector<int> dist(g.node_count(), limit + 1);
    dist[start] = 0;
    std::deque<int> queue{start};
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        if (dist[u] == limit) continue;
        for (int v : (reversed ? g.in(u) : g.out(u))) {
            if (dist[v] > limit) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    return dist;
}

struct CycleDfs {
    const LinkGraph& g;
    int ref;
    int max_len;
    double (*sigma)(int);
    const std::vector<int>& dist_back;  // hops from node to ref
    std::vector<char> on_path;
    std::vector<int> path;
    std::vector<double>& scores;
    std::size_t cycles = 0;

    void run() {
        on_path.assign(g.node_count(), 0);
        path = {ref};
        on_path[ref] = 1;
        descend();
    }

    void descend() {
        int u = path.back();
        int depth = static_cast<int>(path.size());
        for (int v : g.out(u)) {
            if (v == ref) {
                if (depth >= 2) close_cycle(depth);
                continue;
            }
            if (on_path[v]) continue;
            // a cycle through v of total length depth + dist_back[v] must fit
            if (depth + dist_back[v] > max_len) continue;
            on_path[v] = 1;
            path.push_back(v);
            descend();
            path.pop_back();
            on_path[v] = 0;
        }
    }

    void close_cycle(int len) {
        ++cycles;
        double s = sigma(len);
        for (int node : path) scores[node] += s;
    }
};

}  // namespace

RankingResult cyclerank(const LinkGraph& g, const std::string& ref, int max_len,
                        CycleSigma sigma) {
    if (max_len < 2) throw std::invalid_argument("cyclerank: max cycle length must be >= 2");
    int r = g.require(ref);
    RankingResult result;
    result.method = RankMethod::cyclerank;
    result.reference = {g.title(r)};
    result.scores.assign(g.node_count(), 0.0);
    {
        std::ostringstream p;
        p << "K=" << max_len << ",sigma="
          << (sigma == CycleSigma::equal_split ? "1/l" : "exp(-l)");
        result.parameters = p.str();
    }

    // Only nodes within K-1 hops of ref in both directions can lie on a
    // counted cycle; bounded_bfs marks everything else unreachable.
    auto dist_back = bounded_bfs(g, r, max_len - 1, /*reversed=*/true);

    double (*sig)(int) = sigma == CycleSigma::equal_split
                             ? +[](int l) { return 1.0 / l; }
                             : +[](int l) { return std::exp(-static_cast<double>(l)); };
    CycleDfs dfs{g, r, max_len, sig, dist_back, {}, {}, result.scores};
    dfs.run();
    result.cycles_found = dfs.cycles;
    return result;
}

namespace {

// One pull-style power iteration step. Per-element arithmetic order is fixed
// (sorted in-neighbors), so the parallel and serial paths are bit-identical.
void ppagerank_step(const LinkGraph& g, const std::vector<double>& teleport,
                    const std::vector<int>& outdeg, double damping,
                    const std::vector<double>& old, std::vector<double>& next,
                    bool parallel) {
    const int n = static_cast<int>(g.node_count());
    double dangling = 0.0;
    for (int u = 0; u < n; ++u)
        if (outdeg[u] == 0) dangling += old[u];

#pragma omp parallel for schedule(static) if (parallel)
    for (int v = 0; v < n; ++v) {
        double s = 0.0;
        for (int u : g.in(v)) s += old[u] / outdeg[u];
        next[v] = (1.0 - damping) * teleport[v] + damping * (s + dangling * teleport[v]);
    }
}

}  // namespace

RankingResult ppagerank(const LinkGraph& g, const std::vector<std::string>& sources,
                        const PPageRankOptions& opts) {
    if (sources.empty()) throw std::invalid_argument("ppagerank: empty source set");
    if (opts.damping <= 0.0 || opts.damping >= 1.0)
        throw std::invalid_argument("ppagerank: damping must be in (0,1)");
    const int n = static_cast<int>(g.node_count());

    std::vector<double> teleport(n, 0.0);
    std::vector<std::string> refs;
    for (const auto& s : sources) {
        int id = g.require(s);
        teleport[id] = 1.0 / sources.size();
        refs.push_back(g.title(id));
    }

    std::vector<int> outdeg(n);
    for (int u = 0; u < n; ++u) outdeg[u] = static_cast<int>(g.out(u).size());

    std::vector<double> scores = teleport, next(n);
    double residual = 0.0;
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        ppagerank_step(g, teleport, outdeg, opts.damping, scores, next, opts.parallel);
        residual = 0.0;
        for (int v = 0; v < n; ++v) residual += std::abs(next[v] - scores[v]);
        scores.swap(next);
        if (residual < opts.tol) break;
    }
    if (residual >= opts.tol) {
        std::ostringstream msg;
        msg << "ppagerank: no convergence after " << opts.max_iter
            << " iterations (L1 residual " << residual << ", tol " << opts.tol << ")";
        throw std::runtime_error(msg.str());
    }

    RankingResult result;
    result.method = RankMethod::ppagerank;
    result.reference = std::move(refs);
    result.scores = std::move(scores);
    std::ostringstream p;
    p << "damping=" << opts.damping << ",tol=" << opts.tol << ",iters=" << iter + 1;
    result.parameters = p.str();
    return result;
}

int shortest_path_distance(const LinkGraph& g, const std::string& from,
                           const std::string& to) {
    int s = g.require(from), t = g.require(to);
    if (s == t) return 0;
    std::vector<int> dist(g.node_count(), -1);
    dist[s] = 0;
    std::deque<int> queue{s};
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        for (int v : g.out(u)) {
            if (dist[v] >= 0) continue;
            dist[v] = dist[u] + 1;
            if (v == t) return dist[v];
            queue.push_back(v);
        }
    }
    return kUnreachable;
}

std::string distance_class(int d) {
    if (d >= 0 && d <= 3) return std::to_string(d);
    return "> 3";
}

std::vector<std::string> top_n(const LinkGraph& g, const RankingResult& r,
                               std::size_t n, const std::set<std::string>& exclude) {
    std::vector<std::pair<double, std::string>> ranked;
    for (std::size_t id = 0; id < r.scores.size(); ++id) {
        if (r.scores[id] <= 0.0) continue;
        const auto& t = g.title(static_cast<int>(id));
        if (exclude.count(t)) continue;
        ranked.emplace_back(r.scores[id], t);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    if (ranked.size() > n) ranked.resize(n);
    std::vector<std::string> titles;
    titles.reserve(ranked.size());
    for (auto& [score, title] : ranked) titles.push_back(std::move(title));
    return titles;
}

void write_ranking_csv(const std::string& path, const LinkGraph& g,
                       const RankingResult& r, const std::string& config_hash) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write ranking: " + path);
    file << "# method="
         << (r.method == RankMethod::cyclerank ? "cyclerank" : "ppagerank")
         << " params=" << r.parameters << " config_hash=" << config_hash
         << " version=" << FLUNOW_VERSION << "\n";
    file << "rank,title,score\n";
    auto titles = top_n(g, r, r.scores.size());
    char buf[64];
    for (std::size_t i = 0; i < titles.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g", r.scores[*g.find(titles[i])]);
        file << i + 1 << "," << titles[i] << "," << buf << "\n";
    }
}

}  // namespace flunow
