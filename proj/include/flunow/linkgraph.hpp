#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace flunow {

struct GraphLoadStats {
    std::size_t self_loops = 0;
    std::size_t duplicates = 0;
    std::size_t malformed = 0;
};

/// Directed page graph. Immutable once loaded; safe for concurrent reads.
/// Titles are matched exactly (case-sensitive) after normalizing spaces
/// to underscores, following the Wikimedia dump convention.
class LinkGraph {
public:
    /// Edge-list file: UTF-8, one `source<TAB>target` per line, '#' comments.
    /// In strict mode a malformed line aborts the load with its line number;
    /// in lenient mode it is skipped and counted.
    static LinkGraph load_edge_list(const std::string& path, bool strict = true,
                                    GraphLoadStats* stats = nullptr);

    static std::string normalize_title(std::string_view title);

    int add_node(std::string_view title);

    /// Returns false if the edge was a self-loop or a duplicate.
    bool add_edge(int src, int dst);
    bool add_edge(std::string_view src, std::string_view dst);

    /// Sorts adjacency lists; call once after the last add_edge.
    void finalize();

    std::size_t node_count() const { return titles_.size(); }
    std::size_t edge_count() const { return edge_count_; }

    std::optional<int> find(std::string_view title) const;
    int require(std::string_view title) const;  // throws on unknown title
    const std::string& title(int id) const { return titles_[id]; }

    std::span<const int> out(int id) const { return out_[id]; }
    std::span<const int> in(int id) const { return in_[id]; }

private:
    std::vector<std::string> titles_;
    std::unordered_map<std::string, int> index_;
    std::vector<std::vector<int>> out_, in_;
    std::size_t edge_count_ = 0;
    bool finalized_ = false;
};

enum class RankMethod { cyclerank, ppagerank };

struct RankingResult {
    RankMethod method;
    std::vector<std::string> reference;
    std::vector<double> scores;  // indexed by node id, all >= 0
    std::string parameters;      // human-readable, embedded in outputs
    std::size_t cycles_found = 0;  // cyclerank only
};

enum class CycleSigma { equal_split, exp_decay };

/// Scores nodes by their participation in simple cycles of length <= max_len
/// through `ref`. Each node on a cycle of length L accumulates sigma(L) per
/// cycle; equal_split is sigma(L) = 1/L, exp_decay is sigma(L) = exp(-L).
RankingResult cyclerank(const LinkGraph& g, const std::string& ref,
                        int max_len = 4,
                        CycleSigma sigma = CycleSigma::equal_split);

struct PPageRankOptions {
    double damping = 0.85;
    double tol = 1e-10;
    int max_iter = 200;
    bool parallel = true;  // serial path kept as reference; results identical
};

/// Personalized PageRank with teleport uniform over `sources`. Dangling mass
/// is redistributed to the teleport distribution. Exact power iteration,
/// converged when the L1 residual drops below tol; throws on non-convergence.
RankingResult ppagerank(const LinkGraph& g,
                        const std::vector<std::string>& sources,
                        const PPageRankOptions& opts = {});

inline constexpr int kUnreachable = -1;

/// Directed BFS hop count; kUnreachable when no path exists.
int shortest_path_distance(const LinkGraph& g, const std::string& from,
                           const std::string& to);

/// Collapses distances per the reporting convention: "0".."3", "> 3"
/// (which also covers unreachable pairs).
std::string distance_class(int d);

/// Highest-scoring titles, zero scores and `exclude` removed, ties broken
/// lexicographically. Returns fewer than n when fewer qualify.
std::vector<std::string> top_n(const LinkGraph& g, const RankingResult& r,
                               std::size_t n,
                               const std::set<std::string>& exclude = {});

void write_ranking_csv(const std::string& path, const LinkGraph& g,
                       const RankingResult& r, const std::string& config_hash);

}  // namespace flunow
