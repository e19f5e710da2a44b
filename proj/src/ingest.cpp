#include "flunow/ingest.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <stdexcept>

#include "flunow/linkgraph.hpp"

namespace flunow {

std::string percent_decode(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
            std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
            int hi = std::isdigit(static_cast<unsigned char>(s[i + 1]))
                         ? s[i + 1] - '0'
                         : std::tolower(static_cast<unsigned char>(s[i + 1])) - 'a' + 10;
            int lo = std::isdigit(static_cast<unsigned char>(s[i + 2]))
                         ? s[i + 2] - '0'
                         : std::tolower(static_cast<unsigned char>(s[i + 2])) - 'a' + 10;
            out.push_back(static_cast<char>(hi * 16 + lo));
            i += 2;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

std::optional<DumpRecord> parse_dump_line(std::string_view line, DumpDialect) {
    // Both dialects share the four-column layout:
    //   project title requests bytes
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos < line.size()) {
        auto sp = line.find(' ', pos);
        if (sp == std::string_view::npos) sp = line.size();
        if (sp > pos) fields.push_back(line.substr(pos, sp - pos));
        pos = sp + 1;
    }
    if (fields.size() != 4) return std::nullopt;

    DumpRecord rec;
    rec.project = std::string(fields[0]);
    rec.title = LinkGraph::normalize_title(percent_decode(fields[1]));
    if (rec.title.empty()) return std::nullopt;
    auto parse_int = [](std::string_view f, std::int64_t& v) {
        auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
        return ec == std::errc() && p == f.data() + f.size() && v >= 0;
    };
    if (!parse_int(fields[2], rec.requests) || !parse_int(fields[3], rec.bytes))
        return std::nullopt;
    return rec;
}

IsoWeek week_of_dump_file(const std::string& filename) {
    // Look for an 8-digit date followed by '-' and a 6-digit time.
    auto digit = [&](std::size_t i) {
        return i < filename.size() && std::isdigit(static_cast<unsigned char>(filename[i]));
    };
    for (std::size_t i = 0; i + 15 <= filename.size(); ++i) {
        bool ok = true;
        for (std::size_t k = 0; k < 8 && ok; ++k) ok = digit(i + k);
        ok = ok && filename[i + 8] == '-';
        for (std::size_t k = 9; k < 15 && ok; ++k) ok = digit(i + k);
        if (!ok) continue;
        int y = std::stoi(filename.substr(i, 4));
        int m = std::stoi(filename.substr(i + 4, 2));
        int d = std::stoi(filename.substr(i + 6, 2));
        if (m >= 1 && m <= 12 && d >= 1 && d <= 31) return iso_week_of_date(y, m, d);
    }
    throw std::runtime_error("no YYYYMMDD-HHMMSS stamp in dump file name: " + filename);
}

namespace {

// Line reader over plain or gzip files (zlib transparently reads both).
class DumpReader {
public:
    explicit DumpReader(const std::string& path) : file_(gzopen(path.c_str(), "rb")) {
        if (!file_) throw std::runtime_error("cannot open dump file: " + path);
    }
    ~DumpReader() {
        if (file_) gzclose(file_);
    }
    DumpReader(const DumpReader&) = delete;
    DumpReader& operator=(const DumpReader&) = delete;

    bool next_line(std::string& line) {
        line.clear();
        char buf[8192];
        while (gzgets(file_, buf, sizeof buf)) {
            line += buf;
            if (!line.empty() && line.back() == '\n') {
                line.pop_back();
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return true;
            }
        }
        return !line.empty();
    }

private:
    gzFile file_;
};

}  // namespace

std::map<std::string, WeeklySeries> aggregate_files(
    const std::vector<std::string>& paths, DumpDialect dialect,
    const std::string& project, const std::set<std::string>& pages,
    IngestStats* stats) {
    std::map<std::string, WeeklySeries> result;
    IngestStats local;
    Provenance prov = dialect == DumpDialect::pagecounts ? Provenance::pagecounts
                                                         : Provenance::pageviews;
    for (const auto& path : paths) {
        IsoWeek week = week_of_dump_file(path);
        DumpReader reader(path);
        std::string line;
        while (reader.next_line(line)) {
            ++local.lines;
            auto rec = parse_dump_line(line, dialect);
            if (!rec) {
                ++local.malformed;
                continue;
            }
            if (rec->project != project || (!pages.empty() && !pages.count(rec->title))) {
                ++local.filtered;
                continue;
            }
            ++local.accepted;
            local.total_requests += rec->requests;
            auto& series = result[rec->title];
            series.page = rec->title;
            auto& pt = series.points[week];
            pt.count += rec->requests;
            pt.provenance = prov;
        }
    }
    if (stats) *stats = local;
    return result;
}

std::map<std::string, WeeklySeries> merge_datasets(
    const std::map<std::string, WeeklySeries>& pc,
    const std::map<std::string, WeeklySeries>& pv, IsoWeek cutover) {
    std::map<std::string, WeeklySeries> merged;
    for (const auto& [page, series] : pc) {
        auto& out = merged[page];
        out.page = page;
        for (const auto& [week, pt] : series.points)
            if (week < cutover) out.points[week] = pt;
    }
    for (const auto& [page, series] : pv) {
        auto& out = merged[page];
        out.page = page;
        for (const auto& [week, pt] : series.points)
            if (!(week < cutover)) out.points[week] = pt;
    }
    // Drop pages that ended up with no points at all.
    std::erase_if(merged, [](const auto& kv) { return kv.second.points.empty(); });
    return merged;
}

void write_weekly_csv(const std::string& path,
                      const std::map<std::string, WeeklySeries>& series,
                      const std::string& config_hash) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write weekly CSV: " + path);
    if (!config_hash.empty())
        file << "# config_hash=" << config_hash << " version=" << FLUNOW_VERSION << "\n";
    file << "page,iso_year,iso_week,count,provenance\n";
    for (const auto& [page, s] : series)
        for (const auto& [week, pt] : s.points)
            file << page << "," << week.year << "," << week.week << "," << pt.count
                 << "," << static_cast<char>(pt.provenance) << "\n";
}

std::map<std::string, WeeklySeries> read_weekly_csv(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot open weekly CSV: " + path);
    std::map<std::string, WeeklySeries> result;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(file, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // header row
            continue;
        }
        std::vector<std::string> f;
        std::size_t pos = 0;
        while (true) {
            auto c = line.find(',', pos);
            f.push_back(line.substr(pos, c - pos));
            if (c == std::string::npos) break;
            pos = c + 1;
        }
        if (f.size() != 5 || f[4].size() != 1)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed weekly row");
        auto& s = result[f[0]];
        s.page = f[0];
        IsoWeek w{std::stoi(f[1]), std::stoi(f[2])};
        s.points[w] = WeekPoint{std::stoll(f[3]), static_cast<Provenance>(f[4][0])};
    }
    return result;
}

}  // namespace flunow
