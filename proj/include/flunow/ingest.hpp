#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "flunow/weeks.hpp"

namespace flunow {

enum class DumpDialect { pagecounts, pageviews };

/// Provenance tag carried per weekly point through the merge.
enum class Provenance : char { pagecounts = 'c', pageviews = 'v' };

struct DumpRecord {
    std::string project;
    std::string title;  // percent-decoded, normalized
    std::int64_t requests = 0;
    std::int64_t bytes = 0;
};

struct WeekPoint {
    std::int64_t count = 0;
    Provenance provenance = Provenance::pagecounts;
};

struct WeeklySeries {
    std::string page;
    std::map<IsoWeek, WeekPoint> points;
};

struct IngestStats {
    std::size_t lines = 0;
    std::size_t malformed = 0;
    std::size_t filtered = 0;
    std::size_t accepted = 0;
    std::int64_t total_requests = 0;  // over accepted records
};

std::string percent_decode(std::string_view s);

/// Space-separated four-field dump line: project title requests bytes.
/// Returns nullopt on malformed input (wrong field count, bad numbers).
std::optional<DumpRecord> parse_dump_line(std::string_view line, DumpDialect dialect);

/// Extracts the ISO week from a dump file name carrying a YYYYMMDD-HHMMSS
/// stamp (UTC). Throws when no stamp is found.
IsoWeek week_of_dump_file(const std::string& filename);

/// Reads dump files (plain or gzip), keeps records matching `project` and,
/// when non-empty, `pages`, and sums requests per page per ISO week.
/// File order does not affect the result.
std::map<std::string, WeeklySeries> aggregate_files(
    const std::vector<std::string>& paths, DumpDialect dialect,
    const std::string& project, const std::set<std::string>& pages,
    IngestStats* stats = nullptr);

inline constexpr IsoWeek kDefaultCutover{2016, 36};

/// Points before `cutover` come from pc, points at/after from pv.
std::map<std::string, WeeklySeries> merge_datasets(
    const std::map<std::string, WeeklySeries>& pc,
    const std::map<std::string, WeeklySeries>& pv,
    IsoWeek cutover = kDefaultCutover);

/// CSV `page,iso_year,iso_week,count,provenance`.
void write_weekly_csv(const std::string& path,
                      const std::map<std::string, WeeklySeries>& series,
                      const std::string& config_hash = "");
std::map<std::string, WeeklySeries> read_weekly_csv(const std::string& path);

}  // namespace flunow
