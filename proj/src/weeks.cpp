#include "flunow/weeks.hpp"

#include <cstdio>
#include <stdexcept>

namespace flunow {

namespace {

// Days since 1970-01-01 for a civil date (valid well beyond our range).
long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

// ISO weekday, Monday = 1 .. Sunday = 7.
int iso_weekday(int y, int m, int d) {
    long z = days_from_civil(y, m, d);  // 1970-01-01 was a Thursday
    int wd = static_cast<int>(((z % 7) + 10) % 7);  // 0 = Monday
    return wd + 1;
}

int day_of_year(int y, int m, int d) {
    static const int cum[] = {0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334};
    bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    return cum[m - 1] + d + (leap && m > 2 ? 1 : 0);
}

}  // namespace

int weeks_in_iso_year(int year) {
    auto p = [](int y) { return (y + y / 4 - y / 100 + y / 400) % 7; };
    return (p(year) == 4 || p(year - 1) == 3) ? 53 : 52;
}

IsoWeek iso_week_of_date(int year, int month, int day) {
    int w = (day_of_year(year, month, day) - iso_weekday(year, month, day) + 10) / 7;
    if (w < 1) return {year - 1, weeks_in_iso_year(year - 1)};
    if (w > weeks_in_iso_year(year)) return {year + 1, 1};
    return {year, w};
}

IsoWeek next_week(IsoWeek w) {
    if (w.week < weeks_in_iso_year(w.year)) return {w.year, w.week + 1};
    return {w.year + 1, 1};
}

IsoWeek prev_week(IsoWeek w) {
    if (w.week > 1) return {w.year, w.week - 1};
    return {w.year - 1, weeks_in_iso_year(w.year - 1)};
}

std::vector<IsoWeek> week_range(IsoWeek first, IsoWeek last) {
    if (last < first) throw std::invalid_argument("week_range: last < first");
    std::vector<IsoWeek> axis;
    for (IsoWeek w = first;; w = next_week(w)) {
        axis.push_back(w);
        if (w == last) break;
    }
    return axis;
}

std::string to_string(IsoWeek w) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-W%02d", w.year, w.week);
    return buf;
}

IsoWeek parse_iso_week(const std::string& text) {
    int y = 0, wk = 0;
    if (std::sscanf(text.c_str(), "%d-W%d", &y, &wk) == 2 ||
        std::sscanf(text.c_str(), "%d,%d", &y, &wk) == 2) {
        if (wk >= 1 && wk <= weeks_in_iso_year(y)) return {y, wk};
    }
    throw std::invalid_argument("bad ISO week: '" + text + "'");
}

}  // namespace flunow
