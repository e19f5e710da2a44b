#pragma once

#include <compare>
#include <string>
#include <vector>

namespace flunow {

/// An ISO-8601 week: (iso_year, iso_week) with week in [1, 52] or 53
/// for long years.
struct IsoWeek {
    int year = 0;
    int week = 0;
    auto operator<=>(const IsoWeek&) const = default;
};

/// Number of ISO weeks in a year (52 or 53).
int weeks_in_iso_year(int year);

/// ISO week containing the given civil (UTC) date.
IsoWeek iso_week_of_date(int year, int month, int day);

IsoWeek next_week(IsoWeek w);
IsoWeek prev_week(IsoWeek w);

/// Inclusive axis [first, last]; throws if last < first.
std::vector<IsoWeek> week_range(IsoWeek first, IsoWeek last);

std::string to_string(IsoWeek w);

/// Parses "YYYY-Www" or "YYYY,ww".
IsoWeek parse_iso_week(const std::string& text);

}  // namespace flunow
