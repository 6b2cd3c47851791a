#pragma once

#include <cstdint>
#include <string>

namespace adlti {

// Proleptic Gregorian calendar, no leap seconds, no DST. Timestamps are epoch
// seconds; civil fields are derived at a fixed UTC offset.

int64_t days_from_civil(int year, unsigned month, unsigned day);
void civil_from_days(int64_t days, int& year, unsigned& month, unsigned& day);

// Accepts "YYYY-MM-DD", "YYYY-MM-DD HH:MM", "YYYY-MM-DDTHH:MM:SS" and the
// space-separated variants. Throws DataError on anything else.
int64_t parse_iso8601(const std::string& text);
std::string format_iso8601(int64_t epoch_seconds);

int hour_of_day(int64_t epoch_seconds, int utc_offset_seconds = 0);
// 0 = Monday .. 6 = Sunday.
int day_of_week(int64_t epoch_seconds, int utc_offset_seconds = 0);

}  // namespace adlti
