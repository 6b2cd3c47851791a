#include "adlti/civil_time.hpp"

#include <cstdio>

#include "adlti/errors.hpp"

namespace adlti {

namespace {

constexpr int64_t kSecondsPerDay = 86400;

int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b) != 0 && ((a < 0) != (b < 0))) --q;
  return q;
}

int64_t floor_mod(int64_t a, int64_t b) { return a - floor_div(a, b) * b; }

}  // namespace

int64_t days_from_civil(int year, unsigned month, unsigned day) {
  year -= month <= 2;
  const int64_t era = (year >= 0 ? year : year - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(year - era * 400);
  const unsigned doy = (153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t days, int& year, unsigned& month, unsigned& day) {
  days += 719468;
  const int64_t era = (days >= 0 ? days : days - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(days - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t y = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  day = doy - (153 * mp + 2) / 5 + 1;
  month = mp + (mp < 10 ? 3 : -9);
  year = static_cast<int>(y + (month <= 2));
}

int64_t parse_iso8601(const std::string& text) {
  int year = 0;
  unsigned month = 0, day = 0, hh = 0, mm = 0, ss = 0;
  char sep = 0;
  int n = std::sscanf(text.c_str(), "%d-%u-%u%c%u:%u:%u", &year, &month, &day,
                      &sep, &hh, &mm, &ss);
  if (n != 3 && n != 6 && n != 7)
    throw DataError("unparseable timestamp: '" + text + "'");
  if (n >= 4 && sep != ' ' && sep != 'T')
    throw DataError("unparseable timestamp: '" + text + "'");
  if (month < 1 || month > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 ||
      ss > 59)
    throw DataError("timestamp field out of range: '" + text + "'");
  return days_from_civil(year, month, day) * kSecondsPerDay + hh * 3600 +
         mm * 60 + ss;
}

std::string format_iso8601(int64_t epoch_seconds) {
  const int64_t days = floor_div(epoch_seconds, kSecondsPerDay);
  const int64_t sod = floor_mod(epoch_seconds, kSecondsPerDay);
  int year;
  unsigned month, day;
  civil_from_days(days, year, month, day);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02d:%02d:%02d", year, month,
                day, static_cast<int>(sod / 3600),
                static_cast<int>((sod % 3600) / 60), static_cast<int>(sod % 60));
  return buf;
}

int hour_of_day(int64_t epoch_seconds, int utc_offset_seconds) {
  const int64_t local = epoch_seconds + utc_offset_seconds;
  return static_cast<int>(floor_mod(local, kSecondsPerDay) / 3600);
}

int day_of_week(int64_t epoch_seconds, int utc_offset_seconds) {
  const int64_t local = epoch_seconds + utc_offset_seconds;
  const int64_t days = floor_div(local, kSecondsPerDay);
  // 1970-01-01 is a Thursday; 0 = Monday.
  return static_cast<int>(floor_mod(days + 3, 7));
}

}  // namespace adlti
