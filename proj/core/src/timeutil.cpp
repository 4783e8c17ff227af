#include "nightwatch/timeutil.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>

#include "nightwatch/errors.hpp"

namespace nightwatch {

namespace {

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
// Branch-free, valid far beyond any satellite era.
int64_t days_from_civil(int64_t y, int m, int d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int64_t& y, int& m, int& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y += (m <= 2);
}

}  // namespace

int64_t parse_iso8601_ms(const std::string& text) {
  int year = 0, mon = 0, day = 0, hh = 0, mm = 0;
  double sec = 0.0;
  char tz = 0;
  int consumed = 0;
  const int n = std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%lf%c%n", &year, &mon, &day, &hh, &mm,
                            &sec, &tz, &consumed);
  if (n != 7 || tz != 'Z' || consumed != static_cast<int>(text.size()))
    throw FormatError("bad ISO 8601 timestamp: '" + text + "' (expected YYYY-MM-DDTHH:MM:SS[.sss]Z)");
  if (mon < 1 || mon > 12 || day < 1 || day > 31 || hh < 0 || hh > 23 || mm < 0 || mm > 59 ||
      sec < 0.0 || sec >= 61.0)
    throw FormatError("out-of-range field in timestamp: '" + text + "'");
  const int64_t days = days_from_civil(year, mon, day);
  const int64_t whole = static_cast<int64_t>(sec);
  const int64_t ms = std::llround((sec - static_cast<double>(whole)) * 1000.0);
  return ((days * 86400 + hh * 3600 + mm * 60 + whole) * 1000) + ms;
}

std::string format_iso8601_ms(int64_t epoch_ms) {
  int64_t days = epoch_ms / 86400000;
  int64_t rem = epoch_ms % 86400000;
  if (rem < 0) {
    rem += 86400000;
    days -= 1;
  }
  int64_t y;
  int m, d;
  civil_from_days(days, y, m, d);
  const int hh = static_cast<int>(rem / 3600000);
  const int mm = static_cast<int>((rem / 60000) % 60);
  const int ss = static_cast<int>((rem / 1000) % 60);
  const int ms = static_cast<int>(rem % 1000);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04" PRId64 "-%02d-%02dT%02d:%02d:%02d.%03dZ", y, m, d, hh, mm,
                ss, ms);
  return buf;
}

int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace nightwatch
