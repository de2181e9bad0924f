#include "mobitok/timeutil.hpp"

#include <cctype>
#include <cstdio>

#include "mobitok/error.hpp"

namespace mobitok {

namespace {

constexpr const char* kDayNames[] = {"Sunday",   "Monday", "Tuesday",
                                     "Wednesday", "Thursday", "Friday",
                                     "Saturday"};

std::int64_t floordiv(std::int64_t a, std::int64_t b) {
  return a / b - ((a % b != 0) && ((a % b < 0) != (b < 0)) ? 1 : 0);
}

std::int64_t floormod(std::int64_t a, std::int64_t b) {
  return a - floordiv(a, b) * b;
}

}  // namespace

// Howard Hinnant's days-from-civil algorithm.
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = floordiv(y, 400);
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1u;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilTime civil_from_epoch(std::int64_t epoch_seconds) {
  const std::int64_t z = floordiv(epoch_seconds, 86400);
  const std::int64_t sod = floormod(epoch_seconds, 86400);
  const std::int64_t zz = z + 719468;
  const std::int64_t era = floordiv(zz, 146097);
  const unsigned doe = static_cast<unsigned>(zz - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  CivilTime ct;
  ct.year = static_cast<int>(y + (m <= 2));
  ct.month = static_cast<int>(m);
  ct.day = static_cast<int>(d);
  ct.hour = static_cast<int>(sod / 3600);
  ct.minute = static_cast<int>((sod % 3600) / 60);
  ct.second = static_cast<int>(sod % 60);
  return ct;
}

std::int64_t epoch_from_civil(const CivilTime& ct) {
  return days_from_civil(ct.year, ct.month, ct.day) * 86400 + ct.hour * 3600 +
         ct.minute * 60 + ct.second;
}

int day_of_week(std::int64_t epoch_seconds) {
  const std::int64_t days = floordiv(epoch_seconds, 86400);
  return static_cast<int>(floormod(days + 4, 7));  // 1970-01-01 was Thursday
}

const char* day_of_week_name(int dow) { return kDayNames[dow]; }

std::int64_t parse_rfc3339(const std::string& text) {
  const char* s = text.c_str();
  auto fail = [&]() -> std::int64_t {
    throw DataError("[ingest] unparseable timestamp '" + text + "'");
  };
  auto read_int = [&](int pos, int len) -> int {
    int v = 0;
    for (int i = 0; i < len; ++i) {
      const char c = s[pos + i];
      if (!std::isdigit(static_cast<unsigned char>(c))) fail();
      v = v * 10 + (c - '0');
    }
    return v;
  };
  if (text.size() < 19) fail();
  CivilTime ct;
  ct.year = read_int(0, 4);
  if (s[4] != '-') fail();
  ct.month = read_int(5, 2);
  if (s[7] != '-') fail();
  ct.day = read_int(8, 2);
  if (s[10] != 'T' && s[10] != 't' && s[10] != ' ') fail();
  ct.hour = read_int(11, 2);
  if (s[13] != ':') fail();
  ct.minute = read_int(14, 2);
  if (s[16] != ':') fail();
  ct.second = read_int(17, 2);
  if (ct.month < 1 || ct.month > 12 || ct.day < 1 || ct.day > 31 ||
      ct.hour > 23 || ct.minute > 59 || ct.second > 59) {
    fail();
  }
  std::size_t pos = 19;
  if (pos < text.size() && s[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    while (pos < text.size() &&
           std::isdigit(static_cast<unsigned char>(s[pos]))) {
      ++pos;
      ++digits;
    }
    if (digits == 0) fail();
  }
  std::int64_t offset_seconds = 0;
  if (pos >= text.size()) fail();
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    const int sign = (s[pos] == '-') ? -1 : 1;
    if (pos + 6 > text.size() || s[pos + 3] != ':') fail();
    const int oh = read_int(static_cast<int>(pos) + 1, 2);
    const int om = read_int(static_cast<int>(pos) + 4, 2);
    offset_seconds = sign * (oh * 3600 + om * 60);
    pos += 6;
  } else {
    fail();
  }
  if (pos != text.size()) fail();
  return epoch_from_civil(ct) - offset_seconds;
}

std::string format_rfc3339(std::int64_t epoch_seconds) {
  const CivilTime ct = civil_from_epoch(epoch_seconds);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", ct.year,
                ct.month, ct.day, ct.hour, ct.minute, ct.second);
  return buf;
}

std::string format_prompt_time(std::int64_t epoch_seconds,
                               int utc_offset_minutes) {
  const std::int64_t local = epoch_seconds + utc_offset_minutes * 60;
  const CivilTime ct = civil_from_epoch(local);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s %02d:%02d, %04d-%02d-%02d",
                day_of_week_name(day_of_week(local)), ct.hour, ct.minute,
                ct.year, ct.month, ct.day);
  return buf;
}

}  // namespace mobitok
