#ifndef MOBITOK_TIMEUTIL_HPP
#define MOBITOK_TIMEUTIL_HPP

#include <cstdint>
#include <string>

namespace mobitok {

// Epoch seconds <-> civil time, self-contained so parsing and rendering are
// identical on every platform. All arithmetic is proleptic Gregorian, UTC.

struct CivilTime {
  int year;
  int month;   // 1-12
  int day;     // 1-31
  int hour;    // 0-23
  int minute;  // 0-59
  int second;  // 0-59
};

std::int64_t days_from_civil(int year, int month, int day);
CivilTime civil_from_epoch(std::int64_t epoch_seconds);
std::int64_t epoch_from_civil(const CivilTime& ct);

// 0 = Sunday ... 6 = Saturday.
int day_of_week(std::int64_t epoch_seconds);
const char* day_of_week_name(int dow);

// Parses "YYYY-MM-DDTHH:MM:SS[.frac][Z|±HH:MM]" (a space is accepted in
// place of 'T'; fractional seconds are truncated). Throws DataError.
std::int64_t parse_rfc3339(const std::string& text);

// Renders epoch seconds as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_rfc3339(std::int64_t epoch_seconds);

// Renders "Monday 09:15, 2012-04-03" after shifting by a fixed offset.
std::string format_prompt_time(std::int64_t epoch_seconds,
                               int utc_offset_minutes);

}  // namespace mobitok

#endif  // MOBITOK_TIMEUTIL_HPP
