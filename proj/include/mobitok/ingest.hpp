#ifndef MOBITOK_INGEST_HPP
#define MOBITOK_INGEST_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mobitok/geo.hpp"

namespace mobitok {

struct MobilityRecord {
  std::string user_id;
  std::string location_id;
  std::int64_t timestamp = 0;  // epoch seconds, UTC
};

struct Trajectory {
  std::string user_id;
  std::vector<MobilityRecord> records;
};

// Per-user trajectory lists, chronological within each user.
struct DatasetSplit {
  std::map<std::string, std::vector<Trajectory>> train;
  std::map<std::string, std::vector<Trajectory>> validation;
  std::map<std::string, std::vector<Trajectory>> test;

  std::size_t train_count() const;
  std::size_t validation_count() const;
  std::size_t test_count() const;
};

enum class CheckinFormat { kCsv, kJsonl };

CheckinFormat checkin_format_from_string(const std::string& name);

// Parses a check-in stream and returns records sorted by (user_id, timestamp).
// CSV input must carry the header `user_id,location_id,timestamp`.
std::vector<MobilityRecord> parse_checkins(std::istream& source,
                                           CheckinFormat format);
std::vector<MobilityRecord> parse_checkins_file(const std::string& path,
                                                CheckinFormat format);

// Keeps records whose location appears at least min_visits times in the
// original list. Applied once, not iterated to fixpoint.
std::vector<MobilityRecord> filter_sparse_locations(
    const std::vector<MobilityRecord>& records, std::size_t min_visits = 5);

// Groups each user's records into trajectories: a new trajectory starts
// whenever the gap to the previous record reaches gap_hours; trajectories
// shorter than min_len are dropped.
std::vector<Trajectory> build_trajectories(
    const std::vector<MobilityRecord>& records, double gap_hours = 24.0,
    std::size_t min_len = 3);

// Per user: first floor(f_train*n) trajectories to train, next
// floor(f_val*n) to validation, remainder to test. Users with fewer than 3
// trajectories go entirely to train.
DatasetSplit chronological_split(const std::vector<Trajectory>& trajectories,
                                 double f_train = 0.70, double f_val = 0.10,
                                 double f_test = 0.20);

// Throws DataError when a Trajectory invariant is violated.
void validate_trajectory(const Trajectory& t, double gap_hours,
                         std::size_t min_len);

// Location catalog I/O: JSONL, one {id, name, category, parent_category?,
// lat, lon, address?} object per line.
std::vector<Location> load_locations_jsonl(const std::string& path);
void save_locations_jsonl(const std::string& path,
                          const std::vector<Location>& locations);

// Split files: JSONL of {user_id, records: [{location_id, timestamp}]}.
void save_trajectories_jsonl(
    const std::string& path,
    const std::map<std::string, std::vector<Trajectory>>& per_user);
std::map<std::string, std::vector<Trajectory>> load_trajectories_jsonl(
    const std::string& path);

std::vector<const Trajectory*> flatten(
    const std::map<std::string, std::vector<Trajectory>>& per_user);

}  // namespace mobitok

#endif  // MOBITOK_INGEST_HPP
