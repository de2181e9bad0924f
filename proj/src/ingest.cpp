#include "mobitok/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "mobitok/error.hpp"
#include "mobitok/timeutil.hpp"

namespace mobitok {

using json = nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

void sort_records(std::vector<MobilityRecord>& records) {
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].user_id != records[b].user_id)
      return records[a].user_id < records[b].user_id;
    if (records[a].timestamp != records[b].timestamp)
      return records[a].timestamp < records[b].timestamp;
    return a < b;  // stable on ties
  });
  std::vector<MobilityRecord> sorted;
  sorted.reserve(records.size());
  for (std::size_t i : order) sorted.push_back(std::move(records[i]));
  records = std::move(sorted);
}

MobilityRecord record_from_fields(const std::string& user,
                                  const std::string& loc,
                                  const std::string& ts, std::size_t line_no) {
  MobilityRecord r;
  r.user_id = trim(user);
  r.location_id = trim(loc);
  if (r.user_id.empty()) {
    throw DataError("[ingest] line " + std::to_string(line_no) +
                    ": empty user_id");
  }
  if (r.location_id.empty()) {
    throw DataError("[ingest] line " + std::to_string(line_no) +
                    ": empty location_id");
  }
  try {
    r.timestamp = parse_rfc3339(trim(ts));
  } catch (const DataError&) {
    throw DataError("[ingest] line " + std::to_string(line_no) +
                    ": unparseable timestamp '" + trim(ts) + "'");
  }
  return r;
}

}  // namespace

std::size_t DatasetSplit::train_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : train) n += v.size();
  return n;
}
std::size_t DatasetSplit::validation_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : validation) n += v.size();
  return n;
}
std::size_t DatasetSplit::test_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : test) n += v.size();
  return n;
}

CheckinFormat checkin_format_from_string(const std::string& name) {
  if (name == "csv") return CheckinFormat::kCsv;
  if (name == "jsonl") return CheckinFormat::kJsonl;
  throw ConfigError("[ingest] unknown check-in format '" + name + "'");
}

std::vector<MobilityRecord> parse_checkins(std::istream& source,
                                           CheckinFormat format) {
  std::vector<MobilityRecord> records;
  std::string line;
  std::size_t line_no = 0;
  if (format == CheckinFormat::kCsv) {
    bool saw_header = false;
    while (std::getline(source, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      auto fields = split_csv_line(line);
      if (!saw_header) {
        if (fields.size() < 3 || trim(fields[0]) != "user_id" ||
            trim(fields[1]) != "location_id" ||
            trim(fields[2]) != "timestamp") {
          throw DataError("[ingest] line 1: expected CSV header "
                          "'user_id,location_id,timestamp'");
        }
        saw_header = true;
        continue;
      }
      if (fields.size() != 3) {
        throw DataError("[ingest] line " + std::to_string(line_no) +
                        ": expected 3 fields, got " +
                        std::to_string(fields.size()));
      }
      records.push_back(
          record_from_fields(fields[0], fields[1], fields[2], line_no));
    }
  } else {
    while (std::getline(source, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::exception& e) {
        throw DataError("[ingest] line " + std::to_string(line_no) +
                        ": invalid JSON: " + e.what());
      }
      for (const char* key : {"user_id", "location_id", "timestamp"}) {
        if (!obj.contains(key) || !obj[key].is_string()) {
          throw DataError("[ingest] line " + std::to_string(line_no) +
                          ": missing string field '" + key + "'");
        }
      }
      records.push_back(record_from_fields(obj["user_id"], obj["location_id"],
                                           obj["timestamp"], line_no));
    }
  }
  sort_records(records);
  return records;
}

std::vector<MobilityRecord> parse_checkins_file(const std::string& path,
                                                CheckinFormat format) {
  std::ifstream in(path);
  if (!in) throw ConfigError("[ingest] cannot open check-ins file: " + path);
  return parse_checkins(in, format);
}

std::vector<MobilityRecord> filter_sparse_locations(
    const std::vector<MobilityRecord>& records, std::size_t min_visits) {
  std::unordered_map<std::string, std::size_t> visits;
  for (const auto& r : records) ++visits[r.location_id];
  std::vector<MobilityRecord> kept;
  kept.reserve(records.size());
  for (const auto& r : records) {
    if (visits[r.location_id] >= min_visits) kept.push_back(r);
  }
  return kept;
}

std::vector<Trajectory> build_trajectories(
    const std::vector<MobilityRecord>& records, double gap_hours,
    std::size_t min_len) {
  const double gap_seconds = gap_hours * 3600.0;
  std::vector<Trajectory> out;
  Trajectory current;
  auto flush = [&]() {
    if (current.records.size() >= min_len) out.push_back(current);
    current.records.clear();
  };
  for (const auto& r : records) {
    const bool same_user = !current.records.empty() &&
                           current.records.back().user_id == r.user_id;
    const bool within_gap =
        same_user && static_cast<double>(r.timestamp -
                                         current.records.back().timestamp) <
                         gap_seconds;
    if (!within_gap) {
      flush();
      current.user_id = r.user_id;
    }
    current.records.push_back(r);
  }
  flush();
  return out;
}

DatasetSplit chronological_split(const std::vector<Trajectory>& trajectories,
                                 double f_train, double f_val, double f_test) {
  if (!(f_train > 0.0) || !(f_val >= 0.0) || !(f_test > 0.0) ||
      std::fabs(f_train + f_val + f_test - 1.0) > 1e-9) {
    throw ConfigError(
        "[ingest] split fractions must be positive and sum to 1");
  }
  std::map<std::string, std::vector<Trajectory>> per_user;
  for (const auto& t : trajectories) per_user[t.user_id].push_back(t);
  DatasetSplit split;
  for (auto& [user, trajs] : per_user) {
    std::stable_sort(trajs.begin(), trajs.end(),
                     [](const Trajectory& a, const Trajectory& b) {
                       return a.records.front().timestamp <
                              b.records.front().timestamp;
                     });
    const std::size_t n = trajs.size();
    if (n < 3) {
      split.train[user] = trajs;
      continue;
    }
    const auto n_train = static_cast<std::size_t>(
        std::floor(f_train * static_cast<double>(n)));
    const auto n_val =
        static_cast<std::size_t>(std::floor(f_val * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) {
      if (i < n_train) {
        split.train[user].push_back(trajs[i]);
      } else if (i < n_train + n_val) {
        split.validation[user].push_back(trajs[i]);
      } else {
        split.test[user].push_back(trajs[i]);
      }
    }
  }
  return split;
}

void validate_trajectory(const Trajectory& t, double gap_hours,
                         std::size_t min_len) {
  if (t.records.size() < min_len) {
    throw DataError("[ingest] trajectory shorter than minimum length");
  }
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    if (t.records[i].user_id != t.user_id) {
      throw DataError("[ingest] trajectory mixes users");
    }
    if (i > 0) {
      const auto gap = t.records[i].timestamp - t.records[i - 1].timestamp;
      if (gap < 0) throw DataError("[ingest] trajectory not sorted by time");
      if (static_cast<double>(gap) >= gap_hours * 3600.0) {
        throw DataError("[ingest] trajectory has an over-limit time gap");
      }
    }
  }
}

std::vector<Location> load_locations_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("[ingest] cannot open locations file: " + path);
  std::vector<Location> out;
  std::string line;
  std::size_t line_no = 0;
  std::unordered_map<std::string, bool> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("[ingest] locations line " + std::to_string(line_no) +
                      ": invalid JSON: " + e.what());
    }
    Location loc;
    try {
      loc.id = obj.at("id").get<std::string>();
      loc.name = obj.at("name").get<std::string>();
      loc.category = obj.at("category").get<std::string>();
      loc.position = LatLon(obj.at("lat").get<double>(),
                            obj.at("lon").get<double>());
      if (obj.contains("parent_category") && !obj["parent_category"].is_null())
        loc.parent_category = obj["parent_category"].get<std::string>();
      if (obj.contains("address") && !obj["address"].is_null())
        loc.address = obj["address"].get<std::string>();
    } catch (const json::exception& e) {
      throw DataError("[ingest] locations line " + std::to_string(line_no) +
                      ": " + e.what());
    }
    if (loc.id.empty() || loc.name.empty() || loc.category.empty()) {
      throw DataError("[ingest] locations line " + std::to_string(line_no) +
                      ": id, name and category must be non-empty");
    }
    if (seen[loc.id]) {
      throw DataError("[ingest] locations line " + std::to_string(line_no) +
                      ": duplicate id '" + loc.id + "'");
    }
    seen[loc.id] = true;
    out.push_back(std::move(loc));
  }
  return out;
}

void save_locations_jsonl(const std::string& path,
                          const std::vector<Location>& locations) {
  std::ofstream out(path);
  if (!out) throw ConfigError("[ingest] cannot write locations file: " + path);
  for (const auto& loc : locations) {
    json obj;
    obj["id"] = loc.id;
    obj["name"] = loc.name;
    obj["category"] = loc.category;
    if (loc.parent_category) obj["parent_category"] = *loc.parent_category;
    obj["lat"] = loc.position.lat;
    obj["lon"] = loc.position.lon;
    if (loc.address) obj["address"] = *loc.address;
    out << obj.dump() << "\n";
  }
}

void save_trajectories_jsonl(
    const std::string& path,
    const std::map<std::string, std::vector<Trajectory>>& per_user) {
  std::ofstream out(path);
  if (!out) throw ConfigError("[ingest] cannot write split file: " + path);
  for (const auto& [user, trajs] : per_user) {
    for (const auto& t : trajs) {
      json obj;
      obj["user_id"] = user;
      json recs = json::array();
      for (const auto& r : t.records) {
        recs.push_back({{"location_id", r.location_id},
                        {"timestamp", format_rfc3339(r.timestamp)}});
      }
      obj["records"] = std::move(recs);
      out << obj.dump() << "\n";
    }
  }
}

std::map<std::string, std::vector<Trajectory>> load_trajectories_jsonl(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("[ingest] cannot open split file: " + path);
  std::map<std::string, std::vector<Trajectory>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("[ingest] split line " + std::to_string(line_no) +
                      ": invalid JSON: " + e.what());
    }
    Trajectory t;
    t.user_id = obj.at("user_id").get<std::string>();
    for (const auto& rec : obj.at("records")) {
      MobilityRecord r;
      r.user_id = t.user_id;
      r.location_id = rec.at("location_id").get<std::string>();
      r.timestamp = parse_rfc3339(rec.at("timestamp").get<std::string>());
      t.records.push_back(std::move(r));
    }
    out[t.user_id].push_back(std::move(t));
  }
  return out;
}

std::vector<const Trajectory*> flatten(
    const std::map<std::string, std::vector<Trajectory>>& per_user) {
  std::vector<const Trajectory*> out;
  for (const auto& [_, trajs] : per_user) {
    for (const auto& t : trajs) out.push_back(&t);
  }
  return out;
}

}  // namespace mobitok
