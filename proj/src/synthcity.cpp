#include "mobitok/synthcity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "mobitok/error.hpp"
#include "mobitok/rng.hpp"
#include "mobitok/timeutil.hpp"

namespace mobitok {

namespace {

struct CategoryInfo {
  const char* name;
  const char* parent;
};

constexpr CategoryInfo kCategories[] = {
    {"Bar", "Nightlife Spot"},
    {"Coffee Shop", "Food"},
    {"Office", "Professional"},
    {"Gym", "Recreation"},
    {"Park", "Outdoors"},
    {"Theater", "Arts & Entertainment"},
    {"Museum", "Arts & Entertainment"},
    {"Metro Station", "Travel & Transport"},
    {"Restaurant", "Food"},
    {"Bookstore", "Shop & Service"},
};
constexpr int kNumCategories =
    static_cast<int>(sizeof(kCategories) / sizeof(kCategories[0]));

std::string zero_padded(int value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

SynthCity generate_synth_city(const SynthCityParams& params) {
  if (params.n_locations < 1 || params.n_users < 1 ||
      params.records_per_user < 1 || params.n_districts < 1) {
    throw ConfigError("[synthcity] all sizes must be >= 1");
  }
  Rng rng(params.seed);
  SynthCity city;

  // District centers on a rough grid inside a ~13 km box.
  std::vector<LatLon> centers;
  const int grid = static_cast<int>(
      std::ceil(std::sqrt(static_cast<double>(params.n_districts))));
  for (int d = 0; d < params.n_districts; ++d) {
    const double lat =
        params.origin_lat + 0.12 * (static_cast<double>(d / grid) + 0.5) /
                                static_cast<double>(grid);
    const double lon =
        params.origin_lon + 0.12 * (static_cast<double>(d % grid) + 0.5) /
                                static_cast<double>(grid);
    centers.emplace_back(lat, lon);
  }

  // Locations scattered around their district's center. Each district
  // leans toward one category so districts have a flavor.
  for (int i = 0; i < params.n_locations; ++i) {
    const int d = i % params.n_districts;
    Location loc;
    loc.id = "L" + zero_padded(i, 4);
    const int cat_index = rng.next_double() < 0.5
                              ? d % kNumCategories
                              : static_cast<int>(rng.next_below(
                                    static_cast<std::uint64_t>(
                                        kNumCategories)));
    loc.category = kCategories[cat_index].name;
    loc.parent_category = kCategories[cat_index].parent;
    loc.name = loc.category + std::string(" ") + std::to_string(i);
    const double lat = centers[static_cast<std::size_t>(d)].lat +
                       0.004 * rng.next_gaussian();
    const double lon = centers[static_cast<std::size_t>(d)].lon +
                       0.004 * rng.next_gaussian();
    loc.position = LatLon(std::clamp(lat, -89.0, 89.0),
                          std::clamp(lon, -179.0, 179.0));
    if (rng.next_double() < 0.8) {
      loc.address = std::to_string(100 + static_cast<int>(rng.next_below(
                                             900))) +
                    " District " + std::to_string(d) + " Street";
    }
    city.locations.push_back(std::move(loc));
  }

  // Habit sets: every location is a core habit of one user, so all
  // locations keep enough visits to survive the sparsity filter.
  std::vector<std::vector<std::size_t>> habits(
      static_cast<std::size_t>(params.n_users));
  for (int i = 0; i < params.n_locations; ++i) {
    habits[static_cast<std::size_t>(i % params.n_users)].push_back(
        static_cast<std::size_t>(i));
  }
  for (int u = 0; u < params.n_users; ++u) {
    auto& habit = habits[static_cast<std::size_t>(u)];
    const int extra = 4 + static_cast<int>(rng.next_below(5));
    for (int e = 0; e < extra; ++e) {
      habit.push_back(static_cast<std::size_t>(
          rng.next_below(static_cast<std::uint64_t>(params.n_locations))));
    }
    std::sort(habit.begin(), habit.end());
    habit.erase(std::unique(habit.begin(), habit.end()), habit.end());
    rng.shuffle(habit);
  }

  // Per-user Markov habits: a cycle over the habit set keeps every habit
  // location reachable, plus two per-location shortcuts.
  const std::int64_t start_epoch =
      days_from_civil(2012, 4, 2) * 86400 + 8 * 3600;
  for (int u = 0; u < params.n_users; ++u) {
    const auto& habit = habits[static_cast<std::size_t>(u)];
    const std::size_t h = habit.size();
    std::vector<std::array<std::size_t, 2>> shortcuts(h);
    for (std::size_t i = 0; i < h; ++i) {
      shortcuts[i] = {static_cast<std::size_t>(rng.next_below(h)),
                      static_cast<std::size_t>(rng.next_below(h))};
    }
    const std::string user_id = "u" + zero_padded(u, 3);
    std::int64_t now = start_epoch + static_cast<std::int64_t>(u) * 3600;
    std::size_t position = 0;
    for (int r = 0; r < params.records_per_user; ++r) {
      MobilityRecord record;
      record.user_id = user_id;
      record.location_id = city.locations[habit[position]].id;
      record.timestamp = now;
      city.records.push_back(std::move(record));

      const double move = rng.next_double();
      if (move < 0.55) {
        position = (position + 1) % h;
      } else if (move < 0.80) {
        position = shortcuts[position][0];
      } else if (move < 0.92) {
        position = shortcuts[position][1];
      } else {
        position = static_cast<std::size_t>(rng.next_below(h));
      }
      const double jump = rng.next_double();
      if (jump < 0.78) {
        now += 3600 + static_cast<std::int64_t>(rng.next_below(4 * 3600));
      } else {
        now += 26 * 3600 + static_cast<std::int64_t>(rng.next_below(50 * 3600));
      }
    }
  }
  return city;
}

void write_synth_city(const std::string& dir, const SynthCity& city) {
  std::filesystem::create_directories(dir);
  save_locations_jsonl(dir + "/locations.jsonl", city.locations);
  std::ofstream out(dir + "/checkins.csv");
  if (!out) throw ConfigError("[synthcity] cannot write check-ins: " + dir);
  out << "user_id,location_id,timestamp\n";
  for (const auto& r : city.records) {
    out << r.user_id << "," << r.location_id << ","
        << format_rfc3339(r.timestamp) << "\n";
  }
}

}  // namespace mobitok
