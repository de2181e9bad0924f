#ifndef MOBITOK_SYNTHCITY_HPP
#define MOBITOK_SYNTHCITY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mobitok/ingest.hpp"

namespace mobitok {

// Seeded generator for test fixtures: clustered locations over a handful
// of districts, per-user Markov visiting habits over a small habit set.
struct SynthCityParams {
  int n_locations = 200;
  int n_users = 50;
  int records_per_user = 300;
  int n_districts = 8;
  std::uint64_t seed = 7;
  double origin_lat = 40.70;
  double origin_lon = -74.02;
};

struct SynthCity {
  std::vector<Location> locations;
  std::vector<MobilityRecord> records;
};

SynthCity generate_synth_city(const SynthCityParams& params);

// Writes checkins.csv and locations.jsonl into dir (created if missing).
void write_synth_city(const std::string& dir, const SynthCity& city);

}  // namespace mobitok

#endif  // MOBITOK_SYNTHCITY_HPP
