#include "mobitok/describe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mobitok/error.hpp"

namespace mobitok {

using json = nlohmann::json;

namespace {

constexpr double kKmPerLatDegreeMin = 110.567;
constexpr double kKmPerLonDegreeEquator = 111.320;

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

}  // namespace

DescribeIndex::DescribeIndex(std::vector<Location> locations,
                             std::map<std::string, std::size_t> visits,
                             double radius_km)
    : locations_(std::move(locations)),
      visits_(std::move(visits)),
      radius_km_(radius_km) {
  if (!(radius_km_ > 0.0)) {
    throw ConfigError("[describe] radius_km must be > 0");
  }
  double max_abs_lat = 0.0;
  for (std::size_t i = 0; i < locations_.size(); ++i) {
    max_abs_lat = std::max(max_abs_lat, std::fabs(locations_[i].position.lat));
    if (!id_to_index_.emplace(locations_[i].id, i).second) {
      throw DataError("[describe] duplicate location id '" +
                      locations_[i].id + "'");
    }
  }
  const double cos_clamped =
      std::max(0.01, std::cos(max_abs_lat * M_PI / 180.0));
  cell_lat_deg_ = radius_km_ / kKmPerLatDegreeMin;
  cell_lon_deg_ = radius_km_ / (kKmPerLonDegreeEquator * cos_clamped);
  for (std::size_t i = 0; i < locations_.size(); ++i) {
    const auto lat_cell = static_cast<std::int64_t>(
        std::floor(locations_[i].position.lat / cell_lat_deg_));
    const auto lon_cell = static_cast<std::int64_t>(
        std::floor(locations_[i].position.lon / cell_lon_deg_));
    grid_[{lat_cell, lon_cell}].push_back(i);
  }

  // Dataset-wide mean in-radius count per category, over every location's
  // neighborhood (target excluded from its own neighborhood).
  std::map<std::string, double> sums;
  for (std::size_t i = 0; i < locations_.size(); ++i) {
    for (std::size_t j : within_radius(i)) {
      sums[locations_[j].category] += 1.0;
    }
  }
  for (const auto& [category, total] : sums) {
    category_mean_[category] =
        total / static_cast<double>(locations_.size());
  }
}

std::vector<std::size_t> DescribeIndex::within_radius(std::size_t i) const {
  const LatLon& p = locations_[i].position;
  const auto lat_cell =
      static_cast<std::int64_t>(std::floor(p.lat / cell_lat_deg_));
  const auto lon_cell =
      static_cast<std::int64_t>(std::floor(p.lon / cell_lon_deg_));
  std::vector<std::size_t> out;
  for (std::int64_t dl = -1; dl <= 1; ++dl) {
    for (std::int64_t dc = -1; dc <= 1; ++dc) {
      auto it = grid_.find({lat_cell + dl, lon_cell + dc});
      if (it == grid_.end()) continue;
      for (std::size_t j : it->second) {
        if (j == i) continue;
        if (haversine_km(p, locations_[j].position) <= radius_km_) {
          out.push_back(j);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ContextSummary DescribeIndex::summary(const std::string& location_id,
                                      std::size_t k) const {
  auto it = id_to_index_.find(location_id);
  if (it == id_to_index_.end()) {
    throw DataError("[describe] unknown location '" + location_id + "'");
  }
  const std::size_t target = it->second;
  const LatLon& p = locations_[target].position;
  ContextSummary summary;

  const std::vector<std::size_t> in_radius = within_radius(target);

  // Category counts in the neighborhood.
  std::map<std::string, std::int64_t> counts;
  for (std::size_t j : in_radius) ++counts[locations_[j].category];
  std::vector<ContextSummary::CategoryStat> cats;
  for (const auto& [category, count] : counts) {
    ContextSummary::CategoryStat stat;
    stat.category = category;
    stat.count = count;
    auto mean_it = category_mean_.find(category);
    stat.avg = mean_it == category_mean_.end()
                   ? 0
                   : std::llround(mean_it->second);
    cats.push_back(std::move(stat));
  }
  std::sort(cats.begin(), cats.end(), [](const auto& a, const auto& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.category < b.category;
  });
  if (cats.size() > k) cats.resize(k);
  summary.top_categories = std::move(cats);

  // k nearest other locations, dataset-wide.
  std::vector<std::pair<double, std::size_t>> by_distance;
  by_distance.reserve(locations_.size());
  for (std::size_t j = 0; j < locations_.size(); ++j) {
    if (j == target) continue;
    by_distance.emplace_back(haversine_km(p, locations_[j].position), j);
  }
  std::sort(by_distance.begin(), by_distance.end(),
            [this](const auto& a, const auto& b) {
              if (a.first != b.first) return a.first < b.first;
              return locations_[a.second].id < locations_[b.second].id;
            });
  for (std::size_t r = 0; r < by_distance.size() && r < k; ++r) {
    summary.nearest_pois.push_back(
        {locations_[by_distance[r].second].name, by_distance[r].first});
  }

  // k most-visited locations within the radius.
  std::vector<std::size_t> rep = in_radius;
  auto visit_count = [this](std::size_t j) -> std::size_t {
    auto vit = visits_.find(locations_[j].id);
    return vit == visits_.end() ? 0 : vit->second;
  };
  std::sort(rep.begin(), rep.end(), [&](std::size_t a, std::size_t b) {
    const auto va = visit_count(a);
    const auto vb = visit_count(b);
    if (va != vb) return va > vb;
    return locations_[a].id < locations_[b].id;
  });
  if (rep.size() > k) rep.resize(k);
  for (std::size_t j : rep) {
    summary.representative_pois.push_back(
        {locations_[j].name, haversine_km(p, locations_[j].position)});
  }
  return summary;
}

ContextSummary neighborhood_stats(const Location& target,
                                  const std::vector<Location>& all,
                                  const std::map<std::string, std::size_t>& visits,
                                  double radius_km, std::size_t k) {
  DescribeIndex index(all, visits, radius_km);
  return index.summary(target.id, k);
}

std::string render_description(const Location& loc, const ContextSummary& ctx,
                               int geohash_precision) {
  std::ostringstream out;
  out << "The name of this location is \"" << loc.name
      << "\" and its POI category is " << loc.category;
  if (loc.parent_category) {
    out << ", belonging to the parent category " << *loc.parent_category;
  }
  out << ".\n";
  out << "The geographic coordinates for this location are ("
      << format_fixed(loc.position.lat, 6) << ", "
      << format_fixed(loc.position.lon, 6)
      << "), with the corresponding geohash code "
      << geohash_encode(loc.position, geohash_precision) << ".\n";
  if (loc.address) {
    out << "The address is " << *loc.address << ".\n";
  } else {
    out << "The address is unknown.\n";
  }
  out << "The top 10 nearby points-of-interest (POI) categories and their "
         "counts are:\n";
  for (const auto& stat : ctx.top_categories) {
    out << "- " << stat.category << ", " << stat.count << " (avg: " << stat.avg
        << ")\n";
  }
  out << "The 10 nearest POIs and their distances are:\n";
  for (const auto& poi : ctx.nearest_pois) {
    out << "- " << poi.name << ", distance "
        << format_fixed(poi.distance_km, 2) << " km\n";
  }
  out << "The 10 representative nearby POIs and their distances are:\n";
  for (const auto& poi : ctx.representative_pois) {
    out << "- " << poi.name << ", distance "
        << format_fixed(poi.distance_km, 2) << " km\n";
  }
  return out.str();
}

void save_descriptions_jsonl(
    const std::string& path,
    const std::map<std::string, std::string>& descriptions) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("[describe] cannot write descriptions file: " + path);
  }
  for (const auto& [id, text] : descriptions) {
    json obj;
    obj["location_id"] = id;
    obj["description"] = text;
    out << obj.dump() << "\n";
  }
}

std::map<std::string, std::string> load_descriptions_jsonl(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("[describe] cannot open descriptions file: " + path);
  }
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("[describe] descriptions line " +
                      std::to_string(line_no) + ": " + e.what());
    }
    out[obj.at("location_id").get<std::string>()] =
        obj.at("description").get<std::string>();
  }
  return out;
}

}  // namespace mobitok
