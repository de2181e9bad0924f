#ifndef MOBITOK_DESCRIBE_HPP
#define MOBITOK_DESCRIBE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mobitok/geo.hpp"

namespace mobitok {

struct ContextSummary {
  struct CategoryStat {
    std::string category;
    std::int64_t count = 0;  // in-radius count around the target
    std::int64_t avg = 0;    // dataset-wide mean in-radius count, rounded
  };
  struct PoiDistance {
    std::string name;
    double distance_km = 0.0;
  };
  std::vector<CategoryStat> top_categories;
  std::vector<PoiDistance> nearest_pois;
  std::vector<PoiDistance> representative_pois;
};

// Spatial context shared by every description of one dataset: a grid index
// with cell size equal to the radius, visit counts, and the dataset-wide
// per-neighborhood category means. Built once, read-only afterwards.
class DescribeIndex {
 public:
  DescribeIndex(std::vector<Location> locations,
                std::map<std::string, std::size_t> visits,
                double radius_km = 2.0);

  ContextSummary summary(const std::string& location_id,
                         std::size_t k = 10) const;

  const std::vector<Location>& locations() const { return locations_; }
  double radius_km() const { return radius_km_; }

 private:
  std::vector<std::size_t> within_radius(std::size_t i) const;

  std::vector<Location> locations_;
  std::map<std::string, std::size_t> visits_;
  double radius_km_;
  double cell_lat_deg_;
  double cell_lon_deg_;
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>>
      grid_;
  std::map<std::string, std::size_t> id_to_index_;
  std::map<std::string, double> category_mean_;  // unrounded means
};

// Convenience wrapper matching the one-shot call shape; builds a
// DescribeIndex internally.
ContextSummary neighborhood_stats(const Location& target,
                                  const std::vector<Location>& all,
                                  const std::map<std::string, std::size_t>& visits,
                                  double radius_km = 2.0, std::size_t k = 10);

// Renders the fixed-order textual description; byte-identical for
// identical inputs.
std::string render_description(const Location& loc, const ContextSummary& ctx,
                               int geohash_precision = 12);

void save_descriptions_jsonl(
    const std::string& path,
    const std::map<std::string, std::string>& descriptions);
std::map<std::string, std::string> load_descriptions_jsonl(
    const std::string& path);

}  // namespace mobitok

#endif  // MOBITOK_DESCRIBE_HPP
