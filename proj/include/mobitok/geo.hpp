#ifndef MOBITOK_GEO_HPP
#define MOBITOK_GEO_HPP

#include <optional>
#include <string>

namespace mobitok {

// IUGG mean Earth radius, fixed so distances are reproducible everywhere.
inline constexpr double kEarthRadiusKm = 6371.0088;

// A validated WGS84 coordinate pair in degrees.
struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  LatLon() = default;
  LatLon(double lat_deg, double lon_deg);
};

struct Location {
  std::string id;
  std::string name;
  std::string category;
  std::optional<std::string> parent_category;
  LatLon position;
  std::optional<std::string> address;
};

// Great-circle distance in kilometers.
double haversine_km(const LatLon& a, const LatLon& b);

// Standard base-32 geohash, longitude bit first. precision in [1, 12].
std::string geohash_encode(const LatLon& p, int precision);

// Cell bounds of a geohash string. Exposed for tests only; the pipeline
// never decodes geohashes.
struct GeohashCell {
  double lat_min, lat_max;
  double lon_min, lon_max;
  LatLon center() const {
    return LatLon{(lat_min + lat_max) / 2.0, (lon_min + lon_max) / 2.0};
  }
};

GeohashCell geohash_decode(const std::string& hash);

}  // namespace mobitok

#endif  // MOBITOK_GEO_HPP
