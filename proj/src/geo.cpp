#include "mobitok/geo.hpp"

#include <cmath>

#include "mobitok/error.hpp"

namespace mobitok {

namespace {

constexpr char kBase32[] = "0123456789bcdefghjkmnpqrstuvwxyz";

int base32_value(char c) {
  for (int i = 0; i < 32; ++i) {
    if (kBase32[i] == c) return i;
  }
  throw DataError("[geo] invalid geohash character '" + std::string(1, c) +
                  "'");
}

double deg2rad(double deg) { return deg * M_PI / 180.0; }

}  // namespace

LatLon::LatLon(double lat_deg, double lon_deg) : lat(lat_deg), lon(lon_deg) {
  if (!std::isfinite(lat) || lat < -90.0 || lat > 90.0) {
    throw ConfigError("[geo] latitude out of range: " + std::to_string(lat));
  }
  if (!std::isfinite(lon) || lon < -180.0 || lon > 180.0) {
    throw ConfigError("[geo] longitude out of range: " + std::to_string(lon));
  }
}

double haversine_km(const LatLon& a, const LatLon& b) {
  const double phi1 = deg2rad(a.lat);
  const double phi2 = deg2rad(b.lat);
  const double dphi = deg2rad(b.lat - a.lat);
  const double dlambda = deg2rad(b.lon - a.lon);
  const double s = std::sin(dphi / 2.0);
  const double t = std::sin(dlambda / 2.0);
  const double h = s * s + std::cos(phi1) * std::cos(phi2) * t * t;
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::min(1.0, h)));
}

std::string geohash_encode(const LatLon& p, int precision) {
  if (precision < 1 || precision > 12) {
    throw ConfigError("[geo] geohash precision must be in [1, 12], got " +
                      std::to_string(precision));
  }
  double lat_min = -90.0, lat_max = 90.0;
  double lon_min = -180.0, lon_max = 180.0;
  std::string out;
  out.reserve(static_cast<std::size_t>(precision));
  bool even_bit = true;  // longitude first
  int bits = 0;
  int value = 0;
  while (static_cast<int>(out.size()) < precision) {
    if (even_bit) {
      const double mid = (lon_min + lon_max) / 2.0;
      if (p.lon >= mid) {
        value = value * 2 + 1;
        lon_min = mid;
      } else {
        value = value * 2;
        lon_max = mid;
      }
    } else {
      const double mid = (lat_min + lat_max) / 2.0;
      if (p.lat >= mid) {
        value = value * 2 + 1;
        lat_min = mid;
      } else {
        value = value * 2;
        lat_max = mid;
      }
    }
    even_bit = !even_bit;
    if (++bits == 5) {
      out.push_back(kBase32[value]);
      bits = 0;
      value = 0;
    }
  }
  return out;
}

GeohashCell geohash_decode(const std::string& hash) {
  GeohashCell cell{-90.0, 90.0, -180.0, 180.0};
  bool even_bit = true;
  for (char c : hash) {
    const int value = base32_value(c);
    for (int bit = 4; bit >= 0; --bit) {
      const int b = (value >> bit) & 1;
      if (even_bit) {
        const double mid = (cell.lon_min + cell.lon_max) / 2.0;
        (b ? cell.lon_min : cell.lon_max) = mid;
      } else {
        const double mid = (cell.lat_min + cell.lat_max) / 2.0;
        (b ? cell.lat_min : cell.lat_max) = mid;
      }
      even_bit = !even_bit;
    }
  }
  return cell;
}

}  // namespace mobitok
