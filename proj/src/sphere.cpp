#include "geovmf/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "geovmf/errors.hpp"

namespace geovmf {

double wrap_lon_deg(double lon_deg) {
  double lon = std::fmod(lon_deg, 360.0);
  if (lon < -180.0) lon += 360.0;
  if (lon >= 180.0) lon -= 360.0;
  // fmod can return -0.0; normalize it away so wrapped points compare equal
  if (lon == 0.0) lon = 0.0;
  return lon;
}

bool geo_valid(const GeoPoint& p) {
  return std::isfinite(p.lat_deg) && std::isfinite(p.lon_deg) && p.lat_deg >= -90.0 &&
         p.lat_deg <= 90.0;
}

GeoPoint normalized_geo(const GeoPoint& p) {
  if (!std::isfinite(p.lat_deg) || !std::isfinite(p.lon_deg)) {
    throw ArgError("GeoPoint has non-finite coordinates");
  }
  if (p.lat_deg < -90.0 || p.lat_deg > 90.0) {
    throw ArgError("latitude out of range [-90, 90]: " + std::to_string(p.lat_deg));
  }
  return {p.lat_deg, wrap_lon_deg(p.lon_deg)};
}

Vec3 geo_to_cart(const GeoPoint& p) {
  const GeoPoint q = normalized_geo(p);
  const double lat = q.lat_deg * kDegToRad;
  const double lon = q.lon_deg * kDegToRad;
  const double cl = std::cos(lat);
  return {cl * std::cos(lon), cl * std::sin(lon), std::sin(lat)};
}

GeoPoint cart_to_geo(const Vec3& v) {
  const double n = norm(v);
  if (!std::isfinite(n) || n < 1e-12) {
    throw ArgError("cart_to_geo: vector has zero or non-finite norm");
  }
  const Vec3 u = (1.0 / n) * v;
  const double lat = std::asin(std::clamp(u.z, -1.0, 1.0)) * kRadToDeg;
  // atan2(0, 0) == 0, which is the documented pole convention
  const double lon = std::atan2(u.y, u.x) * kRadToDeg;
  return {lat, wrap_lon_deg(lon)};
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  const GeoPoint pa = normalized_geo(a);
  const GeoPoint pb = normalized_geo(b);
  const double lat1 = pa.lat_deg * kDegToRad;
  const double lat2 = pb.lat_deg * kDegToRad;
  const double dlat = lat2 - lat1;
  const double dlon = (pb.lon_deg - pa.lon_deg) * kDegToRad;
  const double sl = std::sin(0.5 * dlat);
  const double so = std::sin(0.5 * dlon);
  const double h = sl * sl + std::cos(lat1) * std::cos(lat2) * so * so;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

double angular_distance(const Vec3& u, const Vec3& v) {
  return std::acos(std::clamp(dot(u, v), -1.0, 1.0));
}

}  // namespace geovmf
