#pragma once

#include <cmath>
#include <numbers>

namespace geovmf {

// IUGG mean Earth radius. Every kilometre figure in the library derives from
// this constant.
inline constexpr double kEarthRadiusKm = 6371.0088;

inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// Geodetic coordinate in degrees. lat in [-90, 90], lon kept in [-180, 180).
struct GeoPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
};

// Point in 3-space. Functions that need a direction on the unit sphere state
// so and validate the norm.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

double wrap_lon_deg(double lon_deg);  // into [-180, 180)

bool geo_valid(const GeoPoint& p);

// Wraps longitude and validates latitude. Throws ArgError on out-of-range or
// non-finite latitude.
GeoPoint normalized_geo(const GeoPoint& p);

Vec3 geo_to_cart(const GeoPoint& p);

// Inverse of geo_to_cart. Renormalizes inputs whose norm drifted within 1e-9
// of 1; rejects the zero vector. Longitude at the poles is 0 by convention.
GeoPoint cart_to_geo(const Vec3& v);

double haversine_km(const GeoPoint& a, const GeoPoint& b);

// acos(clamp(u.v)) for unit vectors, in radians.
double angular_distance(const Vec3& u, const Vec3& v);

}  // namespace geovmf
