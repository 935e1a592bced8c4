#include "geovmf/density.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "geovmf/errors.hpp"

namespace geovmf {

using nlohmann::json;

double DensityGrid::total_mass() const {
  return std::accumulate(mass.begin(), mass.end(), 0.0);
}

DensityGrid density_grid(const VmfMixture& m, double res_deg, const BBox& box) {
  validate(m);
  if (!(res_deg > 0.0) || res_deg > 5.0) throw ArgError("grid resolution must lie in (0, 5] degrees");
  if (!(box.lat_min < box.lat_max) || !(box.lon_min < box.lon_max) || box.lat_min < -90.0 ||
      box.lat_max > 90.0 || box.lon_min < -180.0 || box.lon_max > 180.0) {
    throw ArgError("invalid bounding box");
  }

  DensityGrid g;
  g.box = box;
  g.res_deg = res_deg;
  g.n_lat = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround((box.lat_max - box.lat_min) / res_deg)));
  g.n_lon = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround((box.lon_max - box.lon_min) / res_deg)));
  g.res_lat_deg = (box.lat_max - box.lat_min) / static_cast<double>(g.n_lat);
  g.res_lon_deg = (box.lon_max - box.lon_min) / static_cast<double>(g.n_lon);
  g.density.resize(g.n_lat * g.n_lon);
  g.mass.resize(g.n_lat * g.n_lon);

  auto eval_row = [&](std::size_t i) {
    const double lat = g.lat_center(i);
    const double solid_angle = g.res_lat_deg * g.res_lon_deg * kDegToRad * kDegToRad *
                               std::cos(lat * kDegToRad);
    for (std::size_t j = 0; j < g.n_lon; ++j) {
      const Vec3 x = geo_to_cart({lat, wrap_lon_deg(g.lon_center(j))});
      const double d = std::exp(mixture_log_density(x, m));
      g.density[i * g.n_lon + j] = d;
      g.mass[i * g.n_lon + j] = d * solid_angle;
    }
  };

  const std::size_t n_threads =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), g.n_lat);
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < g.n_lat; ++i) eval_row(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < g.n_lat; i += n_threads) eval_row(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  return g;
}

std::vector<double> hpd_thresholds(const DensityGrid& g, const std::vector<double>& levels) {
  if (levels.empty()) throw ArgError("hpd_thresholds: no levels");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0 && levels[i] < 1.0)) throw ArgError("levels must lie in (0, 1)");
    if (i > 0 && levels[i] < levels[i - 1]) throw ArgError("levels must be ascending");
  }

  std::vector<std::size_t> order(g.density.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (g.density[a] != g.density[b]) return g.density[a] > g.density[b];
    return a < b;
  });

  std::vector<double> thresholds(levels.size());
  double cum = 0.0;
  std::size_t pos = 0;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    while (pos < order.size() && cum < levels[li]) {
      cum += g.mass[order[pos]];
      ++pos;
    }
    if (cum < levels[li]) {
      char buf[128];
      std::snprintf(buf, sizeof(buf),
                    "grid holds %.4f probability mass, below the %.3f level; enlarge the bbox",
                    cum, levels[li]);
      throw DataError(buf);
    }
    thresholds[li] = g.density[order[pos - 1]];
  }
  return thresholds;
}

// ---------------------------------------------------------------------------
// marching squares

namespace {

// Node lattice: grid cell centers plus a one-node border of pad value, so
// every contour closes inside the lattice (this is what splits polygons at
// the antimeridian and clips them to the bbox).
struct NodeField {
  const DensityGrid& g;
  static constexpr double kPad = -1.0;  // densities are nonnegative

  std::size_t rows() const { return g.n_lat + 2; }
  std::size_t cols() const { return g.n_lon + 2; }
  double value(std::size_t i, std::size_t j) const {
    if (i == 0 || j == 0 || i + 1 >= rows() || j + 1 >= cols()) return kPad;
    return g.value(i - 1, j - 1);
  }
  // unclamped node coordinates, used for interpolation before clamping
  double lat_raw(std::size_t i) const {
    return g.box.lat_min + (static_cast<double>(i) - 0.5) * g.res_lat_deg;
  }
  double lon_raw(std::size_t j) const {
    return g.box.lon_min + (static_cast<double>(j) - 0.5) * g.res_lon_deg;
  }
};

// An edge of the node lattice, identified by its lower-left node and
// direction. Crossing points live on edges.
struct EdgeKey {
  std::uint64_t packed;
  bool operator==(const EdgeKey& o) const { return packed == o.packed; }
};

struct EdgeKeyHash {
  std::size_t operator()(const EdgeKey& k) const { return std::hash<std::uint64_t>{}(k.packed); }
};

EdgeKey make_edge(std::size_t i, std::size_t j, bool horizontal, std::size_t cols) {
  return EdgeKey{((static_cast<std::uint64_t>(i) * (cols + 1) + j) << 1) |
                 (horizontal ? 1u : 0u)};
}

struct LonLat {
  double lon;
  double lat;
};

using Ring = std::vector<LonLat>;

std::vector<Ring> trace_isolines(const NodeField& f, double threshold) {
  const std::size_t R = f.rows();
  const std::size_t C = f.cols();
  auto inside = [&](std::size_t i, std::size_t j) { return f.value(i, j) >= threshold; };

  // crossing coordinates, computed lazily per edge
  std::unordered_map<std::uint64_t, LonLat> points;
  auto crossing = [&](std::size_t i, std::size_t j, bool horizontal) -> EdgeKey {
    const EdgeKey key = make_edge(i, j, horizontal, C);
    if (!points.count(key.packed)) {
      const std::size_t i2 = horizontal ? i : i + 1;
      const std::size_t j2 = horizontal ? j + 1 : j;
      const double va = f.value(i, j);
      const double vb = f.value(i2, j2);
      const double t = (threshold - va) / (vb - va);
      LonLat p;
      p.lon = f.lon_raw(j) + t * (f.lon_raw(j2) - f.lon_raw(j));
      p.lat = f.lat_raw(i) + t * (f.lat_raw(i2) - f.lat_raw(i));
      p.lon = std::clamp(p.lon, f.g.box.lon_min, f.g.box.lon_max);
      p.lat = std::clamp(p.lat, f.g.box.lat_min, f.g.box.lat_max);
      points.emplace(key.packed, p);
    }
    return key;
  };

  // adjacency between crossed edges; every crossed edge ends with degree 2
  std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> adj;
  auto add_segment = [&](EdgeKey a, EdgeKey b) {
    adj[a.packed].push_back(b.packed);
    adj[b.packed].push_back(a.packed);
  };

  for (std::size_t i = 0; i + 1 < R; ++i) {
    for (std::size_t j = 0; j + 1 < C; ++j) {
      const bool sw = inside(i, j);
      const bool se = inside(i, j + 1);
      const bool ne = inside(i + 1, j + 1);
      const bool nw = inside(i + 1, j);
      const int mask = (sw ? 1 : 0) | (se ? 2 : 0) | (ne ? 4 : 0) | (nw ? 8 : 0);
      if (mask == 0 || mask == 15) continue;

      const auto S = [&] { return crossing(i, j, true); };
      const auto E = [&] { return crossing(i, j + 1, false); };
      const auto N = [&] { return crossing(i + 1, j, true); };
      const auto W = [&] { return crossing(i, j, false); };

      switch (mask) {
        case 1: case 14: add_segment(W(), S()); break;
        case 2: case 13: add_segment(S(), E()); break;
        case 3: case 12: add_segment(W(), E()); break;
        case 4: case 11: add_segment(E(), N()); break;
        case 6: case 9:  add_segment(S(), N()); break;
        case 7: case 8:  add_segment(W(), N()); break;
        case 5: {  // SW+NE inside; split by the cell-center average
          const double center = 0.25 * (f.value(i, j) + f.value(i, j + 1) + f.value(i + 1, j + 1) +
                                        f.value(i + 1, j));
          if (center >= threshold) {
            add_segment(S(), E());
            add_segment(N(), W());
          } else {
            add_segment(S(), W());
            add_segment(N(), E());
          }
          break;
        }
        case 10: {  // SE+NW inside
          const double center = 0.25 * (f.value(i, j) + f.value(i, j + 1) + f.value(i + 1, j + 1) +
                                        f.value(i + 1, j));
          if (center >= threshold) {
            add_segment(S(), W());
            add_segment(N(), E());
          } else {
            add_segment(S(), E());
            add_segment(N(), W());
          }
          break;
        }
        default: break;
      }
    }
  }

  std::vector<Ring> rings;
  std::unordered_map<std::uint64_t, bool> visited;
  for (const auto& [start, _] : adj) {
    if (visited[start]) continue;
    Ring ring;
    std::uint64_t prev = 0;
    std::uint64_t cur = start;
    bool has_prev = false;
    while (true) {
      visited[cur] = true;
      ring.push_back(points.at(cur));
      const auto& nbrs = adj.at(cur);
      std::uint64_t next = nbrs[0];
      if (has_prev && next == prev && nbrs.size() > 1) next = nbrs[1];
      prev = cur;
      has_prev = true;
      cur = next;
      if (cur == start) break;
    }
    if (ring.size() >= 3) rings.push_back(std::move(ring));
  }
  return rings;
}

double shoelace(const Ring& r) {
  double a = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const LonLat& p = r[i];
    const LonLat& q = r[(i + 1) % r.size()];
    a += p.lon * q.lat - q.lon * p.lat;
  }
  return 0.5 * a;
}

bool point_in_ring(const LonLat& p, const Ring& r) {
  bool in = false;
  for (std::size_t i = 0, j = r.size() - 1; i < r.size(); j = i++) {
    const bool cross = ((r[i].lat > p.lat) != (r[j].lat > p.lat)) &&
                       (p.lon < (r[j].lon - r[i].lon) * (p.lat - r[i].lat) /
                                        (r[j].lat - r[i].lat) +
                                    r[i].lon);
    if (cross) in = !in;
  }
  return in;
}

json ring_to_coords(const Ring& r, bool ccw) {
  Ring ring = r;
  const double area = shoelace(ring);
  if ((area > 0) != ccw) std::reverse(ring.begin(), ring.end());
  json coords = json::array();
  for (const auto& p : ring) coords.push_back({p.lon, p.lat});
  coords.push_back({ring.front().lon, ring.front().lat});  // close
  return coords;
}

// Groups rings into polygons with holes by containment depth.
json rings_to_multipolygon(std::vector<Ring> rings) {
  const std::size_t n = rings.size();
  std::vector<int> depth(n, 0);
  std::vector<int> parent(n, -1);
  for (std::size_t a = 0; a < n; ++a) {
    double best_area = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      if (point_in_ring(rings[a].front(), rings[b])) {
        ++depth[a];
        const double area = std::abs(shoelace(rings[b]));
        if (area < best_area) {
          best_area = area;
          parent[a] = static_cast<int>(b);
        }
      }
    }
  }

  json multi = json::array();
  std::vector<int> poly_index(n, -1);
  for (std::size_t a = 0; a < n; ++a) {
    if (depth[a] % 2 == 0) {
      json poly = json::array();
      poly.push_back(ring_to_coords(rings[a], /*ccw=*/true));
      poly_index[a] = static_cast<int>(multi.size());
      multi.push_back(std::move(poly));
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    if (depth[a] % 2 == 1 && parent[a] >= 0 && poly_index[parent[a]] >= 0) {
      multi[poly_index[parent[a]]].push_back(ring_to_coords(rings[a], /*ccw=*/false));
    }
  }
  return multi;
}

}  // namespace

std::string contours_geojson(const DensityGrid& g, const std::vector<double>& thresholds,
                             const std::vector<double>& levels, const ContourFeatures& extras) {
  if (thresholds.size() != levels.size()) {
    throw ArgError("contours_geojson: thresholds and levels must pair up");
  }

  json features = json::array();
  const NodeField field{g};
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    std::vector<Ring> rings = trace_isolines(field, thresholds[t]);
    if (rings.empty()) continue;
    json feature;
    feature["type"] = "Feature";
    feature["properties"] = {{"level", levels[t]}, {"threshold", thresholds[t]}};
    feature["geometry"] = {{"type", "MultiPolygon"},
                           {"coordinates", rings_to_multipolygon(std::move(rings))}};
    features.push_back(std::move(feature));
  }

  for (const auto& p : extras.predicted) {
    features.push_back({{"type", "Feature"},
                        {"properties", {{"role", "predicted"}}},
                        {"geometry", {{"type", "Point"}, {"coordinates", {p.lon_deg, p.lat_deg}}}}});
  }
  if (extras.actual) {
    features.push_back(
        {{"type", "Feature"},
         {"properties", {{"role", "actual"}}},
         {"geometry",
          {{"type", "Point"}, {"coordinates", {extras.actual->lon_deg, extras.actual->lat_deg}}}}});
  }

  json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = std::move(features);
  return doc.dump();
}

DensityGrid adaptive_density_grid(const VmfMixture& m, double coarse_res_deg,
                                  double fine_res_deg, double focus_mass) {
  if (!(focus_mass > 0.0 && focus_mass < 1.0)) throw ArgError("focus_mass must lie in (0, 1)");
  if (!(fine_res_deg > 0.0) || fine_res_deg > coarse_res_deg) {
    throw ArgError("fine resolution must be positive and at most the coarse resolution");
  }
  const DensityGrid coarse = density_grid(m, coarse_res_deg);
  const double threshold = hpd_thresholds(coarse, {focus_mass})[0];

  double lat_lo = 90.0, lat_hi = -90.0, lon_lo = 180.0, lon_hi = -180.0;
  for (std::size_t i = 0; i < coarse.n_lat; ++i) {
    for (std::size_t j = 0; j < coarse.n_lon; ++j) {
      if (coarse.value(i, j) < threshold) continue;
      lat_lo = std::min(lat_lo, coarse.lat_center(i));
      lat_hi = std::max(lat_hi, coarse.lat_center(i));
      lon_lo = std::min(lon_lo, coarse.lon_center(j));
      lon_hi = std::max(lon_hi, coarse.lon_center(j));
    }
  }
  const double margin = 2.0 * coarse_res_deg;
  BBox box;
  box.lat_min = std::max(-90.0, lat_lo - margin);
  box.lat_max = std::min(90.0, lat_hi + margin);
  box.lon_min = std::max(-180.0, lon_lo - margin);
  box.lon_max = std::min(180.0, lon_hi + margin);

  // cap the refined grid size; halving resolution quadruples the cell count
  double res = fine_res_deg;
  auto cells = [&](double r) {
    return (box.lat_max - box.lat_min) / r * (box.lon_max - box.lon_min) / r;
  };
  while (cells(res) > 4e6 && res < coarse_res_deg) res *= 2.0;
  res = std::min(res, coarse_res_deg);

  return density_grid(m, res, box);
}

}  // namespace geovmf
