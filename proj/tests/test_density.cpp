#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <queue>

#include "geovmf/density.hpp"
#include "geovmf/errors.hpp"
#include "geovmf/rng.hpp"

using namespace geovmf;
using nlohmann::json;

namespace {

VmfMixture single(const GeoPoint& at, double kappa) {
  return {{{geo_to_cart(at), kappa}}, {1.0}};
}

// Structural GeoJSON checks: types, ring closure, coordinate ranges.
void check_geojson(const std::string& text, std::size_t* n_polygons = nullptr,
                   std::size_t* n_points = nullptr) {
  const json doc = json::parse(text);
  REQUIRE(doc.at("type") == "FeatureCollection");
  REQUIRE(doc.at("features").is_array());
  std::size_t polys = 0, points = 0;
  for (const auto& f : doc["features"]) {
    REQUIRE(f.at("type") == "Feature");
    REQUIRE(f.contains("properties"));
    const auto& geom = f.at("geometry");
    const std::string type = geom.at("type");
    if (type == "Point") {
      ++points;
      const auto& c = geom.at("coordinates");
      REQUIRE(c.size() == 2);
      CHECK(c[0].get<double>() >= -180.0);
      CHECK(c[0].get<double>() <= 180.0);
      CHECK(c[1].get<double>() >= -90.0);
      CHECK(c[1].get<double>() <= 90.0);
      continue;
    }
    REQUIRE(type == "MultiPolygon");
    ++polys;
    CHECK(f["properties"].contains("level"));
    CHECK(f["properties"].contains("threshold"));
    for (const auto& polygon : geom.at("coordinates")) {
      REQUIRE(polygon.is_array());
      REQUIRE(!polygon.empty());
      for (const auto& ring : polygon) {
        REQUIRE(ring.size() >= 4);
        CHECK(ring.front() == ring.back());  // closed
        for (const auto& pos : ring) {
          REQUIRE(pos.size() == 2);
          CHECK(pos[0].get<double>() >= -180.0);
          CHECK(pos[0].get<double>() <= 180.0);
          CHECK(pos[1].get<double>() >= -90.0);
          CHECK(pos[1].get<double>() <= 90.0);
        }
      }
    }
  }
  if (n_polygons) *n_polygons = polys;
  if (n_points) *n_points = points;
}

std::size_t connected_components(const DensityGrid& g, double threshold) {
  std::vector<char> mask(g.density.size());
  for (std::size_t i = 0; i < g.density.size(); ++i) mask[i] = g.density[i] >= threshold;
  std::vector<char> seen(g.density.size(), 0);
  std::size_t components = 0;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || seen[start]) continue;
    ++components;
    std::queue<std::size_t> queue;
    queue.push(start);
    seen[start] = 1;
    while (!queue.empty()) {
      const std::size_t cell = queue.front();
      queue.pop();
      const std::size_t i = cell / g.n_lon;
      const std::size_t j = cell % g.n_lon;
      auto visit = [&](std::size_t ni, std::size_t nj) {
        const std::size_t n = ni * g.n_lon + nj;
        if (mask[n] && !seen[n]) {
          seen[n] = 1;
          queue.push(n);
        }
      };
      if (i > 0) visit(i - 1, j);
      if (i + 1 < g.n_lat) visit(i + 1, j);
      visit(i, (j + 1) % g.n_lon);              // longitude wraps
      visit(i, (j + g.n_lon - 1) % g.n_lon);
    }
  }
  return components;
}

}  // namespace

TEST_CASE("uniform component gives a flat grid at 1/(4 pi)") {
  const DensityGrid g = density_grid(single({20.0, 30.0}, 0.0), 1.0);
  CHECK(g.n_lat == 180);
  CHECK(g.n_lon == 360);
  for (double d : g.density) {
    CHECK(d == doctest::Approx(0.07957747154594767).epsilon(1e-12));
  }
  // all HPD thresholds degenerate to the uniform density
  const auto thresholds = hpd_thresholds(g, {0.1, 0.5, 0.9});
  for (double t : thresholds) CHECK(t == doctest::Approx(0.07957747154594767).epsilon(1e-12));
}

TEST_CASE("grid mass sums to one for mixtures") {
  Rng rng(80);
  VmfMixture m;
  for (int k = 0; k < 5; ++k) {
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double r = std::sqrt(1.0 - z * z);
    m.components.push_back({Vec3{r * std::cos(phi), r * std::sin(phi), z},
                            std::pow(10.0, rng.uniform(-1.0, 2.0))});
    m.rho.push_back(0.2);
  }
  const DensityGrid g = density_grid(m, 1.0);
  CHECK(g.total_mass() == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("halving the resolution does not increase the mass error") {
  // concentrated enough that a 2-degree grid undersamples visibly
  const VmfMixture m = single({37.3, -13.7}, 5000.0);
  const double err2 = std::abs(density_grid(m, 2.0).total_mass() - 1.0);
  const double err1 = std::abs(density_grid(m, 1.0).total_mass() - 1.0);
  CHECK(err1 <= err2 + 1e-12);
  CHECK(err2 > 1e-6);  // the coarse grid really is off
}

TEST_CASE("grids tile awkward boxes without stepping past the pole") {
  // 10.3 degrees of latitude against a 1-degree request: cells stretch
  // slightly instead of a phantom row appearing beyond lat_max
  const VmfMixture m = single({85.0, 10.0}, 50.0);
  const DensityGrid g = density_grid(m, 1.0, BBox{79.7, 90.0, 0.0, 20.0});
  CHECK(g.n_lat == 10);
  CHECK(g.lat_center(g.n_lat - 1) < 90.0);
  CHECK(g.res_lat_deg == doctest::Approx(10.3 / 10.0));
  for (double mass : g.mass) CHECK(mass >= 0.0);
}

TEST_CASE("grid rejects bad inputs") {
  const VmfMixture m = single({0, 0}, 1.0);
  CHECK_THROWS_AS(density_grid(m, 0.0), ArgError);
  CHECK_THROWS_AS(density_grid(m, 6.0), ArgError);
  CHECK_THROWS_AS(density_grid(m, 1.0, BBox{10, 0, 0, 20}), ArgError);
}

TEST_CASE("hpd_thresholds are nonincreasing and validated") {
  const VmfMixture m = single({45.0, 45.0}, 30.0);
  const DensityGrid g = density_grid(m, 1.0);
  const std::vector<double> levels{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  const auto thresholds = hpd_thresholds(g, levels);
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    CHECK(thresholds[i] <= thresholds[i - 1]);
  }
  CHECK_THROWS_AS(hpd_thresholds(g, {}), ArgError);
  CHECK_THROWS_AS(hpd_thresholds(g, {0.5, 0.2}), ArgError);
  CHECK_THROWS_AS(hpd_thresholds(g, {1.5}), ArgError);
}

TEST_CASE("hpd_thresholds rejects a bbox that misses the mass") {
  // a component at the antipode of the bbox; the window holds almost nothing
  const VmfMixture m = single({-40.0, 150.0}, 100.0);
  const DensityGrid g = density_grid(m, 0.5, BBox{30.0, 50.0, -40.0, -20.0});
  CHECK_THROWS_WITH_AS(hpd_thresholds(g, {0.9}), doctest::Contains("bbox"), DataError);
}

TEST_CASE("HPD regions are nested across deciles") {
  Rng rng(83);
  VmfMixture m;
  m.components.push_back({geo_to_cart({10.0, 50.0}), 40.0});
  m.components.push_back({geo_to_cart({-25.0, -130.0}), 15.0});
  m.rho = {0.55, 0.45};
  const DensityGrid g = density_grid(m, 1.0);
  const std::vector<double> levels{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  const auto thresholds = hpd_thresholds(g, levels);
  for (std::size_t li = 1; li < levels.size(); ++li) {
    for (std::size_t c = 0; c < g.density.size(); ++c) {
      if (g.density[c] >= thresholds[li - 1]) {
        CHECK(g.density[c] >= thresholds[li]);  // smaller level's region is inside
      }
    }
  }
}

TEST_CASE("Monte Carlo mass inside the 0.95-level region is 0.95") {
  for (double kappa : {10.0, 100.0}) {
    const VmfMixture m = single({33.0, -97.0}, kappa);
    const DensityGrid g = density_grid(m, 0.5);
    const double t95 = hpd_thresholds(g, {0.95})[0];
    const auto draws = sample_mixture(m, 100000, 314159);
    std::size_t inside = 0;
    for (const auto& x : draws) {
      if (std::exp(mixture_log_density(x, m)) >= t95) ++inside;
    }
    const double coverage = static_cast<double>(inside) / static_cast<double>(draws.size());
    CHECK(std::abs(coverage - 0.95) < 0.01);
  }
}

TEST_CASE("bimodal HPD at level 0.5 splits into two patches") {
  VmfMixture m;
  m.components.push_back({geo_to_cart({5.0, -60.0}), 500.0});
  m.components.push_back({geo_to_cart({-5.0, 120.0}), 500.0});
  m.rho = {0.5, 0.5};
  const DensityGrid g = density_grid(m, 1.0);
  const double t = hpd_thresholds(g, {0.5})[0];
  CHECK(connected_components(g, t) == 2);
}

TEST_CASE("contours: empty thresholds leave only point features") {
  const VmfMixture m = single({10.0, 10.0}, 20.0);
  const DensityGrid g = density_grid(m, 1.0);
  ContourFeatures extras;
  extras.predicted.push_back({10.0, 10.0});
  extras.actual = GeoPoint{12.0, 11.0};
  const std::string doc = contours_geojson(g, {}, {}, extras);
  std::size_t polys = 0, points = 0;
  check_geojson(doc, &polys, &points);
  CHECK(polys == 0);
  CHECK(points == 2);
}

TEST_CASE("contours parse as structurally valid GeoJSON") {
  VmfMixture m;
  m.components.push_back({geo_to_cart({48.0, 10.0}), 80.0});
  m.components.push_back({geo_to_cart({-20.0, -170.0}), 40.0});  // straddles the antimeridian
  m.rho = {0.7, 0.3};
  const DensityGrid g = density_grid(m, 1.0);
  const std::vector<double> levels{0.1, 0.3, 0.5, 0.7, 0.9};
  const auto thresholds = hpd_thresholds(g, levels);
  ContourFeatures extras;
  extras.predicted.push_back({48.0, 10.0});
  extras.predicted.push_back({-20.0, -170.0});
  const std::string doc = contours_geojson(g, thresholds, levels, extras);
  std::size_t polys = 0, points = 0;
  check_geojson(doc, &polys, &points);
  CHECK(polys == levels.size());
  CHECK(points == 2);
}

TEST_CASE("the 0.1-level contour centroid sits on the concentrated component") {
  const GeoPoint at{37.5, -100.25};
  const VmfMixture m = single(at, 500.0);
  const DensityGrid g = density_grid(m, 0.25, BBox{30.0, 45.0, -108.0, -92.0});
  const auto thresholds = hpd_thresholds(g, {0.1});
  const std::string doc = contours_geojson(g, thresholds, {0.1});
  const json parsed = json::parse(doc);
  double lat_sum = 0.0, lon_sum = 0.0;
  std::size_t count = 0;
  for (const auto& f : parsed["features"]) {
    if (f["geometry"]["type"] != "MultiPolygon") continue;
    for (const auto& poly : f["geometry"]["coordinates"]) {
      const auto& ring = poly[0];
      for (std::size_t i = 0; i + 1 < ring.size(); ++i) {  // skip the closing copy
        lon_sum += ring[i][0].get<double>();
        lat_sum += ring[i][1].get<double>();
        ++count;
      }
    }
  }
  REQUIRE(count > 0);
  CHECK(std::abs(lat_sum / count - at.lat_deg) < 0.25);
  CHECK(std::abs(lon_sum / count - at.lon_deg) < 0.25);
}

TEST_CASE("adaptive grid focuses on the mass and keeps it") {
  const VmfMixture m = single({-33.87, 151.21}, 200.0);
  const DensityGrid g = adaptive_density_grid(m, 1.0, 0.05, 0.99);
  CHECK(g.res_deg == doctest::Approx(0.05));
  CHECK(g.box.lat_min > -90.0);  // genuinely focused
  CHECK(g.box.lon_min > -180.0);
  CHECK(g.total_mass() > 0.99);
  // thresholds up to 0.9 are safe on the focused grid
  const auto thresholds = hpd_thresholds(g, {0.1, 0.5, 0.9});
  CHECK(thresholds[2] > 0.0);
}
