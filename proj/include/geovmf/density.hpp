#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geovmf/mixture.hpp"

namespace geovmf {

struct BBox {
  double lat_min = -90.0;
  double lat_max = 90.0;
  double lon_min = -180.0;
  double lon_max = 180.0;
};

// Mixture density tabulated at cell centers of a lat/lon grid, with per-cell
// probability mass (density times cell solid angle, cos-latitude weighted).
// The box is tiled exactly: cell edge lengths are the requested resolution
// stretched by at most half a cell so an integer number of cells fits.
struct DensityGrid {
  BBox box;
  double res_deg = 1.0;      // requested
  double res_lat_deg = 1.0;  // effective
  double res_lon_deg = 1.0;
  std::size_t n_lat = 0;
  std::size_t n_lon = 0;
  std::vector<double> density;  // row-major, latitude-major, per steradian
  std::vector<double> mass;

  double lat_center(std::size_t i) const {
    return box.lat_min + (static_cast<double>(i) + 0.5) * res_lat_deg;
  }
  double lon_center(std::size_t j) const {
    return box.lon_min + (static_cast<double>(j) + 0.5) * res_lon_deg;
  }
  double value(std::size_t i, std::size_t j) const { return density[i * n_lon + j]; }
  double total_mass() const;
};

// Evaluates the mixture over the grid. Rows are computed in parallel; output
// is deterministic. res_deg must lie in (0, 5].
DensityGrid density_grid(const VmfMixture& m, double res_deg, const BBox& box = {});

// Highest-density thresholds for the given ascending mass levels: cells are
// ranked by density and mass is accumulated until each level is reached.
// Errors when the grid holds less mass than the largest level (bbox too
// small).
std::vector<double> hpd_thresholds(const DensityGrid& g, const std::vector<double>& levels);

struct ContourFeatures {
  std::vector<GeoPoint> predicted;  // e.g. component means
  std::optional<GeoPoint> actual;   // gold coordinate
};

// Marching-squares isolines for each threshold, emitted as a GeoJSON
// FeatureCollection of MultiPolygon features with {level, threshold}
// properties, plus optional Point features. Contours crossing the grid edge
// (antimeridian, poles, bbox) are closed along it.
std::string contours_geojson(const DensityGrid& g, const std::vector<double>& thresholds,
                             const std::vector<double>& levels,
                             const ContourFeatures& extras = {});

// Whole-sphere pass at coarse_res_deg, then a refined grid over the bbox of
// the focus_mass HPD region. Cell count is capped by coarsening fine_res_deg
// when the region is very large.
DensityGrid adaptive_density_grid(const VmfMixture& m, double coarse_res_deg = 1.0,
                                  double fine_res_deg = 0.05, double focus_mass = 0.99);

}  // namespace geovmf
