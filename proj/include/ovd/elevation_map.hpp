// 2.5D elevation-map storage and surface geometry queries: bilinear height
// lookup, central-difference normals, 4-point pose projection, and the
// yaw-aligned center-normalized terrain patch fed to the learned model.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ovd/geometry.hpp"
#include "ovd/types.hpp"

namespace ovd {

/// Regular height grid. origin is the world (x, y) of cell (0, 0)'s center;
/// columns run along +x, rows along +y. Heights are stored as float to match
/// the binary file format exactly; queries interpolate in double.
struct ElevationMap {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double resolution = 1.0;     // m/cell
  std::uint32_t width = 0;     // columns (x)
  std::uint32_t height = 0;    // rows (y)
  std::vector<float> heights;  // row-major, heights[row * width + col]

  float at(std::uint32_t row, std::uint32_t col) const {
    return heights[static_cast<std::size_t>(row) * width + col];
  }
};

void validate(const ElevationMap& map);

/// Vehicle-centered square height grid, yaw-aligned, center cell subtracted.
/// heights[i * size + j]: j (column) runs along body-x (forward), i (row)
/// along body-y (left).
struct TerrainPatch {
  std::uint32_t size = 0;  // cells per side, odd
  double resolution = 0.0;
  double heading = 0.0;  // rad, vehicle yaw the patch is aligned to
  std::vector<double> heights;
};

/// Bilinear height; exact at cell centers. Throws OutOfBounds outside the
/// grid footprint.
double height_at(const ElevationMap& map, double x, double y);

/// Unit surface normal (z > 0) from central differences at map resolution.
/// Requires at least one cell of margin to the border.
Vec3 surface_normal(const ElevationMap& map, double x, double y);

struct ProjectedPose {
  Vec3 position;
  Quat orientation;
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

/// Place the vehicle on the terrain at (x, y) with the given yaw: z from the
/// map plus ground clearance, roll/pitch from the best-fit plane through the
/// four wheel contact points.
ProjectedPose project_pose(const ElevationMap& map, double x, double y,
                           double yaw, const VehicleParams& params);

/// Sample a size x size patch under the vehicle, rotated to the given yaw
/// and normalized so the center cell is zero. size must be odd.
TerrainPatch extract_patch(const ElevationMap& map, double x, double y,
                           double yaw, std::uint32_t size,
                           double patch_resolution);

/// Binary map file ("OVDM" magic, version, origin, resolution, dims,
/// row-major little-endian f32 heights). Round-trips bitwise.
void save_map(const ElevationMap& map, const std::string& path);
ElevationMap load_map(const std::string& path);

/// Human-readable ASCII variant accepted anywhere a map is loaded.
void save_map_ascii(const ElevationMap& map, const std::string& path);

}  // namespace ovd
