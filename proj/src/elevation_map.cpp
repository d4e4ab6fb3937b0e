#include "ovd/elevation_map.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "ovd/error.hpp"

namespace ovd {

namespace {

constexpr char kMapMagic[4] = {'O', 'V', 'D', 'M'};
constexpr std::uint32_t kMapVersion = 1;
constexpr char kAsciiHeader[] = "ovd-elevation-ascii v1";

struct GridCoord {
  double gx, gy;  // fractional cell coordinates
};

GridCoord to_grid(const ElevationMap& map, double x, double y) {
  return {(x - map.origin_x) / map.resolution,
          (y - map.origin_y) / map.resolution};
}

void check_bounds(const ElevationMap& map, const GridCoord& g, double x,
                  double y) {
  if (g.gx < 0.0 || g.gy < 0.0 || g.gx > map.width - 1.0 ||
      g.gy > map.height - 1.0) {
    std::ostringstream msg;
    msg << "query (" << x << ", " << y << ") outside map footprint";
    throw Error::data("OutOfBounds", msg.str());
  }
}

}  // namespace

void validate(const ElevationMap& map) {
  if (!(map.resolution > 0.0)) {
    throw Error::data("ConfigInvalid", "map resolution must be positive");
  }
  if (map.width < 2 || map.height < 2) {
    throw Error::data("ConfigInvalid", "map must be at least 2x2 cells");
  }
  if (map.heights.size() !=
      static_cast<std::size_t>(map.width) * map.height) {
    throw Error::data("ShapeMismatch", "height grid size does not match dims");
  }
  for (float h : map.heights) {
    if (!std::isfinite(h)) {
      throw Error::data("ConfigInvalid", "map contains non-finite heights");
    }
  }
}

double height_at(const ElevationMap& map, double x, double y) {
  const GridCoord g = to_grid(map, x, y);
  check_bounds(map, g, x, y);
  const auto col0 = static_cast<std::uint32_t>(
      std::min(std::floor(g.gx), static_cast<double>(map.width - 2)));
  const auto row0 = static_cast<std::uint32_t>(
      std::min(std::floor(g.gy), static_cast<double>(map.height - 2)));
  const double fx = g.gx - col0;
  const double fy = g.gy - row0;
  const double h00 = map.at(row0, col0);
  const double h01 = map.at(row0, col0 + 1);
  const double h10 = map.at(row0 + 1, col0);
  const double h11 = map.at(row0 + 1, col0 + 1);
  return h00 * (1.0 - fx) * (1.0 - fy) + h01 * fx * (1.0 - fy) +
         h10 * (1.0 - fx) * fy + h11 * fx * fy;
}

Vec3 surface_normal(const ElevationMap& map, double x, double y) {
  const double r = map.resolution;
  const double dhdx = (height_at(map, x + r, y) - height_at(map, x - r, y)) /
                      (2.0 * r);
  const double dhdy = (height_at(map, x, y + r) - height_at(map, x, y - r)) /
                      (2.0 * r);
  return normalized(Vec3{-dhdx, -dhdy, 1.0});
}

ProjectedPose project_pose(const ElevationMap& map, double x, double y,
                           double yaw, const VehicleParams& params) {
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double half_track = 0.5 * params.track_width;

  // Contact points in body frame (x forward, y left).
  const std::array<std::array<double, 2>, 4> body = {{
      {params.front_axle_distance, half_track},
      {params.front_axle_distance, -half_track},
      {-params.rear_axle_distance, half_track},
      {-params.rear_axle_distance, -half_track},
  }};

  // Least-squares plane h = a*xb + b*yb + c through the four contact heights.
  double sxx = 0, syy = 0, sx = 0, sxh = 0, syh = 0, sh = 0;
  for (const auto& [xb, yb] : body) {
    const double wx = x + cy * xb - sy * yb;
    const double wy = y + sy * xb + cy * yb;
    const double h = height_at(map, wx, wy);
    sxx += xb * xb;
    syy += yb * yb;
    sx += xb;
    sxh += xb * h;
    syh += yb * h;
    sh += h;
  }
  const int n = 4;
  const double xbar = sx / n;
  const double hbar = sh / n;
  const double a = (sxh - n * xbar * hbar) / (sxx - n * xbar * xbar);
  const double b = syh / syy;  // y offsets are symmetric, ybar = 0

  ProjectedPose pose;
  pose.yaw = yaw;
  pose.pitch = -std::atan(a);  // ground rising forward -> nose up -> negative
  pose.roll = std::atan(b * std::cos(pose.pitch));
  pose.orientation = quat_from_euler({pose.roll, pose.pitch, pose.yaw});
  pose.position = {x, y, height_at(map, x, y) + params.ground_clearance};
  return pose;
}

TerrainPatch extract_patch(const ElevationMap& map, double x, double y,
                           double yaw, std::uint32_t size,
                           double patch_resolution) {
  if (size < 1 || size % 2 == 0) {
    throw Error::data("ConfigInvalid", "patch size must be odd");
  }
  if (!(patch_resolution > 0.0)) {
    throw Error::data("ConfigInvalid", "patch resolution must be positive");
  }
  TerrainPatch patch;
  patch.size = size;
  patch.resolution = patch_resolution;
  patch.heading = yaw;
  patch.heights.resize(static_cast<std::size_t>(size) * size);

  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const auto c = static_cast<std::int64_t>(size / 2);
  for (std::int64_t i = 0; i < size; ++i) {
    const double yb = static_cast<double>(i - c) * patch_resolution;
    for (std::int64_t j = 0; j < size; ++j) {
      const double xb = static_cast<double>(j - c) * patch_resolution;
      const double wx = x + cy * xb - sy * yb;
      const double wy = y + sy * xb + cy * yb;
      patch.heights[static_cast<std::size_t>(i) * size + j] =
          height_at(map, wx, wy);
    }
  }
  const double center = patch.heights[static_cast<std::size_t>(c) * size + c];
  for (double& h : patch.heights) h -= center;
  return patch;
}

namespace {

template <typename T>
void write_raw(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

ElevationMap load_map_ascii(std::istream& in, const std::string& path);

}  // namespace

void save_map(const ElevationMap& map, const std::string& path) {
  validate(map);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error::data("ParseError", "cannot write " + tmp);
    out.write(kMapMagic, 4);
    write_raw(out, kMapVersion);
    write_raw(out, map.origin_x);
    write_raw(out, map.origin_y);
    write_raw(out, map.resolution);
    write_raw(out, map.width);
    write_raw(out, map.height);
    out.write(reinterpret_cast<const char*>(map.heights.data()),
              static_cast<std::streamsize>(map.heights.size() * sizeof(float)));
    if (!out) throw Error::data("ParseError", "write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

ElevationMap load_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error::data("ParseError", "cannot open map file " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in) throw Error::data("ParseError", path + ": truncated header");
  if (std::memcmp(magic, kMapMagic, 4) != 0) {
    // Fall back to the ASCII variant.
    in.seekg(0);
    return load_map_ascii(in, path);
  }
  const auto version = read_raw<std::uint32_t>(in);
  if (version != kMapVersion) {
    throw Error::data("ParseError",
                      path + ": unsupported map version " +
                          std::to_string(version));
  }
  ElevationMap map;
  map.origin_x = read_raw<double>(in);
  map.origin_y = read_raw<double>(in);
  map.resolution = read_raw<double>(in);
  map.width = read_raw<std::uint32_t>(in);
  map.height = read_raw<std::uint32_t>(in);
  if (!in) throw Error::data("ParseError", path + ": truncated header");
  const std::size_t count =
      static_cast<std::size_t>(map.width) * map.height;
  if (count > (1u << 28)) {
    throw Error::data("ParseError", path + ": implausible map dimensions");
  }
  map.heights.resize(count);
  in.read(reinterpret_cast<char*>(map.heights.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw Error::data("ParseError", path + ": truncated height data");
  validate(map);
  return map;
}

void save_map_ascii(const ElevationMap& map, const std::string& path) {
  validate(map);
  std::ostringstream out;
  out.precision(std::numeric_limits<float>::max_digits10);
  out << kAsciiHeader << '\n';
  out << "origin " << map.origin_x << ' ' << map.origin_y << '\n';
  out << "resolution " << map.resolution << '\n';
  out << "size " << map.width << ' ' << map.height << '\n';
  for (std::uint32_t row = 0; row < map.height; ++row) {
    for (std::uint32_t col = 0; col < map.width; ++col) {
      if (col) out << ' ';
      out << map.at(row, col);
    }
    out << '\n';
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw Error::data("ParseError", "cannot write " + tmp);
    f << out.str();
  }
  std::filesystem::rename(tmp, path);
}

namespace {

ElevationMap load_map_ascii(std::istream& in, const std::string& path) {
  std::string header;
  std::getline(in, header);
  if (header != kAsciiHeader) {
    throw Error::data("ParseError", path + ": not an elevation map file");
  }
  ElevationMap map;
  std::string key;
  in >> key;
  if (key != "origin" || !(in >> map.origin_x >> map.origin_y)) {
    throw Error::data("ParseError", path + ": bad origin line");
  }
  in >> key;
  if (key != "resolution" || !(in >> map.resolution)) {
    throw Error::data("ParseError", path + ": bad resolution line");
  }
  in >> key;
  if (key != "size" || !(in >> map.width >> map.height)) {
    throw Error::data("ParseError", path + ": bad size line");
  }
  const std::size_t count =
      static_cast<std::size_t>(map.width) * map.height;
  map.heights.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!(in >> map.heights[i])) {
      throw Error::data("ParseError", path + ": truncated height data");
    }
  }
  validate(map);
  return map;
}

}  // namespace

}  // namespace ovd
