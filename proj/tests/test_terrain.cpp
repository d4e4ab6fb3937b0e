#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ovd/elevation_map.hpp"
#include "ovd/error.hpp"
#include "ovd/rng.hpp"

using namespace ovd;

namespace {

ElevationMap constant_map(double value, std::uint32_t cells = 32,
                          double res = 1.0) {
  ElevationMap m;
  m.origin_x = 0.0;
  m.origin_y = 0.0;
  m.resolution = res;
  m.width = cells;
  m.height = cells;
  m.heights.assign(static_cast<std::size_t>(cells) * cells,
                   static_cast<float>(value));
  return m;
}

/// h(x, y) = gx * x + gy * y
ElevationMap plane_map(double gx, double gy, std::uint32_t cells = 64,
                       double res = 0.5) {
  ElevationMap m = constant_map(0.0, cells, res);
  for (std::uint32_t row = 0; row < cells; ++row) {
    for (std::uint32_t col = 0; col < cells; ++col) {
      const double x = col * res;
      const double y = row * res;
      m.heights[static_cast<std::size_t>(row) * cells + col] =
          static_cast<float>(gx * x + gy * y);
    }
  }
  return m;
}

}  // namespace

TEST_CASE("height_at on a constant map") {
  const ElevationMap m = constant_map(5.0);
  CHECK(height_at(m, 3.3, 7.9) == doctest::Approx(5.0));
  CHECK(height_at(m, 0.0, 0.0) == doctest::Approx(5.0));
}

TEST_CASE("height_at reproduces a plane") {
  const ElevationMap m = plane_map(0.1, 0.0);
  // Heights are stored as float, so agreement is at float precision.
  CHECK(height_at(m, 3.0, 5.0) == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("height_at exact at cell centers of a random map") {
  Rng rng(5);
  ElevationMap m = constant_map(0.0, 8, 2.0);
  for (auto& h : m.heights) h = static_cast<float>(rng.uniform(-3, 3));
  for (std::uint32_t row = 0; row < 8; ++row) {
    for (std::uint32_t col = 0; col < 8; ++col) {
      const double x = m.origin_x + col * m.resolution;
      const double y = m.origin_y + row * m.resolution;
      CHECK(height_at(m, x, y) == static_cast<double>(m.at(row, col)));
    }
  }
}

TEST_CASE("height_at throws OutOfBounds outside the footprint") {
  const ElevationMap m = constant_map(0.0, 8, 1.0);
  CHECK_THROWS_WITH_AS(height_at(m, -0.5, 2.0),
                       doctest::Contains("OutOfBounds"), Error);
  CHECK_THROWS_AS(height_at(m, 2.0, 7.5), Error);
}

TEST_CASE("surface_normal of a flat map points up") {
  const ElevationMap m = constant_map(2.0);
  const Vec3 n = surface_normal(m, 10.0, 10.0);
  CHECK(n.x == doctest::Approx(0.0));
  CHECK(n.y == doctest::Approx(0.0));
  CHECK(n.z == doctest::Approx(1.0));
}

TEST_CASE("surface_normal of a 45 degree plane") {
  const ElevationMap m = plane_map(1.0, 0.0);
  const Vec3 n = surface_normal(m, 10.0, 10.0);
  CHECK(n.x == doctest::Approx(-std::sqrt(0.5)).epsilon(1e-9));
  CHECK(n.y == doctest::Approx(0.0));
  CHECK(n.z == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
}

TEST_CASE("surface_normal of a quadratic bowl matches the analytic gradient") {
  const std::uint32_t cells = 64;
  const double res = 0.25;
  ElevationMap m = constant_map(0.0, cells, res);
  m.origin_x = -8.0;
  m.origin_y = -8.0;
  for (std::uint32_t row = 0; row < cells; ++row) {
    for (std::uint32_t col = 0; col < cells; ++col) {
      const double x = m.origin_x + col * res;
      const double y = m.origin_y + row * res;
      m.heights[static_cast<std::size_t>(row) * cells + col] =
          static_cast<float>(0.05 * (x * x + y * y));
    }
  }
  // Analytic normal at (1, 0): gradient (0.1, 0).
  const Vec3 n = surface_normal(m, 1.0, 0.0);
  const Vec3 expected = normalized(Vec3{-0.1, 0.0, 1.0});
  CHECK((n - expected).norm() < 2.0 * res);
}

TEST_CASE("surface_normal is invariant to constant height offsets") {
  ElevationMap a = plane_map(0.3, -0.2);
  ElevationMap b = a;
  for (auto& h : b.heights) h += 12.5f;
  const Vec3 na = surface_normal(a, 9.0, 11.0);
  const Vec3 nb = surface_normal(b, 9.0, 11.0);
  CHECK((na - nb).norm() < 1e-6);
}

TEST_CASE("project_pose on flat ground keeps yaw, zero roll and pitch") {
  const ElevationMap m = constant_map(1.5);
  VehicleParams p;
  const ProjectedPose pose = project_pose(m, 15.0, 15.0, 0.7, p);
  CHECK(pose.yaw == doctest::Approx(0.7));
  CHECK(std::abs(pose.roll) < 1e-9);
  CHECK(std::abs(pose.pitch) < 1e-9);
  CHECK(pose.position.z == doctest::Approx(1.5 + p.ground_clearance));
}

TEST_CASE("project_pose pitch on an uphill plane is negative (nose up)") {
  const ElevationMap m = plane_map(std::tan(0.2), 0.0);
  VehicleParams p;
  const ProjectedPose pose = project_pose(m, 12.0, 12.0, 0.0, p);
  CHECK(pose.pitch == doctest::Approx(-0.2).epsilon(1e-3));
  CHECK(std::abs(pose.roll) < 1e-6);
}

TEST_CASE("project_pose rolls when driving across the slope") {
  const ElevationMap m = plane_map(std::tan(0.2), 0.0);
  VehicleParams p;
  const ProjectedPose pose = project_pose(m, 12.0, 12.0, kPi / 2.0, p);
  CHECK(std::abs(pose.roll) == doctest::Approx(0.2).epsilon(1e-3));
  CHECK(std::abs(pose.pitch) < 1e-6);
}

TEST_CASE("project_pose roll and pitch vanish on constant maps at any yaw") {
  const ElevationMap m = constant_map(-3.0);
  VehicleParams p;
  Rng rng(9);
  for (int i = 0; i < 25; ++i) {
    const double yaw = rng.uniform(-kPi, kPi);
    const ProjectedPose pose = project_pose(m, 16.0, 16.0, yaw, p);
    CHECK(std::abs(pose.roll) < 1e-9);
    CHECK(std::abs(pose.pitch) < 1e-9);
  }
}

TEST_CASE("extract_patch of a constant map is all zeros") {
  const ElevationMap m = constant_map(4.2);
  const TerrainPatch patch = extract_patch(m, 16.0, 16.0, 0.3, 5, 1.0);
  for (double h : patch.heights) CHECK(std::abs(h) < 1e-6);
}

TEST_CASE("extract_patch of a plane at yaw 0 gives columns -r 0 +r") {
  const ElevationMap m = plane_map(1.0, 0.0);
  const double r = 0.5;
  const TerrainPatch patch = extract_patch(m, 10.0, 10.0, 0.0, 3, r);
  for (int row = 0; row < 3; ++row) {
    CHECK(patch.heights[row * 3 + 0] == doctest::Approx(-r).epsilon(1e-6));
    CHECK(patch.heights[row * 3 + 1] == doctest::Approx(0.0));
    CHECK(patch.heights[row * 3 + 2] == doctest::Approx(r).epsilon(1e-6));
  }
}

TEST_CASE("extract_patch rotation matches a rotate-then-sample oracle") {
  const ElevationMap m = plane_map(1.0, 0.0);
  const double r = 0.5;
  const double yaw = kPi / 2.0;
  const TerrainPatch patch = extract_patch(m, 10.0, 10.0, yaw, 3, r);
  // Oracle: sample the map at explicitly rotated offsets.
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double xb = (j - 1) * r;
      const double yb = (i - 1) * r;
      const double wx = 10.0 + std::cos(yaw) * xb - std::sin(yaw) * yb;
      const double wy = 10.0 + std::sin(yaw) * xb + std::cos(yaw) * yb;
      const double expected = height_at(m, wx, wy) - height_at(m, 10.0, 10.0);
      CHECK(patch.heights[i * 3 + j] ==
            doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("extract_patch is invariant to constant map offsets") {
  Rng rng(21);
  ElevationMap a = constant_map(0.0, 32, 1.0);
  for (auto& h : a.heights) h = static_cast<float>(rng.uniform(-1, 1));
  ElevationMap b = a;
  for (auto& h : b.heights) h += 7.0f;
  const TerrainPatch pa = extract_patch(a, 16.0, 16.0, 0.4, 7, 1.0);
  const TerrainPatch pb = extract_patch(b, 16.0, 16.0, 0.4, 7, 1.0);
  for (std::size_t i = 0; i < pa.heights.size(); ++i) {
    CHECK(pa.heights[i] == doctest::Approx(pb.heights[i]).epsilon(1e-5));
  }
}

TEST_CASE("extract_patch rejects even sizes and out-of-map footprints") {
  const ElevationMap m = constant_map(0.0, 16, 1.0);
  CHECK_THROWS_AS(extract_patch(m, 8.0, 8.0, 0.0, 4, 1.0), Error);
  CHECK_THROWS_AS(extract_patch(m, 1.0, 1.0, 0.0, 9, 1.0), Error);
}

TEST_CASE("binary map file round-trips bitwise") {
  Rng rng(33);
  ElevationMap m = constant_map(0.0, 24, 0.5);
  m.origin_x = -3.25;
  m.origin_y = 11.5;
  for (auto& h : m.heights) h = static_cast<float>(rng.uniform(-10, 10));
  const auto path = std::filesystem::temp_directory_path() / "ovd_map.bin";
  save_map(m, path.string());
  const ElevationMap r = load_map(path.string());
  CHECK(r.origin_x == m.origin_x);
  CHECK(r.origin_y == m.origin_y);
  CHECK(r.resolution == m.resolution);
  CHECK(r.width == m.width);
  CHECK(r.height == m.height);
  CHECK(r.heights == m.heights);  // exact float equality
  std::filesystem::remove(path);
}

TEST_CASE("ascii map variant loads through the same entry point") {
  ElevationMap m = constant_map(1.25, 4, 2.0);
  const auto path = std::filesystem::temp_directory_path() / "ovd_map.txt";
  save_map_ascii(m, path.string());
  const ElevationMap r = load_map(path.string());
  CHECK(r.width == 4);
  CHECK(r.resolution == 2.0);
  CHECK(r.heights == m.heights);
  std::filesystem::remove(path);
}
