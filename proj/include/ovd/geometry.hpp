// Small fixed-size geometry types shared by every module: 3-vectors,
// unit quaternions (world<-body), ZYX intrinsic Euler angles.
// Header-only; all operations are pure.

#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace ovd {

inline constexpr double kPi = std::numbers::pi;

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double squared_norm() const { return x * x + y * y + z * z; }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}
inline Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}
inline Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(double s, const Vec3& v) {
  return {s * v.x, s * v.y, s * v.z};
}
inline Vec3 operator*(const Vec3& v, double s) { return s * v; }
inline Vec3 operator/(const Vec3& v, double s) {
  return {v.x / s, v.y / s, v.z / s};
}
inline Vec3& operator+=(Vec3& a, const Vec3& b) {
  a.x += b.x;
  a.y += b.y;
  a.z += b.z;
  return a;
}

inline double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z,
          a.x * b.y - a.y * b.x};
}
inline Vec3 normalized(const Vec3& v) {
  const double n = v.norm();
  return n > 0.0 ? v / n : Vec3{};
}

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r <= 0.0) r += 2.0 * kPi;
  return r - kPi;
}

/// ZYX intrinsic (yaw-pitch-roll) Euler angles, radians, z-up body frame.
/// Positive pitch is nose-down under this convention.
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

/// Unit quaternion, Hamilton convention, rotates body-frame vectors into the
/// world frame.
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quat conjugate() const { return {w, -x, -y, -z}; }
  bool finite() const {
    return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) &&
           std::isfinite(z);
  }
};

inline Quat operator*(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline Quat normalized(const Quat& q) {
  const double n = q.norm();
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

/// Rotate a body-frame vector into the world frame.
inline Vec3 rotate(const Quat& q, const Vec3& v) {
  const Vec3 u{q.x, q.y, q.z};
  const Vec3 t = 2.0 * cross(u, v);
  return v + q.w * t + cross(u, t);
}

/// Rotate a world-frame vector into the body frame.
inline Vec3 rotate_inverse(const Quat& q, const Vec3& v) {
  return rotate(q.conjugate(), v);
}

/// Compose R_z(yaw) * R_y(pitch) * R_x(roll) as a quaternion.
inline Quat quat_from_euler(const EulerAngles& e) {
  const double cr = std::cos(e.roll * 0.5), sr = std::sin(e.roll * 0.5);
  const double cp = std::cos(e.pitch * 0.5), sp = std::sin(e.pitch * 0.5);
  const double cy = std::cos(e.yaw * 0.5), sy = std::sin(e.yaw * 0.5);
  return {cr * cp * cy + sr * sp * sy, sr * cp * cy - cr * sp * sy,
          cr * sp * cy + sr * cp * sy, cr * cp * sy - sr * sp * cy};
}

/// Recover ZYX Euler angles; pitch is clamped at the asin boundary.
inline EulerAngles euler_from_quat(const Quat& q) {
  EulerAngles e;
  e.roll = std::atan2(2.0 * (q.w * q.x + q.y * q.z),
                      1.0 - 2.0 * (q.x * q.x + q.y * q.y));
  double s = 2.0 * (q.w * q.y - q.z * q.x);
  s = std::clamp(s, -1.0, 1.0);
  e.pitch = std::asin(s);
  e.yaw = std::atan2(2.0 * (q.w * q.z + q.x * q.y),
                     1.0 - 2.0 * (q.y * q.y + q.z * q.z));
  return e;
}

/// Exponential map of a rotation vector (axis * angle) to a quaternion.
inline Quat quat_exp(const Vec3& u) {
  const double angle = u.norm();
  if (angle < 1e-12) {
    return normalized(Quat{1.0, 0.5 * u.x, 0.5 * u.y, 0.5 * u.z});
  }
  const double half = 0.5 * angle;
  const double k = std::sin(half) / angle;
  return {std::cos(half), k * u.x, k * u.y, k * u.z};
}

/// Log map of a unit quaternion to a rotation vector (shortest arc).
inline Vec3 quat_log(const Quat& q_in) {
  Quat q = q_in.w < 0.0 ? Quat{-q_in.w, -q_in.x, -q_in.y, -q_in.z} : q_in;
  const Vec3 v{q.x, q.y, q.z};
  const double vn = v.norm();
  if (vn < 1e-12) return 2.0 * v;
  const double angle = 2.0 * std::atan2(vn, q.w);
  return (angle / vn) * v;
}

/// Advance an orientation by body-frame angular velocity over dt
/// (right-multiplied exponential map). Returns a unit quaternion.
inline Quat integrate_orientation(const Quat& q, const Vec3& omega_body,
                                  double dt) {
  return normalized(q * quat_exp(dt * omega_body));
}

}  // namespace ovd
