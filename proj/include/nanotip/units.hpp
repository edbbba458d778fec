#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace nanotip {

// Internal unit system: lengths in micrometres, time as c*t in micrometres,
// eps0 = mu0 = c = 1. Field amplitudes are in arbitrary source units since
// every reported quantity is a power ratio.
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLightUmPerFs = 0.299792458;

inline constexpr double fs_to_internal(double fs) { return fs * kSpeedOfLightUmPerFs; }
inline constexpr double internal_to_fs(double t) { return t / kSpeedOfLightUmPerFs; }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int a) const { return a == 0 ? x : (a == 1 ? y : z); }
  constexpr double& operator[](int a) { return a == 0 ? x : (a == 1 ? y : z); }

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend constexpr bool operator==(Vec3, Vec3) = default;
};

inline double norm(Vec3 v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }

enum class Axis : int { x = 0, y = 1, z = 2 };

inline constexpr int index_of(Axis a) { return static_cast<int>(a); }

}  // namespace nanotip
