#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace evobj {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3() = default;
  Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }

  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }
  Vec3 normalized() const { return *this / norm(); }
};

inline double dist2(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

inline double dist(const Vec3& a, const Vec3& b) { return std::sqrt(dist2(a, b)); }

// All errors thrown by the library derive from std::runtime_error so the CLI
// can map them to exit codes in one place.
struct InvalidArgument : std::runtime_error {
  explicit InvalidArgument(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateInput : std::runtime_error {
  explicit DegenerateInput(const std::string& msg) : std::runtime_error(msg) {}
};

struct CandidateTooSmall : std::runtime_error {
  explicit CandidateTooSmall(const std::string& msg) : std::runtime_error(msg) {}
};

struct NotFound : std::runtime_error {
  explicit NotFound(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace evobj
