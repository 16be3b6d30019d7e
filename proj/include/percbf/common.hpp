#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace percbf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Vector2 = Eigen::Vector2d;

// Error hierarchy. Everything the library throws derives from Error so the CLI
// can report any failure with a single catch.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct EmptyBufferError : Error {
  using Error::Error;
};

struct ZeroPriorityError : Error {
  using Error::Error;
};

struct IndexError : Error {
  using Error::Error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct NonFiniteError : Error {
  using Error::Error;
};

struct DegenerateConstraint : Error {
  using Error::Error;
};

struct GeometryError : Error {
  using Error::Error;
};

struct CheckpointMismatch : Error {
  using Error::Error;
};

using Rng = std::mt19937_64;

// Uniform double in [0, 1) built from the top 53 bits, so streams are
// identical across standard library implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double pi = 3.14159265358979323846;
  double w = std::fmod(a + pi, 2.0 * pi);
  if (w < 0.0) w += 2.0 * pi;
  w -= pi;
  if (w <= -pi) w += 2.0 * pi;
  return w;
}

}  // namespace percbf
