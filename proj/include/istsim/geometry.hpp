#pragma once

#include <Eigen/Geometry>

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "istsim/rng.hpp"

namespace istsim {

// Chord distance below which two unit vectors count as coincident/antipodal.
inline constexpr double kDegeneracyTolerance = 1e-9;

class UnitVector {
 public:
  UnitVector() : v_(0.0, 0.0, 1.0) {}
  // Renormalizes; throws DegeneracyError for a (near) zero vector.
  UnitVector(double x, double y, double z);
  explicit UnitVector(const Eigen::Vector3d& v);

  // Coplanar convention used by configs: angle in degrees from +z towards +x.
  static UnitVector in_plane_degrees(double degrees);

  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }
  const Eigen::Vector3d& vec() const { return v_; }

  double dot(const UnitVector& o) const { return v_.dot(o.v_); }
  double chord(const UnitVector& o) const { return (v_ - o.v_).norm(); }
  // Angle in [0, pi], accurate near 0 and pi.
  double angle(const UnitVector& o) const;
  UnitVector operator-() const { return UnitVector(-v_); }

  bool operator==(const UnitVector& o) const { return v_ == o.v_; }

 private:
  Eigen::Vector3d v_;
};

enum class LatticeKind { single, bell };

std::string to_string(LatticeKind kind);

// Even lattice size N >= 4.
class LatticeSize {
 public:
  explicit LatticeSize(int n);
  int value() const { return n_; }
  int half() const { return n_ / 2; }

 private:
  int n_;
};

// Exact lattice cosine numerator/N.
//   single: 1 - (2n-1)/(N/2)  ->  numerator = N - 2(2n-1)
//   bell:   1 - 4n/N          ->  numerator = N - 4n
struct RationalCosine {
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;
  int n = 0;
  LatticeKind kind = LatticeKind::single;

  static RationalCosine at(LatticeSize size, int n, LatticeKind kind);

  double value() const {
    return static_cast<double>(numerator) / static_cast<double>(denominator);
  }
  // Exact comparison of values (cross multiplication).
  bool same_value(const RationalCosine& o) const {
    return numerator * o.denominator == o.numerator * denominator;
  }
  bool operator==(const RationalCosine&) const = default;
};

// The N/2 allowed cosines, strictly decreasing (n ascending).
std::vector<RationalCosine> allowed_cosines(LatticeSize size, LatticeKind kind);

// Lattice value closest to target; ties go to the larger n.
RationalCosine nearest_allowed(double target_cos, LatticeSize size, LatticeKind kind);

// Phase angle 2*pi*l/N.
struct PhaseIndex {
  int l = 0;
  int N = 0;
  double radians() const;
};

struct PhaseSnap {
  PhaseIndex phase;
  double residual = 0.0;  // |angle - 2*pi*l/N|
};
PhaseSnap snap_phase(double angle, LatticeSize size);

// True iff cos(p*pi/q) is rational, i.e. lies in {0, +-1/2, +-1}.
bool niven_rational_cosine(std::int64_t p, std::int64_t q);

struct SphericalTriangle {
  UnitVector A, B, C;
  // Side cosines: a is opposite A (B.C), b opposite B (A.C), c opposite C (A.B).
  double cos_a = 0.0, cos_b = 0.0, cos_c = 0.0;
  // Vertex angles at A, B, C in radians.
  double alpha = 0.0, beta = 0.0, gamma = 0.0;

  // Largest spherical law-of-cosines residual over the three vertices.
  double law_of_cosines_residual() const;
};

SphericalTriangle build_triangle(const UnitVector& A, const UnitVector& B,
                                 const UnitVector& C);

// Angle at `vertex` between the great-circle arcs to `p` and `q`.
double vertex_angle(const UnitVector& vertex, const UnitVector& p,
                    const UnitVector& q);

// Minimal-angle rotation taking `from` onto `to`.
class Rotation {
 public:
  static Rotation between(const UnitVector& from, const UnitVector& to);

  UnitVector apply(const UnitVector& v) const;
  Rotation inverse() const { return Rotation(q_.conjugate()); }
  double angle() const;

 private:
  explicit Rotation(const Eigen::Quaterniond& q) : q_(q) {}
  Eigen::Quaterniond q_;
};

// Orthonormal (e1, e2) spanning the plane orthogonal to `axis`. e1 follows
// the projection of `reference` when given and not parallel to the axis,
// otherwise a fixed global direction.
struct TangentFrame {
  Eigen::Vector3d e1, e2;
};
TangentFrame tangent_frame(const UnitVector& axis,
                           const std::optional<UnitVector>& reference = std::nullopt);

// Point at polar angle (via cos/sin) and azimuth phi about `axis`.
UnitVector point_on_ring(const UnitVector& axis, const TangentFrame& frame,
                         double cos_polar, double phi);

// Angular radius of the cap {v : |v - center| < chord}.
double cap_angular_radius(double chord);

// Optional tilt of the cap density towards `toward`; density ∝
// exp(weight * (v.toward - 1)). weight == 0 is uniform.
struct CapBias {
  UnitVector toward;
  double weight = 0.0;
};

UnitVector sample_cap(const UnitVector& center, double chord_radius, Engine& rng,
                      const std::optional<CapBias>& bias = std::nullopt);

}  // namespace istsim
