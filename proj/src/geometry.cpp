#include "istsim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "istsim/errors.hpp"

namespace istsim {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Vector3d checked_normalize(const Eigen::Vector3d& v) {
  const double norm = v.norm();
  if (!(norm > 1e-300) || !std::isfinite(norm)) {
    throw DegeneracyError("cannot normalize a zero or non-finite vector");
  }
  return v / norm;
}

}  // namespace

UnitVector::UnitVector(double x, double y, double z)
    : v_(checked_normalize(Eigen::Vector3d(x, y, z))) {}

UnitVector::UnitVector(const Eigen::Vector3d& v) : v_(checked_normalize(v)) {}

UnitVector UnitVector::in_plane_degrees(double degrees) {
  const double r = degrees * kPi / 180.0;
  return UnitVector(std::sin(r), 0.0, std::cos(r));
}

double UnitVector::angle(const UnitVector& o) const {
  return std::atan2(v_.cross(o.v_).norm(), v_.dot(o.v_));
}

std::string to_string(LatticeKind kind) {
  return kind == LatticeKind::single ? "single" : "bell";
}

LatticeSize::LatticeSize(int n) : n_(n) {
  if (n < 4) {
    throw ParameterError("N must be at least 4 (got " + std::to_string(n) + ")");
  }
  if (n % 2 != 0) {
    throw ParameterError("N must be even (got " + std::to_string(n) + ")");
  }
}

RationalCosine RationalCosine::at(LatticeSize size, int n, LatticeKind kind) {
  if (n < 1 || n > size.half()) {
    throw ParameterError("lattice index n=" + std::to_string(n) + " outside {1.." +
                         std::to_string(size.half()) + "}");
  }
  const std::int64_t N = size.value();
  RationalCosine r;
  r.denominator = N;
  r.n = n;
  r.kind = kind;
  r.numerator = kind == LatticeKind::single ? N - 2 * (2 * std::int64_t{n} - 1)
                                            : N - 4 * std::int64_t{n};
  return r;
}

std::vector<RationalCosine> allowed_cosines(LatticeSize size, LatticeKind kind) {
  std::vector<RationalCosine> out;
  out.reserve(static_cast<std::size_t>(size.half()));
  for (int n = 1; n <= size.half(); ++n) out.push_back(RationalCosine::at(size, n, kind));
  return out;
}

RationalCosine nearest_allowed(double target_cos, LatticeSize size, LatticeKind kind) {
  const double N = size.value();
  // Continuous lattice index for the target, then compare its neighbours.
  const double continuous = kind == LatticeKind::single ? ((1.0 - target_cos) * N / 2.0 + 1.0) / 2.0
                                                        : (1.0 - target_cos) * N / 4.0;
  const double clamped = std::clamp(continuous, 1.0, static_cast<double>(size.half()));
  const int lo = static_cast<int>(std::floor(clamped));
  const int hi = std::min(lo + 1, size.half());

  const double scaled = target_cos * N;
  RationalCosine best = RationalCosine::at(size, lo, kind);
  double best_dist = std::abs(static_cast<double>(best.numerator) - scaled);
  for (int n = lo + 1; n <= hi; ++n) {
    RationalCosine cand = RationalCosine::at(size, n, kind);
    const double dist = std::abs(static_cast<double>(cand.numerator) - scaled);
    if (dist <= best_dist) {
      best = cand;
      best_dist = dist;
    }
  }
  return best;
}

double PhaseIndex::radians() const { return 2.0 * kPi * l / N; }

PhaseSnap snap_phase(double angle, LatticeSize size) {
  const int N = size.value();
  const double two_pi = 2.0 * kPi;
  double wrapped = std::fmod(angle, two_pi);
  if (wrapped < 0) wrapped += two_pi;
  long l = std::lround(wrapped * N / two_pi);
  PhaseSnap snap;
  snap.phase = PhaseIndex{static_cast<int>(l % N), N};
  snap.residual = std::abs(wrapped - two_pi * static_cast<double>(l) / N);
  return snap;
}

bool niven_rational_cosine(std::int64_t p, std::int64_t q) {
  if (q <= 0) {
    throw ParameterError("niven_rational_cosine: q must be positive (got " +
                         std::to_string(q) + ")");
  }
  // cos(p*pi/q) depends only on the reduced fraction; with reduced
  // denominator d the value is +-1 (d=1), 0 (d=2), +-1/2 (d=3), otherwise
  // irrational.
  const std::int64_t g = std::gcd(p < 0 ? -p : p, q);
  const std::int64_t d = q / g;
  return d == 1 || d == 2 || d == 3;
}

double SphericalTriangle::law_of_cosines_residual() const {
  const double sin_a = B.vec().cross(C.vec()).norm();
  const double sin_b = A.vec().cross(C.vec()).norm();
  const double sin_c = A.vec().cross(B.vec()).norm();
  const double ra = std::abs(cos_a - (cos_b * cos_c + sin_b * sin_c * std::cos(alpha)));
  const double rb = std::abs(cos_b - (cos_a * cos_c + sin_a * sin_c * std::cos(beta)));
  const double rc = std::abs(cos_c - (cos_a * cos_b + sin_a * sin_b * std::cos(gamma)));
  return std::max({ra, rb, rc});
}

double vertex_angle(const UnitVector& vertex, const UnitVector& p, const UnitVector& q) {
  const Eigen::Vector3d& v = vertex.vec();
  const Eigen::Vector3d tp = p.vec() - p.dot(vertex) * v;
  const Eigen::Vector3d tq = q.vec() - q.dot(vertex) * v;
  return std::atan2(tp.cross(tq).norm(), tp.dot(tq));
}

SphericalTriangle build_triangle(const UnitVector& A, const UnitVector& B,
                                 const UnitVector& C) {
  auto check = [](const UnitVector& u, const UnitVector& v, const char* name) {
    if (u.chord(v) < kDegeneracyTolerance) {
      throw DegeneracyError(std::string("degenerate triangle: vertices ") + name +
                            " coincide");
    }
    if (u.chord(-v) < kDegeneracyTolerance) {
      throw DegeneracyError(std::string("degenerate triangle: vertices ") + name +
                            " are antipodal");
    }
  };
  check(A, B, "A,B");
  check(B, C, "B,C");
  check(A, C, "A,C");

  SphericalTriangle t{A, B, C};
  t.cos_a = B.dot(C);
  t.cos_b = A.dot(C);
  t.cos_c = A.dot(B);
  t.alpha = vertex_angle(A, B, C);
  t.beta = vertex_angle(B, A, C);
  t.gamma = vertex_angle(C, A, B);
  return t;
}

Rotation Rotation::between(const UnitVector& from, const UnitVector& to) {
  if (from.chord(-to) < kDegeneracyTolerance) {
    throw DegeneracyError("rotation between antipodal vectors is not unique");
  }
  return Rotation(Eigen::Quaterniond::FromTwoVectors(from.vec(), to.vec()));
}

UnitVector Rotation::apply(const UnitVector& v) const { return UnitVector(q_ * v.vec()); }

double Rotation::angle() const { return Eigen::AngleAxisd(q_).angle(); }

TangentFrame tangent_frame(const UnitVector& axis, const std::optional<UnitVector>& reference) {
  const Eigen::Vector3d& n = axis.vec();
  auto project = [&n](const Eigen::Vector3d& r) { return Eigen::Vector3d(r - r.dot(n) * n); };

  Eigen::Vector3d e1 = Eigen::Vector3d::Zero();
  if (reference) {
    e1 = project(reference->vec());
  }
  if (e1.norm() < 1e-6) {
    // Fixed global reference, switching away from z near the poles.
    const Eigen::Vector3d ref =
        std::abs(n.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
    e1 = project(ref);
  }
  e1.normalize();
  return TangentFrame{e1, n.cross(e1)};
}

UnitVector point_on_ring(const UnitVector& axis, const TangentFrame& frame, double cos_polar,
                         double phi) {
  const double sin_polar = std::sqrt(std::max(0.0, 1.0 - cos_polar * cos_polar));
  return UnitVector(cos_polar * axis.vec() +
                    sin_polar * (std::cos(phi) * frame.e1 + std::sin(phi) * frame.e2));
}

double cap_angular_radius(double chord) { return 2.0 * std::asin(std::min(1.0, chord / 2.0)); }

UnitVector sample_cap(const UnitVector& center, double chord_radius, Engine& rng,
                      const std::optional<CapBias>& bias) {
  if (!(chord_radius > 0.0) || chord_radius > std::sqrt(2.0) + 1e-12) {
    std::ostringstream msg;
    msg << "sample_cap: chord radius must lie in (0, sqrt(2)], got " << chord_radius;
    throw ParameterError(msg.str());
  }
  if (bias && bias->weight < 0.0) {
    throw ParameterError("sample_cap: bias weight must be non-negative");
  }
  const TangentFrame frame = tangent_frame(center);
  // Uniform area measure: cos(polar) uniform on (1 - r^2/2, 1].
  const double height = chord_radius * chord_radius / 2.0;
  // Rejection against the largest density on the cap keeps acceptance O(1).
  double peak = 1.0;
  if (bias && bias->weight != 0.0) {
    const double psi = std::acos(std::max(-1.0, 1.0 - height));
    peak = std::cos(std::max(0.0, center.angle(bias->toward) - psi));
  }
  for (;;) {
    const double cos_polar = 1.0 - uniform01(rng) * height;
    const double phi = 2.0 * kPi * uniform01(rng);
    UnitVector v = point_on_ring(center, frame, cos_polar, phi);
    if (!(v.chord(center) < chord_radius)) continue;
    if (bias && bias->weight != 0.0) {
      const double accept = std::exp(bias->weight * (v.dot(bias->toward) - peak));
      if (uniform01(rng) >= accept) continue;
    }
    return v;
  }
}

}  // namespace istsim
