#include "istsim/ontology.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "istsim/errors.hpp"

namespace istsim {

namespace {
constexpr double kPi = std::numbers::pi;
}

void ModelParams::validate() const {
  LatticeSize{N};
  if (!(delta > 0.0) || delta > 0.2) {
    std::ostringstream msg;
    msg << "delta must lie in (0, 0.2] (got " << delta << ")";
    throw ParameterError(msg.str());
  }
  if (azimuth_steps < 0) throw ParameterError("azimuth_steps must be non-negative");
}

void ModelParams::require_feasible() const {
  validate();
  if (!is_feasible()) {
    std::ostringstream msg;
    msg << "infeasible parameters: N*delta = " << N * delta << " < 8 (N=" << N
        << ", delta=" << delta << ")";
    throw ParameterError(msg.str());
  }
}

UnitVector mechanism(const UnitVector& initial_exact, const UnitVector& initial_selected,
                     const UnitVector& final_selected) {
  if (initial_selected.chord(-final_selected) < kDegeneracyTolerance) {
    throw DomainError("mechanism: selected initial and final orientations are antipodal");
  }
  if (initial_exact == initial_selected) return final_selected;
  return Rotation::between(initial_selected, final_selected).apply(initial_exact);
}

UnitVector mechanism_inverse(const UnitVector& final_exact, const UnitVector& initial_selected,
                             const UnitVector& final_selected) {
  if (initial_selected.chord(-final_selected) < kDegeneracyTolerance) {
    throw DomainError("mechanism_inverse: selected initial and final orientations are antipodal");
  }
  if (final_exact == final_selected) return initial_selected;
  return Rotation::between(initial_selected, final_selected).inverse().apply(final_exact);
}

UnitVector sample_preparation_hv(const ExperimenterChoice& choice, const ModelParams& params,
                                 Engine& rng, const std::optional<CapBias>& bias) {
  return sample_cap(choice.initial_selected, params.delta, rng, bias);
}

std::vector<ExactSettingPair> admissible_exact_settings(
    const UnitVector& partner_exact, const UnitVector& final_selected, const ModelParams& params,
    LatticeKind kind, const std::optional<UnitVector>& azimuth_reference) {
  params.require_feasible();
  const LatticeSize size = params.lattice();
  const int steps = params.azimuth();
  const double step = 2.0 * kPi / steps;

  const double cap = cap_angular_radius(params.delta);
  const double centre_polar = partner_exact.angle(final_selected);
  const double cos_centre = partner_exact.dot(final_selected);
  const double sin_centre = std::sin(centre_polar);
  // Point v is in the cap iff v.b > kappa (strict chord < delta).
  const double kappa = 1.0 - params.delta * params.delta / 2.0;

  const TangentFrame frame = tangent_frame(partner_exact, azimuth_reference);
  const Eigen::Vector3d& b = final_selected.vec();
  const double centre_phi = std::atan2(b.dot(frame.e2), b.dot(frame.e1));

  // Rings whose polar angle lies in (centre - cap, centre + cap); one index of
  // slack on each side, the exact chord test below decides.
  const double cos_hi = std::cos(std::max(0.0, centre_polar - cap));
  const double cos_lo = std::cos(std::min(kPi, centre_polar + cap));
  const int n_first = std::max(1, nearest_allowed(cos_hi, size, kind).n - 1);
  const int n_last = std::min(size.half(), nearest_allowed(cos_lo, size, kind).n + 1);

  std::vector<ExactSettingPair> out;
  double nearest_gap = kPi;
  for (int n = n_first; n <= n_last; ++n) {
    const RationalCosine point = RationalCosine::at(size, n, kind);
    const double c = point.value();
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    nearest_gap = std::min(nearest_gap, std::abs(std::acos(c) - centre_polar) - cap);

    auto consider = [&](int j) {
      const UnitVector v = point_on_ring(partner_exact, frame, c, step * j);
      if (v.chord(final_selected) < params.delta) out.push_back(ExactSettingPair{v, point, j});
    };

    if (s == 0.0) {  // degenerate ring: the antipode (bell n = N/2)
      consider(0);
      continue;
    }
    const double denom = s * sin_centre;
    if (denom < 1e-15) {
      if (c * cos_centre > kappa) {
        for (int j = 0; j < steps; ++j) consider(j);
      }
      continue;
    }
    const double t = (kappa - c * cos_centre) / denom;
    if (t >= 1.0) continue;
    if (t <= -1.0) {
      for (int j = 0; j < steps; ++j) consider(j);
      continue;
    }
    const double half_width = std::acos(t);
    const long j_lo = static_cast<long>(std::floor((centre_phi - half_width) / step));
    const long j_hi = static_cast<long>(std::ceil((centre_phi + half_width) / step));
    if (j_hi - j_lo + 1 >= steps) {
      for (int j = 0; j < steps; ++j) consider(j);
      continue;
    }
    std::vector<int> js;
    for (long j = j_lo; j <= j_hi; ++j) {
      js.push_back(static_cast<int>(((j % steps) + steps) % steps));
    }
    std::sort(js.begin(), js.end());
    for (int j : js) consider(j);
  }

  if (out.empty()) {
    std::ostringstream msg;
    msg << "no admissible exact setting (" << to_string(kind) << " lattice) within the cap: N="
        << params.N << ", delta=" << params.delta << ", angular gap to nearest ring="
        << std::max(0.0, nearest_gap) << " rad";
    throw InfeasibilityError(msg.str());
  }
  return out;
}

std::pair<UnitVector, ExactSettingPair> sample_measurement_hv(
    const std::vector<ExactSettingPair>& admissible, const ExperimenterChoice& choice,
    Engine& rng) {
  if (admissible.empty()) throw InfeasibilityError("empty admissible setting list");
  const ExactSettingPair& pick = admissible[uniform_index(rng, admissible.size())];
  return {mechanism_inverse(pick.exact, choice.initial_selected, choice.final_selected), pick};
}

TrajectoryIndex sample_k(LatticeSize size, Engine& rng) {
  return TrajectoryIndex{static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(size.value()))) + 1};
}

LatticeSnap snap_cosine(double cosine, LatticeSize size, LatticeKind kind) {
  LatticeSnap snap;
  snap.point = nearest_allowed(cosine, size, kind);
  snap.residual = std::abs(cosine - snap.point.value());
  snap.on_lattice = snap.residual <= kSnapTolerance;
  return snap;
}

}  // namespace istsim
