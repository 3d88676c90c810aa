#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "istsim/bitstring.hpp"
#include "istsim/geometry.hpp"
#include "istsim/rng.hpp"

namespace istsim {

// Global model constants. N is the lattice size, delta the resolution bound
// (chord distance) separating exact from experimentally-selected settings.
struct ModelParams {
  int N = 1024;
  double delta = 0.02;
  int azimuth_steps = 0;  // 0 means "use N"
  std::uint64_t seed = 1;

  // N even >= 4, delta in (0, 0.2], azimuth_steps >= 0.
  void validate() const;
  // N * delta >= 8: Δ-caps away from the poles always meet a lattice ring.
  bool is_feasible() const { return N * delta >= 8.0; }
  void require_feasible() const;

  LatticeSize lattice() const { return LatticeSize(N); }
  int azimuth() const { return azimuth_steps > 0 ? azimuth_steps : N; }
  bool operator==(const ModelParams&) const = default;
};

// Experimenter's initial (constant over runs) and final (per-run) choice.
struct ExperimenterChoice {
  UnitVector initial_selected;
  UnitVector final_selected;
};

struct HiddenVariableSingle {
  UnitVector P_exact;
  UnitVector M_exact;
  TrajectoryIndex k;
};

// The singlet state is fixed and carries no per-run data.
struct HiddenVariableBell {
  UnitVector M1_exact;
  UnitVector M2_exact;
  TrajectoryIndex k;
};

// An exact setting on a lattice ring about its partner. `azimuth_index`
// together with lattice_point.n identifies the point exactly.
struct ExactSettingPair {
  UnitVector exact;
  RationalCosine lattice_point;
  int azimuth_index = 0;

  int n() const { return lattice_point.n; }
  bool operator==(const ExactSettingPair&) const = default;
};

// Final exact orientation produced by the orienting mechanism: the rotation
// designed to carry the selected initial orientation onto the selected final
// one, applied to the exact initial orientation. It is an isometry, so
// |result - final_selected| == |initial_exact - initial_selected|.
UnitVector mechanism(const UnitVector& initial_exact, const UnitVector& initial_selected,
                     const UnitVector& final_selected);

// Initial exact orientation that the mechanism maps onto `final_exact`.
UnitVector mechanism_inverse(const UnitVector& final_exact, const UnitVector& initial_selected,
                             const UnitVector& final_selected);

// P ~ uniform on the Δ-cap around the initial selected orientation.
UnitVector sample_preparation_hv(const ExperimenterChoice& choice, const ModelParams& params,
                                 Engine& rng, const std::optional<CapBias>& bias = std::nullopt);

// Lattice rings of constant partner·B intersected with the Δ-cap around
// final_selected, each ring discretized at params.azimuth() points. Azimuths
// are measured from `azimuth_reference` projected orthogonal to the partner
// (a fixed global frame when absent). Ordered by (n, azimuth index).
// Throws InfeasibilityError when the intersection is empty.
std::vector<ExactSettingPair> admissible_exact_settings(
    const UnitVector& partner_exact, const UnitVector& final_selected, const ModelParams& params,
    LatticeKind kind, const std::optional<UnitVector>& azimuth_reference = std::nullopt);

// Uniform pick from the admissible list; returns (M_i, pair) with
// M_i = mechanism_inverse(B_i, m, b).
std::pair<UnitVector, ExactSettingPair> sample_measurement_hv(
    const std::vector<ExactSettingPair>& admissible, const ExperimenterChoice& choice,
    Engine& rng);

TrajectoryIndex sample_k(LatticeSize size, Engine& rng);

// Tolerance used when deciding whether a floating dot product or phase sits
// on the exact lattice.
inline constexpr double kSnapTolerance = 1e-9;

struct LatticeSnap {
  RationalCosine point;
  double residual = 0.0;
  bool on_lattice = false;
};
LatticeSnap snap_cosine(double cosine, LatticeSize size, LatticeKind kind);

}  // namespace istsim
