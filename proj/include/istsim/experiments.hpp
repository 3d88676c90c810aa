#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "istsim/bitstring.hpp"
#include "istsim/geometry.hpp"
#include "istsim/ontology.hpp"

namespace istsim {

// ---------------------------------------------------------------------------
// Single particle: preparation along a, measurement along b.

struct SingleChoices {
  ExperimenterChoice preparation;  // p (initial), a (final)
  ExperimenterChoice measurement;  // m (initial), b (final)
  std::optional<CapBias> preparation_bias;
};

struct SingleRunRecord {
  std::uint64_t run_index = 0;
  HiddenVariableSingle hidden;
  UnitVector A_exact;
  ExactSettingPair B;  // lattice_point is A_exact·B on the single lattice
  BitStringSingle bits;
  int outcome = 0;

  // Stored outcome equals the bit string re-evaluated at k.
  bool self_consistent() const { return bits.outcome(hidden.k) == outcome; }
};

SingleRunRecord run_single_once(const ModelParams& params, const SingleChoices& choices,
                                Engine& rng, std::uint64_t run_index = 0);

// ---------------------------------------------------------------------------
// Bell scenario: wing 1 (m1, b) is measured before wing 2 (m2, c).

struct BellChoices {
  ExperimenterChoice wing1;  // m1, b
  ExperimenterChoice wing2;  // m2, c
};

struct BellRunRecord {
  std::uint64_t run_index = 0;
  HiddenVariableBell hidden;
  UnitVector B_exact;
  ExactSettingPair C;  // lattice_point is B_exact·C on the bell lattice
  BitStringSinglet bits;
  int outcome1 = 0;
  int outcome2 = 0;

  bool self_consistent() const {
    return bits.outcome_pair(hidden.k) == std::pair<int, int>{outcome1, outcome2};
  }
};

BellRunRecord run_bell_once(const ModelParams& params, const BellChoices& choices, Engine& rng,
                            std::uint64_t run_index = 0);

// ---------------------------------------------------------------------------
// Ensembles. Run r draws from its own stream make_engine(seed, r), so
// results do not depend on the number of worker threads. Partial
// statistics are merged in a fixed chunk order.

struct EnsembleStats {
  std::uint64_t runs = 0;
  std::int64_t product_sum = 0;  // Σ outcome products (single: Σ outcome)
  std::int64_t first_sum = 0;    // Σ O1 (bell only)
  std::int64_t second_sum = 0;   // Σ O2 (bell only)
  double exact_dot_sum = 0.0;    // Σ first_exact·second_exact
  Eigen::Vector3d first_setting_sum = Eigen::Vector3d::Zero();   // Σ A (or B)
  Eigen::Vector3d second_setting_sum = Eigen::Vector3d::Zero();  // Σ B (or C)
  Eigen::Vector3d initial_sum = Eigen::Vector3d::Zero();         // Σ P (or M1)
  double quantum_E = 0.0;
  int sign = 1;  // +1 single (a'.b'), -1 bell (-b'.c')

  EnsembleStats& merge(const EnsembleStats& other);

  double E_hat() const;
  double sigma() const;
  double first_marginal() const;
  double second_marginal() const;
  double mean_exact_dot() const;
  Eigen::Vector3d first_prime() const;
  Eigen::Vector3d second_prime() const;
  Eigen::Vector3d initial_prime() const;
  // a'.b' (single) or -b'.c' (bell).
  double model_E() const;
  // 2*delta + 5*sigma.
  double tolerance(double delta) const;
  bool within_tolerance(double delta) const;
};

// Optional per-run observer; when set, runs are executed on one thread in
// run-index order.
using SingleRecordSink = std::function<void(const SingleRunRecord&)>;
using BellRecordSink = std::function<void(const BellRunRecord&)>;

EnsembleStats run_single_ensemble(const ModelParams& params, const SingleChoices& choices,
                                  std::uint64_t runs, std::uint64_t seed,
                                  const SingleRecordSink& sink = {});

EnsembleStats run_bell_ensemble(const ModelParams& params, const BellChoices& choices,
                                std::uint64_t runs, std::uint64_t seed,
                                const BellRecordSink& sink = {});

// ---------------------------------------------------------------------------
// CHSH.

struct ChshSettings {
  UnitVector b, b_prime, c, c_prime;
  UnitVector wing1_initial = UnitVector(0.0, 1.0, 0.0);
  UnitVector wing2_initial = UnitVector(0.0, 1.0, 0.0);

  // b at 0, b' at 90, c at 45, c' at 135 degrees in the x-z plane.
  static ChshSettings textbook();
};

struct ChshResult {
  std::array<EnsembleStats, 4> correlators;  // (b,c), (b,c'), (b',c), (b',c')
  double S = 0.0;
  double sigma_max = 0.0;
  // 2*sqrt(2) - 8*delta - 20*sigma_max.
  double threshold(double delta) const;
};

ChshResult chsh(const ModelParams& params, const ChshSettings& settings,
                std::uint64_t runs_per_pair, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sequential Stern-Gerlach runs with drifting apparatus orientations.

// Deterministic drift of an apparatus' exact initial orientation inside the
// Δ-cap around its selected initial orientation: uniform motion along a
// per-apparatus heading in the cap's exponential-map chart, reflected
// specularly at the cap boundary.
struct DriftModel {
  double angular_rate = 0.0;  // radians per unit time
  std::uint64_t seed = 0;     // heading schedule
};

struct DriftTrajectory {
  UnitVector center;          // selected initial orientation
  double cap_radius = 0.0;    // angular radius of the Δ-cap
  UnitVector anchor;          // exact orientation at anchor_time
  double anchor_time = 0.0;
  double heading = 0.0;       // chart direction in radians
  double rate = 0.0;

  UnitVector at(double t) const;
};

struct SequentialChoices {
  std::array<ExperimenterChoice, 3> apparatus;  // (m1, a), (m2, b), (m3, c)
};

struct SequenceConstraintReport {
  LatticeSnap ab;  // A·B against the single lattice
  LatticeSnap bc;  // B·C against the single lattice
  PhaseSnap phase_at_b;  // angle at B between arcs BA and BC
  bool phase_on_lattice = false;

  bool satisfied() const { return ab.on_lattice && bc.on_lattice && phase_on_lattice; }
};

SequenceConstraintReport check_sequence(const UnitVector& A, const UnitVector& B,
                                        const UnitVector& C, LatticeSize size);

struct SequentialRecord {
  std::uint64_t run_index = 0;
  SequentialChoices choices;
  std::array<double, 3> times{};
  std::array<DriftTrajectory, 3> drift;
  bool mechanism_error = true;
  std::array<UnitVector, 3> exact;  // A, B, C at their measurement times
  SequenceConstraintReport report;
};

// Exact final settings of the three apparatuses if used at `times`.
std::array<UnitVector, 3> sequential_settings_at(const SequentialRecord& record,
                                                 const std::array<double, 3>& times);

// With mechanism_error the exact initial orientations are drawn so the run
// satisfies both single-lattice constraints and the phase constraint at B
// (when the caps admit it); without it M_i = m_i. Drift trajectories pass
// through the drawn M_i at t_i. Never throws on infeasibility: the report
// records whether the constraints hold.
SequentialRecord run_sequential(const ModelParams& params, const SequentialChoices& choices,
                                const std::array<double, 3>& times, const DriftModel& drift,
                                bool mechanism_error, Engine& rng, std::uint64_t run_index = 0);

// Bell run whose wing 1 hosts two sequential apparatuses: first (m1, b),
// then (m1', b'). Order: B from a continuous M1, C on the bell lattice about
// B, then B' on the single lattice about B with the phase measured from C.
struct BellSequentialChoices {
  ExperimenterChoice wing1_first;   // m1, b
  ExperimenterChoice wing1_second;  // m1', b'
  ExperimenterChoice wing2;         // m2, c
};

struct BellSequentialRecord {
  std::uint64_t run_index = 0;
  BellSequentialChoices choices;
  bool mechanism_error = true;
  UnitVector M1, M1_second, M2;
  UnitVector B, B_second, C;
  TrajectoryIndex k;
  int outcome1 = 0;
  int outcome2 = 0;
  bool feasible = true;
};

BellSequentialRecord run_bell_sequential(const ModelParams& params,
                                         const BellSequentialChoices& choices,
                                         bool mechanism_error, Engine& rng,
                                         std::uint64_t run_index = 0);

}  // namespace istsim
