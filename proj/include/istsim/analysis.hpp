#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "istsim/experiments.hpp"
#include "istsim/geometry.hpp"
#include "istsim/ontology.hpp"

namespace istsim {

// ---------------------------------------------------------------------------
// Measurement dependence.

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  bool contains(double x) const { return lower <= x && x <= upper; }
};

// Plug-in total variation distance between the empirical distributions of
// two samples over the alphabet {0..alphabet-1}.
double total_variation(std::span<const std::uint32_t> x, std::span<const std::uint32_t> y,
                       std::size_t alphabet);

// Interval for the TV distance, clamped to [0, 1]. Lower end: estimate
// minus the upper quantile of TV under random relabelling of the pooled
// samples. Upper end: upper quantile of TV over bootstrap resamples drawn
// within each sample.
ConfidenceInterval bootstrap_tv_interval(std::span<const std::uint32_t> x,
                                         std::span<const std::uint32_t> y, std::size_t alphabet,
                                         std::uint32_t replicates, double level,
                                         std::uint64_t seed);

enum class DependenceVerdict { dependent, independent_within_tolerance };
std::string to_string(DependenceVerdict v);

struct DependenceOptions {
  std::uint64_t samples = 10'000;  // per setting
  std::uint32_t replicates = 1'000;
  double level = 0.95;
};

struct DependenceReport {
  std::string variant;  // "single" or "bell"
  UnitVector setting1, setting2;
  double distance = 0.0;
  ConfidenceInterval interval;
  std::uint64_t samples1 = 0, samples2 = 0;
  std::size_t admissible1 = 0, admissible2 = 0;  // size of each admissible set
  std::size_t alphabet = 0;                      // distinct M values over both samples
  DependenceVerdict verdict = DependenceVerdict::independent_within_tolerance;
};

// M distribution at the measurement apparatus (m, b_i) given the exact
// preparation A, compared between two selected measurement settings.
DependenceReport measurement_dependence_single(const ModelParams& params, const UnitVector& A,
                                               const UnitVector& b1, const UnitVector& b2,
                                               const UnitVector& m, std::uint64_t seed,
                                               const DependenceOptions& options = {});

// M2 distribution at wing 2 (m2, c) given two exact wing-1 settings.
DependenceReport measurement_dependence_bell(const ModelParams& params, const UnitVector& B1,
                                             const UnitVector& B2, const UnitVector& c,
                                             const UnitVector& m2, std::uint64_t seed,
                                             const DependenceOptions& options = {});

// ---------------------------------------------------------------------------
// Nonlocality: fixed (C, k), two wing-1 settings, different O2.

// Columns where row 2 of the singlet strings for n1 and n2 differ.
int singlet_row2_disagreements(LatticeSize size, int n1, int n2);

struct NonlocalityWitness {
  bool found = false;
  std::uint64_t trials = 0;
  bool lattice_only = false;  // true when the caps cannot host the search
  std::optional<UnitVector> M2;  // wing-2 hidden orientation (cap search only)
  UnitVector C;
  TrajectoryIndex k;
  UnitVector B1, B2;
  int n1 = 0, n2 = 0;
  int o2_first = 0, o2_second = 0;

  // Rebuilds both singlet strings from (B_i, C, k) and re-reads O2.
  bool reverify(LatticeSize size) const;
};

struct WitnessSearch {
  ExperimenterChoice wing1{UnitVector(0.0, 1.0, 0.0), UnitVector::in_plane_degrees(0.0)};
  ExperimenterChoice wing2{UnitVector(0.0, 1.0, 0.0), UnitVector::in_plane_degrees(45.0)};
};

NonlocalityWitness nonlocality_witness(const ModelParams& params, std::uint64_t seed,
                                       std::uint64_t max_trials,
                                       const WitnessSearch& search = {});

// ---------------------------------------------------------------------------
// psi-ontic check.

struct PsiOnticReport {
  UnitVector a1, a2;
  std::uint64_t samples = 0;
  double separation = 0.0;      // |a1 - a2|
  bool sub_resolution = false;  // |a1 - a2| < 2*delta
  double empirical_overlap = 0.0;
  double cap_overlap = 0.0;  // intersection area over cap area
  bool disjoint = false;
  bool recomputable = true;  // A reproduced bitwise from (P, p, a)
};

// fraction of a cap of chord radius r around c1 that lies in the cap around c2.
double cap_overlap_fraction(const UnitVector& c1, const UnitVector& c2, double chord_radius);

PsiOnticReport psi_ontic_check(const ModelParams& params, const UnitVector& p,
                               const UnitVector& a1, const UnitVector& a2, std::uint64_t samples,
                               std::uint64_t seed);

// ---------------------------------------------------------------------------
// Counterfactual admissibility.

enum class Verdict { ruled_out, not_ruled_out };
std::string to_string(Verdict v);

// The triangle argument against reordering: with X·Y and Y·Z on their
// lattices and the angle at Y a lattice phase 2*pi*l/N whose cosine is
// irrational, X·Z cannot be rational, so the reordered sequence is ruled
// out. Fails to rule out as soon as any premise does not hold.
struct TriangleArgument {
  std::array<UnitVector, 3> vertices;  // X, Y (middle), Z
  LatticeKind xy_kind = LatticeKind::single;
  LatticeKind yz_kind = LatticeKind::single;
  LatticeSnap xy, yz;
  PhaseSnap phase;
  bool phase_on_lattice = false;
  bool phase_cosine_rational = false;
  std::array<double, 3> angles{};           // at X, Y, Z
  std::array<bool, 3> angle_niven_rational{};  // cos rational for nearest lattice phase
  std::optional<std::string> degeneracy;
  Verdict verdict = Verdict::not_ruled_out;
};

TriangleArgument triangle_argument(const UnitVector& X, const UnitVector& Y, const UnitVector& Z,
                                   LatticeKind xy_kind, LatticeKind yz_kind, LatticeSize size);

enum class CounterfactualMode { orientations, order };
std::string to_string(CounterfactualMode m);

struct CounterfactualVerdict {
  std::string scenario;  // "sequential" or "bell"
  std::string mode;
  std::array<UnitVector, 3> original;
  std::array<UnitVector, 3> counterfactual;
  TriangleArgument naive;
  TriangleArgument model;
  bool counterfactual_satisfies_constraints = false;
  Verdict naive_verdict() const { return naive.verdict; }
  Verdict model_verdict() const { return model.verdict; }
  bool disagree() const { return naive.verdict != model.verdict; }
};

// Swap in counterfactual settings: orientations mode re-dials apparatus 2 to
// c and 3 to b; order mode uses apparatus 2 at t3 and 3 at t2. The model
// triangle keeps vertex roles (b-setting in the middle).
CounterfactualVerdict counterfactual_sequential(const ModelParams& params,
                                                const SequentialRecord& record,
                                                CounterfactualMode mode);

// Wing 1 swaps b and b'. Naive triangle (C, B, B'), model triangle
// (C, B0, B0') with B0' = mech(M1, m1, b') and B0 = mech(M1', m1', b).
CounterfactualVerdict counterfactual_bell(const ModelParams& params,
                                          const BellSequentialRecord& record);

struct CensusReport {
  std::string scenario;
  std::string mode;
  std::uint64_t runs = 0;
  std::uint64_t disagreements = 0;
  std::uint64_t naive_ruled_out = 0;
  std::uint64_t model_ruled_out = 0;
  std::uint64_t original_satisfied = 0;
  std::uint64_t counterfactual_satisfied = 0;
  std::uint64_t degenerate = 0;
  double disagreement_fraction() const {
    return runs == 0 ? 0.0 : static_cast<double>(disagreements) / static_cast<double>(runs);
  }
};

struct SequentialCensusSetup {
  SequentialChoices choices;
  std::array<double, 3> times{1.0, 2.0, 3.0};
  DriftModel drift{0.01, 7};
  bool mechanism_error = true;
  CounterfactualMode mode = CounterfactualMode::orientations;
  static SequentialCensusSetup defaults();
};

CensusReport counterfactual_census_sequential(const ModelParams& params,
                                              const SequentialCensusSetup& setup,
                                              std::uint64_t runs, std::uint64_t seed);

struct BellCensusSetup {
  BellSequentialChoices choices;
  bool mechanism_error = true;
  static BellCensusSetup defaults();
};

CensusReport counterfactual_census_bell(const ModelParams& params, const BellCensusSetup& setup,
                                        std::uint64_t runs, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Noncommutativity.

struct NoncommutativityReport {
  int N = 0;
  LatticeKind kind = LatticeKind::single;
  // Lattice index triples n1 <= n2 <= n3 with r1^2 + r2^2 + r3^2 = 1.
  std::vector<std::array<int, 3>> orthogonal_triples;
  std::uint64_t realizable_pairs = 0;  // ordered (n1, n2) with r1^2 + r2^2 <= 1
  std::vector<std::array<int, 2>> pair_examples;
  std::uint64_t trials = 0;
  double max_abs_pairwise_dot = 0.0;  // over mechanism-perturbed X_i
  std::uint64_t on_lattice_with_A = 0;  // A.X_i snapping onto the lattice
  bool tension_flag = false;
  std::string note;
};

struct NoncommutativitySetup {
  UnitVector A = UnitVector::in_plane_degrees(0.0);
  UnitVector m = UnitVector(1.0, 1.0, 1.0);
  std::array<UnitVector, 3> x{UnitVector(1.0, 0.0, 0.0), UnitVector(0.0, 1.0, 0.0),
                              UnitVector(0.0, 0.0, 1.0)};
  LatticeKind kind = LatticeKind::single;
};

NoncommutativityReport noncommutativity_census(const ModelParams& params,
                                               const NoncommutativitySetup& setup,
                                               std::uint64_t trials, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Conspiracy scaling.

// Plug-in mutual information in bits of paired samples.
double mutual_information_bits(std::span<const std::uint32_t> x, std::span<const std::uint32_t> y,
                               std::size_t alphabet_x, std::size_t alphabet_y);

enum class ChoiceModel { superdeterministic, independent };
std::string to_string(ChoiceModel m);

struct ConspiracyReport {
  int apparatus_count = 0;
  std::uint64_t runs = 0;
  std::string choice_model;
  double mutual_information = 0.0;  // bits
  double log2_apparatus = 0.0;
  double bias_bound = 0.0;          // |X||Y| / (2 runs ln 2)
  double correlation_fraction = 0.0;
  std::uint64_t ambiguous_runs = 0;  // satisfier count != 1 after snapping
};

ConspiracyReport conspiracy_experiment(const ModelParams& params, int apparatus_count,
                                       std::uint64_t runs, std::uint64_t seed,
                                       ChoiceModel model = ChoiceModel::superdeterministic);

}  // namespace istsim
