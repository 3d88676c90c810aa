#include "istsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "chunked.hpp"
#include "istsim/errors.hpp"

namespace istsim {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> histogram(std::span<const std::uint32_t> x, std::size_t alphabet) {
  std::vector<double> h(alphabet, 0.0);
  for (auto v : x) h.at(v) += 1.0;
  for (auto& v : h) v /= static_cast<double>(x.size());
  return h;
}

// Type-7 quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Maps exact vectors onto dense ids; identical coordinates share an id.
class AtomTable {
 public:
  std::uint32_t id(const UnitVector& v) {
    const std::array<double, 3> key{v.x(), v.y(), v.z()};
    auto [it, inserted] = ids_.try_emplace(key, static_cast<std::uint32_t>(ids_.size()));
    return it->second;
  }
  std::size_t size() const { return ids_.size(); }

 private:
  std::map<std::array<double, 3>, std::uint32_t> ids_;
};

UnitVector uniform_sphere(Engine& rng) {
  const double z = 2.0 * uniform01(rng) - 1.0;
  const double phi = 2.0 * kPi * uniform01(rng);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return UnitVector(s * std::cos(phi), s * std::sin(phi), z);
}

DependenceReport compare_conditionals(const std::string& variant, const UnitVector& s1,
                                      const UnitVector& s2,
                                      const std::vector<ExactSettingPair>& set1,
                                      const std::vector<ExactSettingPair>& set2,
                                      const ExperimenterChoice& choice1,
                                      const ExperimenterChoice& choice2, std::uint64_t seed,
                                      const DependenceOptions& options) {
  if (options.samples == 0) throw ParameterError("samples must be positive");
  if (options.replicates < 10) throw ParameterError("at least 10 bootstrap replicates needed");
  if (!(options.level > 0.0 && options.level < 1.0)) {
    throw ParameterError("confidence level must lie in (0, 1)");
  }
  AtomTable atoms;
  std::vector<std::uint32_t> x, y;
  x.reserve(options.samples);
  y.reserve(options.samples);
  Engine rng1 = make_engine(seed, 0);
  Engine rng2 = make_engine(seed, 1);
  for (std::uint64_t i = 0; i < options.samples; ++i) {
    x.push_back(atoms.id(sample_measurement_hv(set1, choice1, rng1).first));
  }
  for (std::uint64_t i = 0; i < options.samples; ++i) {
    y.push_back(atoms.id(sample_measurement_hv(set2, choice2, rng2).first));
  }

  DependenceReport rep;
  rep.variant = variant;
  rep.setting1 = s1;
  rep.setting2 = s2;
  rep.samples1 = x.size();
  rep.samples2 = y.size();
  rep.admissible1 = set1.size();
  rep.admissible2 = set2.size();
  rep.alphabet = atoms.size();
  rep.distance = total_variation(x, y, atoms.size());
  rep.interval = bootstrap_tv_interval(x, y, atoms.size(), options.replicates, options.level,
                                       derive_seed(seed, 2));
  rep.verdict = rep.interval.lower > 0.0 ? DependenceVerdict::dependent
                                         : DependenceVerdict::independent_within_tolerance;
  return rep;
}

void require_distinct_or_equal(const UnitVector& s1, const UnitVector& s2, double delta) {
  const double gap = s1.chord(s2);
  if (gap > 0.0 && gap <= 2.0 * delta) {
    std::ostringstream msg;
    msg << "settings closer than 2*delta (|s1 - s2| = " << gap << ") are not distinguishable";
    throw ParameterError(msg.str());
  }
}

}  // namespace

// ---------------------------------------------------------------------------

double total_variation(std::span<const std::uint32_t> x, std::span<const std::uint32_t> y,
                       std::size_t alphabet) {
  if (x.empty() || y.empty()) throw ParameterError("total_variation: empty sample");
  const auto hx = histogram(x, alphabet);
  const auto hy = histogram(y, alphabet);
  double sum = 0.0;
  for (std::size_t i = 0; i < alphabet; ++i) sum += std::abs(hx[i] - hy[i]);
  return std::clamp(0.5 * sum, 0.0, 1.0);
}

ConfidenceInterval bootstrap_tv_interval(std::span<const std::uint32_t> x,
                                         std::span<const std::uint32_t> y, std::size_t alphabet,
                                         std::uint32_t replicates, double level,
                                         std::uint64_t seed) {
  const double t = total_variation(x, y, alphabet);
  std::vector<double> boot, null;
  boot.reserve(replicates);
  null.reserve(replicates);
  std::vector<std::uint32_t> rx(x.size()), ry(y.size());
  std::vector<std::uint32_t> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  for (std::uint32_t r = 0; r < replicates; ++r) {
    Engine rng = make_engine(seed, r);
    for (auto& v : rx) v = x[uniform_index(rng, x.size())];
    for (auto& v : ry) v = y[uniform_index(rng, y.size())];
    boot.push_back(total_variation(rx, ry, alphabet));
    // Fisher-Yates on the pooled sample; the first |x| entries form one group.
    for (std::size_t i = pooled.size() - 1; i > 0; --i) {
      std::swap(pooled[i], pooled[uniform_index(rng, i + 1)]);
    }
    const std::span<const std::uint32_t> all(pooled);
    null.push_back(total_variation(all.first(x.size()), all.subspan(x.size()), alphabet));
  }
  std::sort(boot.begin(), boot.end());
  std::sort(null.begin(), null.end());
  const double upper_q = 1.0 - (1.0 - level) / 2.0;
  ConfidenceInterval ci;
  ci.level = level;
  // The plug-in estimate is biased upwards by sampling noise. The lower end
  // subtracts the noise floor seen under identical distributions.
  ci.lower = std::clamp(t - quantile(null, upper_q), 0.0, 1.0);
  ci.upper = std::clamp(std::max(t, quantile(boot, upper_q)), 0.0, 1.0);
  return ci;
}

std::string to_string(DependenceVerdict v) {
  return v == DependenceVerdict::dependent ? "dependent" : "independent-within-tolerance";
}

DependenceReport measurement_dependence_single(const ModelParams& params, const UnitVector& A,
                                               const UnitVector& b1, const UnitVector& b2,
                                               const UnitVector& m, std::uint64_t seed,
                                               const DependenceOptions& options) {
  params.require_feasible();
  require_distinct_or_equal(b1, b2, params.delta);
  const auto set1 = admissible_exact_settings(A, b1, params, LatticeKind::single);
  const auto set2 = admissible_exact_settings(A, b2, params, LatticeKind::single);
  return compare_conditionals("single", b1, b2, set1, set2, {m, b1}, {m, b2}, seed, options);
}

DependenceReport measurement_dependence_bell(const ModelParams& params, const UnitVector& B1,
                                             const UnitVector& B2, const UnitVector& c,
                                             const UnitVector& m2, std::uint64_t seed,
                                             const DependenceOptions& options) {
  params.require_feasible();
  require_distinct_or_equal(B1, B2, params.delta);
  const auto set1 = admissible_exact_settings(B1, c, params, LatticeKind::bell);
  const auto set2 = admissible_exact_settings(B2, c, params, LatticeKind::bell);
  return compare_conditionals("bell", B1, B2, set1, set2, {m2, c}, {m2, c}, seed, options);
}

// ---------------------------------------------------------------------------

int singlet_row2_disagreements(LatticeSize size, int n1, int n2) {
  const auto a = BitStringSinglet::build(size, n1);
  const auto b = BitStringSinglet::build(size, n2);
  int count = 0;
  for (int i = 0; i < size.value(); ++i) count += a.row2()[i] != b.row2()[i];
  return count;
}

bool NonlocalityWitness::reverify(LatticeSize size) const {
  if (!found) return false;
  const LatticeSnap s1 = snap_cosine(B1.dot(C), size, LatticeKind::bell);
  const LatticeSnap s2 = snap_cosine(B2.dot(C), size, LatticeKind::bell);
  if (!s1.on_lattice || !s2.on_lattice || s1.point.n != n1 || s2.point.n != n2) return false;
  const int first = BitStringSinglet::build(size, s1.point.n).outcome_pair(k).second;
  const int second = BitStringSinglet::build(size, s2.point.n).outcome_pair(k).second;
  return first == o2_first && second == o2_second && first != second;
}

NonlocalityWitness nonlocality_witness(const ModelParams& params, std::uint64_t seed,
                                       std::uint64_t max_trials, const WitnessSearch& search) {
  params.validate();
  const LatticeSize size = params.lattice();
  NonlocalityWitness w;
  w.lattice_only = !params.is_feasible();

  for (std::uint64_t t = 0; t < max_trials; ++t) {
    Engine rng = make_engine(seed, t);
    w.trials = t + 1;
    if (!w.lattice_only) {
      const UnitVector M2 = sample_cap(search.wing2.initial_selected, params.delta, rng);
      const UnitVector C =
          mechanism(M2, search.wing2.initial_selected, search.wing2.final_selected);
      std::vector<ExactSettingPair> set;
      try {
        set = admissible_exact_settings(C, search.wing1.final_selected, params, LatticeKind::bell);
      } catch (const InfeasibilityError&) {
        continue;
      }
      // The rows for the extreme rings differ on 2|n1 - n2| columns; scan k
      // cyclically from a random start.
      const auto [lo, hi] = std::minmax_element(
          set.begin(), set.end(), [](const auto& a, const auto& b) { return a.n() < b.n(); });
      if (lo->n() == hi->n()) continue;
      const auto first = BitStringSinglet::build(size, lo->n());
      const auto second = BitStringSinglet::build(size, hi->n());
      const int start = sample_k(size, rng).k;
      for (int step = 0; step < size.value(); ++step) {
        const TrajectoryIndex k{(start - 1 + step) % size.value() + 1};
        const int o1 = first.outcome_pair(k).second;
        const int o2 = second.outcome_pair(k).second;
        if (o1 == o2) continue;
        w.found = true;
        w.M2 = M2;
        w.C = C;
        w.k = k;
        w.B1 = lo->exact;
        w.B2 = hi->exact;
        w.n1 = lo->n();
        w.n2 = hi->n();
        w.o2_first = o1;
        w.o2_second = o2;
        return w;
      }
    } else {
      const UnitVector C = uniform_sphere(rng);
      const int n1 = 1 + static_cast<int>(uniform_index(rng, size.half()));
      int n2 = 1 + static_cast<int>(uniform_index(rng, size.half() - 1));
      if (n2 >= n1) ++n2;
      const TangentFrame frame = tangent_frame(C);
      const double step = 2.0 * kPi / params.azimuth();
      const auto j1 = static_cast<double>(uniform_index(rng, params.azimuth()));
      const auto j2 = static_cast<double>(uniform_index(rng, params.azimuth()));
      const UnitVector B1 =
          point_on_ring(C, frame, RationalCosine::at(size, n1, LatticeKind::bell).value(), step * j1);
      const UnitVector B2 =
          point_on_ring(C, frame, RationalCosine::at(size, n2, LatticeKind::bell).value(), step * j2);
      const TrajectoryIndex k = sample_k(size, rng);
      const int o1 = BitStringSinglet::build(size, n1).outcome_pair(k).second;
      const int o2 = BitStringSinglet::build(size, n2).outcome_pair(k).second;
      if (o1 != o2) {
        w.found = true;
        w.C = C;
        w.k = k;
        w.B1 = B1;
        w.B2 = B2;
        w.n1 = n1;
        w.n2 = n2;
        w.o2_first = o1;
        w.o2_second = o2;
        return w;
      }
    }
  }
  return w;
}

// ---------------------------------------------------------------------------

double cap_overlap_fraction(const UnitVector& c1, const UnitVector& c2, double chord_radius) {
  const double psi = cap_angular_radius(chord_radius);
  const double d = c1.angle(c2);
  if (d == 0.0) return 1.0;
  if (d >= 2.0 * psi) return 0.0;
  const double cos_psi = std::cos(psi), cos_d = std::cos(d), sin_d = std::sin(d);
  // Polar angle theta about c1; azimuthal half-width of the part inside cap 2.
  auto integrand = [&](double theta) {
    const double s = std::sin(theta);
    if (s == 0.0) return 0.0;
    const double t = (cos_psi - std::cos(theta) * cos_d) / (s * sin_d);
    const double w = t >= 1.0 ? 0.0 : (t <= -1.0 ? kPi : std::acos(t));
    return s * w / kPi;
  };
  constexpr int kIntervals = 4000;  // even, composite Simpson
  const double h = psi / kIntervals;
  double sum = integrand(0.0) + integrand(psi);
  for (int i = 1; i < kIntervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * integrand(i * h);
  return std::clamp(sum * h / 3.0 / (1.0 - cos_psi), 0.0, 1.0);
}

PsiOnticReport psi_ontic_check(const ModelParams& params, const UnitVector& p,
                               const UnitVector& a1, const UnitVector& a2, std::uint64_t samples,
                               std::uint64_t seed) {
  params.validate();
  if (samples == 0) throw ParameterError("samples must be positive");
  PsiOnticReport rep;
  rep.a1 = a1;
  rep.a2 = a2;
  rep.samples = samples;
  rep.separation = a1.chord(a2);
  rep.sub_resolution = rep.separation < 2.0 * params.delta;

  const ExperimenterChoice prep1{p, a1}, prep2{p, a2};
  std::uint64_t inside_other = 0;
  for (int which = 0; which < 2; ++which) {
    const ExperimenterChoice& own = which == 0 ? prep1 : prep2;
    const UnitVector& other = which == 0 ? a2 : a1;
    Engine rng = make_engine(seed, static_cast<std::uint64_t>(which));
    for (std::uint64_t i = 0; i < samples; ++i) {
      const UnitVector P = sample_preparation_hv(own, params, rng);
      const UnitVector A = mechanism(P, own.initial_selected, own.final_selected);
      if (!(mechanism(P, own.initial_selected, own.final_selected) == A)) rep.recomputable = false;
      if (A.chord(other) < params.delta) ++inside_other;
    }
  }
  rep.empirical_overlap = static_cast<double>(inside_other) / (2.0 * static_cast<double>(samples));
  rep.cap_overlap = cap_overlap_fraction(a1, a2, params.delta);
  rep.disjoint = inside_other == 0 && rep.cap_overlap == 0.0;
  return rep;
}

// ---------------------------------------------------------------------------

std::string to_string(Verdict v) { return v == Verdict::ruled_out ? "ruled_out" : "not_ruled_out"; }

std::string to_string(CounterfactualMode m) {
  return m == CounterfactualMode::orientations ? "orientations" : "order";
}

TriangleArgument triangle_argument(const UnitVector& X, const UnitVector& Y, const UnitVector& Z,
                                   LatticeKind xy_kind, LatticeKind yz_kind, LatticeSize size) {
  TriangleArgument arg;
  arg.vertices = {X, Y, Z};
  arg.xy_kind = xy_kind;
  arg.yz_kind = yz_kind;
  arg.xy = snap_cosine(X.dot(Y), size, xy_kind);
  arg.yz = snap_cosine(Y.dot(Z), size, yz_kind);
  SphericalTriangle tri;
  try {
    tri = build_triangle(X, Y, Z);
  } catch (const DegeneracyError& e) {
    arg.degeneracy = e.what();
    return arg;
  }
  arg.angles = {tri.alpha, tri.beta, tri.gamma};
  for (std::size_t i = 0; i < 3; ++i) {
    const PhaseSnap snap = snap_phase(arg.angles[i], size);
    arg.angle_niven_rational[i] = niven_rational_cosine(2 * std::int64_t{snap.phase.l}, size.value());
  }
  arg.phase = snap_phase(tri.beta, size);
  arg.phase_on_lattice = arg.phase.residual <= kSnapTolerance;
  arg.phase_cosine_rational = arg.angle_niven_rational[1];
  if (arg.xy.on_lattice && arg.yz.on_lattice && arg.phase_on_lattice &&
      !arg.phase_cosine_rational) {
    arg.verdict = Verdict::ruled_out;
  }
  return arg;
}

CounterfactualVerdict counterfactual_sequential(const ModelParams& params,
                                                const SequentialRecord& record,
                                                CounterfactualMode mode) {
  params.validate();
  const LatticeSize size = params.lattice();
  const auto& app = record.choices.apparatus;

  UnitVector B_new, C_new;
  if (mode == CounterfactualMode::orientations) {
    // Apparatus 2 re-dialed to c, apparatus 3 to b; hidden orientations kept.
    const UnitVector M2 = record.drift[1].at(record.times[1]);
    const UnitVector M3 = record.drift[2].at(record.times[2]);
    C_new = mechanism(M2, app[1].initial_selected, app[2].final_selected);
    B_new = mechanism(M3, app[2].initial_selected, app[1].final_selected);
  } else {
    const auto swapped =
        sequential_settings_at(record, {record.times[0], record.times[2], record.times[1]});
    B_new = swapped[1];
    C_new = swapped[2];
  }

  CounterfactualVerdict v;
  v.scenario = "sequential";
  v.mode = to_string(mode);
  v.original = record.exact;
  v.counterfactual = {record.exact[0], B_new, C_new};
  v.naive = triangle_argument(record.exact[0], record.exact[1], record.exact[2],
                              LatticeKind::single, LatticeKind::single, size);
  v.model = triangle_argument(record.exact[0], B_new, C_new, LatticeKind::single,
                              LatticeKind::single, size);
  // The swapped sequence measures C' second and B' third.
  v.counterfactual_satisfies_constraints =
      check_sequence(record.exact[0], C_new, B_new, size).satisfied();
  return v;
}

CounterfactualVerdict counterfactual_bell(const ModelParams& params,
                                          const BellSequentialRecord& record) {
  params.validate();
  const LatticeSize size = params.lattice();
  const auto& ch = record.choices;
  const UnitVector B0_prime =
      mechanism(record.M1, ch.wing1_first.initial_selected, ch.wing1_second.final_selected);
  const UnitVector B0 =
      mechanism(record.M1_second, ch.wing1_second.initial_selected, ch.wing1_first.final_selected);

  CounterfactualVerdict v;
  v.scenario = "bell";
  v.mode = "swap";
  v.original = {record.C, record.B, record.B_second};
  v.counterfactual = {record.C, B0, B0_prime};
  v.naive = triangle_argument(record.C, record.B, record.B_second, LatticeKind::bell,
                              LatticeKind::single, size);
  v.model = triangle_argument(record.C, B0, B0_prime, LatticeKind::bell, LatticeKind::single, size);
  // Swapped run: B0' is measured first at wing 1, then B0.
  const bool c_ok = snap_cosine(B0_prime.dot(record.C), size, LatticeKind::bell).on_lattice;
  const bool b_ok = snap_cosine(B0_prime.dot(B0), size, LatticeKind::single).on_lattice;
  bool phase_ok = false;
  if (B0_prime.chord(record.C) > kDegeneracyTolerance && B0_prime.chord(B0) > kDegeneracyTolerance &&
      B0_prime.chord(-record.C) > kDegeneracyTolerance && B0_prime.chord(-B0) > kDegeneracyTolerance) {
    phase_ok = snap_phase(vertex_angle(B0_prime, record.C, B0), size).residual <= kSnapTolerance;
  }
  v.counterfactual_satisfies_constraints = c_ok && b_ok && phase_ok;
  return v;
}

namespace {

struct CensusAccum {
  CensusReport rep;
  void add(const CounterfactualVerdict& v, bool original_satisfied) {
    rep.runs += 1;
    rep.disagreements += v.disagree();
    rep.naive_ruled_out += v.naive.verdict == Verdict::ruled_out;
    rep.model_ruled_out += v.model.verdict == Verdict::ruled_out;
    rep.original_satisfied += original_satisfied;
    rep.counterfactual_satisfied += v.counterfactual_satisfies_constraints;
    rep.degenerate += v.naive.degeneracy.has_value() || v.model.degeneracy.has_value();
  }
  CensusAccum& merge(const CensusAccum& o) {
    rep.runs += o.rep.runs;
    rep.disagreements += o.rep.disagreements;
    rep.naive_ruled_out += o.rep.naive_ruled_out;
    rep.model_ruled_out += o.rep.model_ruled_out;
    rep.original_satisfied += o.rep.original_satisfied;
    rep.counterfactual_satisfied += o.rep.counterfactual_satisfied;
    rep.degenerate += o.rep.degenerate;
    return *this;
  }
};

}  // namespace

SequentialCensusSetup SequentialCensusSetup::defaults() {
  SequentialCensusSetup s;
  const UnitVector y(0.0, 1.0, 0.0);
  s.choices.apparatus = {ExperimenterChoice{y, UnitVector::in_plane_degrees(0.0)},
                         ExperimenterChoice{y, UnitVector::in_plane_degrees(60.0)},
                         ExperimenterChoice{y, UnitVector::in_plane_degrees(120.0)}};
  return s;
}

CensusReport counterfactual_census_sequential(const ModelParams& params,
                                              const SequentialCensusSetup& setup,
                                              std::uint64_t runs, std::uint64_t seed) {
  params.validate();
  CensusAccum init;
  init.rep.scenario = "sequential";
  init.rep.mode = to_string(setup.mode);
  auto acc = detail::run_chunked(runs, init, [&](std::uint64_t r, CensusAccum& a) {
    Engine rng = make_engine(seed, r);
    const SequentialRecord rec = run_sequential(params, setup.choices, setup.times, setup.drift,
                                                setup.mechanism_error, rng, r);
    a.add(counterfactual_sequential(params, rec, setup.mode), rec.report.satisfied());
  });
  return acc.rep;
}

BellCensusSetup BellCensusSetup::defaults() {
  BellCensusSetup s;
  const UnitVector y(0.0, 1.0, 0.0);
  s.choices.wing1_first = {y, UnitVector::in_plane_degrees(0.0)};
  s.choices.wing1_second = {y, UnitVector::in_plane_degrees(90.0)};
  s.choices.wing2 = {y, UnitVector::in_plane_degrees(45.0)};
  return s;
}

CensusReport counterfactual_census_bell(const ModelParams& params, const BellCensusSetup& setup,
                                        std::uint64_t runs, std::uint64_t seed) {
  params.validate();
  CensusAccum init;
  init.rep.scenario = "bell";
  init.rep.mode = "swap";
  auto acc = detail::run_chunked(runs, init, [&](std::uint64_t r, CensusAccum& a) {
    Engine rng = make_engine(seed, r);
    const BellSequentialRecord rec =
        run_bell_sequential(params, setup.choices, setup.mechanism_error, rng, r);
    const CounterfactualVerdict v = counterfactual_bell(params, rec);
    const bool original = v.naive.xy.on_lattice && v.naive.yz.on_lattice && v.naive.phase_on_lattice;
    a.add(v, original);
  });
  return acc.rep;
}

// ---------------------------------------------------------------------------

NoncommutativityReport noncommutativity_census(const ModelParams& params,
                                               const NoncommutativitySetup& setup,
                                               std::uint64_t trials, std::uint64_t seed) {
  params.validate();
  const LatticeSize size = params.lattice();
  const std::int64_t N = size.value();
  const std::int64_t N2 = N * N;

  NoncommutativityReport rep;
  rep.N = params.N;
  rep.kind = setup.kind;

  std::vector<std::int64_t> sq(static_cast<std::size_t>(size.half()) + 1, 0);
  std::multimap<std::int64_t, int> by_square;
  for (int n = 1; n <= size.half(); ++n) {
    const std::int64_t r = RationalCosine::at(size, n, setup.kind).numerator;
    sq[n] = r * r;
    by_square.emplace(sq[n], n);
  }
  constexpr std::size_t kMaxExamples = 16;
  for (int n1 = 1; n1 <= size.half(); ++n1) {
    for (int n2 = 1; n2 <= size.half(); ++n2) {
      const std::int64_t rest = N2 - sq[n1] - sq[n2];
      if (rest < 0) continue;
      ++rep.realizable_pairs;
      if (rep.pair_examples.size() < kMaxExamples) rep.pair_examples.push_back({n1, n2});
      if (n2 < n1) continue;
      auto [lo, hi] = by_square.equal_range(rest);
      for (auto it = lo; it != hi; ++it) {
        if (it->second >= n2) rep.orthogonal_triples.push_back({n1, n2, it->second});
      }
    }
  }
  std::sort(rep.orthogonal_triples.begin(), rep.orthogonal_triples.end());

  rep.trials = trials;
  for (std::uint64_t t = 0; t < trials; ++t) {
    Engine rng = make_engine(seed, t);
    std::array<UnitVector, 3> X;
    for (std::size_t i = 0; i < 3; ++i) {
      X[i] = mechanism(sample_cap(setup.m, params.delta, rng), setup.m, setup.x[i]);
      rep.on_lattice_with_A += snap_cosine(setup.A.dot(X[i]), size, setup.kind).on_lattice;
    }
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = i + 1; j < 3; ++j) {
        rep.max_abs_pairwise_dot = std::max(rep.max_abs_pairwise_dot, std::abs(X[i].dot(X[j])));
      }
    }
  }

  rep.tension_flag = rep.orthogonal_triples.empty() && rep.realizable_pairs > 0;
  std::ostringstream note;
  if (rep.tension_flag) {
    note << "no orthogonal triple has all three cosines on the lattice, but "
         << rep.realizable_pairs
         << " ordered lattice pairs fit on two orthogonal axes; the lattice alone does not "
            "restrict well-defined values to one of the three measurements (phase constraint "
            "not included)";
  } else if (!rep.orthogonal_triples.empty()) {
    note << rep.orthogonal_triples.size()
         << " orthogonal triples have all three cosines on the lattice";
  } else {
    note << "no lattice pair fits on two orthogonal axes";
  }
  rep.note = note.str();
  return rep;
}

// ---------------------------------------------------------------------------

double mutual_information_bits(std::span<const std::uint32_t> x, std::span<const std::uint32_t> y,
                               std::size_t alphabet_x, std::size_t alphabet_y) {
  if (x.size() != y.size() || x.empty()) {
    throw ParameterError("mutual_information_bits: samples must be non-empty and paired");
  }
  std::vector<double> joint(alphabet_x * alphabet_y, 0.0), px(alphabet_x, 0.0),
      py(alphabet_y, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    joint.at(x[i] * alphabet_y + y[i]) += 1.0;
    px.at(x[i]) += 1.0;
    py.at(y[i]) += 1.0;
  }
  const double n = static_cast<double>(x.size());
  double mi = 0.0;
  for (std::size_t a = 0; a < alphabet_x; ++a) {
    for (std::size_t b = 0; b < alphabet_y; ++b) {
      const double c = joint[a * alphabet_y + b];
      if (c > 0.0) mi += c / n * std::log2(c * n / (px[a] * py[b]));
    }
  }
  return std::max(0.0, mi);
}

std::string to_string(ChoiceModel m) {
  return m == ChoiceModel::superdeterministic ? "superdeterministic" : "independent";
}

namespace {

struct ConspiracyAccum {
  std::vector<std::uint32_t> choice, satisfier;
  std::uint64_t ambiguous = 0;
  ConspiracyAccum& merge(const ConspiracyAccum& o) {
    choice.insert(choice.end(), o.choice.begin(), o.choice.end());
    satisfier.insert(satisfier.end(), o.satisfier.begin(), o.satisfier.end());
    ambiguous += o.ambiguous;
    return *this;
  }
};

}  // namespace

ConspiracyReport conspiracy_experiment(const ModelParams& params, int apparatus_count,
                                       std::uint64_t runs, std::uint64_t seed,
                                       ChoiceModel model) {
  params.require_feasible();
  if (apparatus_count < 2 || apparatus_count > 64) {
    throw ParameterError("apparatus count must lie in {2..64} (got " +
                         std::to_string(apparatus_count) + ")");
  }
  if (runs < 10'000) {
    throw ParameterError("conspiracy experiment needs at least 10000 runs (got " +
                         std::to_string(runs) + ")");
  }
  const double count = apparatus_count;
  const double bias = count * count / (2.0 * static_cast<double>(runs) * std::numbers::ln2);
  if (bias > 0.05) {
    std::ostringstream msg;
    msg << "runs too small for " << apparatus_count
        << " apparatuses: plug-in bias bound " << bias << " bits exceeds 0.05";
    throw ParameterError(msg.str());
  }

  const LatticeSize size = params.lattice();
  const UnitVector y(0.0, 1.0, 0.0);
  const ExperimenterChoice wing1{y, UnitVector::in_plane_degrees(0.0)};
  std::vector<ExperimenterChoice> wing2;
  for (int j = 0; j < apparatus_count; ++j) {
    wing2.push_back({y, UnitVector::in_plane_degrees(20.0 + 140.0 * j / (apparatus_count - 1))});
  }

  auto acc = detail::run_chunked(runs, ConspiracyAccum{}, [&](std::uint64_t r,
                                                              ConspiracyAccum& a) {
    Engine rng = make_engine(seed, r);
    const UnitVector M1 = sample_cap(wing1.initial_selected, params.delta, rng);
    const UnitVector B = mechanism(M1, wing1.initial_selected, wing1.final_selected);
    // Initial conditions single out one apparatus whose exact orientation
    // is admissible with B; the rest are unconstrained.
    const auto designated = static_cast<int>(uniform_index(rng, wing2.size()));
    int found = -1, hits = 0;
    for (int j = 0; j < apparatus_count; ++j) {
      UnitVector C;
      if (j == designated) {
        const auto set = admissible_exact_settings(B, wing2[j].final_selected, params,
                                                   LatticeKind::bell);
        C = set[uniform_index(rng, set.size())].exact;
      } else {
        C = mechanism(sample_cap(wing2[j].initial_selected, params.delta, rng),
                      wing2[j].initial_selected, wing2[j].final_selected);
      }
      if (snap_cosine(B.dot(C), size, LatticeKind::bell).on_lattice) {
        ++hits;
        if (found < 0) found = j;
      }
    }
    if (hits != 1) ++a.ambiguous;
    const auto satisfier = static_cast<std::uint32_t>(found < 0 ? designated : found);
    const auto choice = model == ChoiceModel::superdeterministic
                            ? satisfier
                            : static_cast<std::uint32_t>(uniform_index(rng, wing2.size()));
    a.choice.push_back(choice);
    a.satisfier.push_back(satisfier);
  });

  ConspiracyReport rep;
  rep.apparatus_count = apparatus_count;
  rep.runs = runs;
  rep.choice_model = to_string(model);
  rep.mutual_information = mutual_information_bits(acc.choice, acc.satisfier, wing2.size(),
                                                   wing2.size());
  rep.log2_apparatus = std::log2(count);
  rep.bias_bound = bias;
  std::uint64_t same = 0;
  for (std::size_t i = 0; i < acc.choice.size(); ++i) same += acc.choice[i] == acc.satisfier[i];
  rep.correlation_fraction = static_cast<double>(same) / static_cast<double>(runs);
  rep.ambiguous_runs = acc.ambiguous;
  return rep;
}

}  // namespace istsim
