#include "istsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "chunked.hpp"
#include "istsim/errors.hpp"

namespace istsim {

namespace {

void require_runs(std::uint64_t runs) {
  if (runs < 1000) {
    throw ParameterError("ensembles need at least 1000 runs (got " + std::to_string(runs) + ")");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

SingleRunRecord run_single_once(const ModelParams& params, const SingleChoices& choices,
                                Engine& rng, std::uint64_t run_index) {
  params.require_feasible();
  const LatticeSize size = params.lattice();

  SingleRunRecord rec;
  rec.run_index = run_index;
  rec.hidden.P_exact = sample_preparation_hv(choices.preparation, params, rng,
                                             choices.preparation_bias);
  rec.A_exact = mechanism(rec.hidden.P_exact, choices.preparation.initial_selected,
                          choices.preparation.final_selected);
  rec.hidden.k = sample_k(size, rng);

  const auto admissible = admissible_exact_settings(
      rec.A_exact, choices.measurement.final_selected, params, LatticeKind::single);
  auto [M, pair] = sample_measurement_hv(admissible, choices.measurement, rng);
  rec.hidden.M_exact = M;
  rec.B = pair;
  rec.bits = BitStringSingle::build(size, pair.n(), 0);
  rec.outcome = rec.bits.outcome(rec.hidden.k);
  return rec;
}

BellRunRecord run_bell_once(const ModelParams& params, const BellChoices& choices, Engine& rng,
                            std::uint64_t run_index) {
  params.require_feasible();
  const LatticeSize size = params.lattice();

  BellRunRecord rec;
  rec.run_index = run_index;
  rec.hidden.M1_exact = sample_cap(choices.wing1.initial_selected, params.delta, rng);
  rec.B_exact = mechanism(rec.hidden.M1_exact, choices.wing1.initial_selected,
                          choices.wing1.final_selected);
  // k is drawn before any wing-2 quantity so that O1 never depends on c.
  rec.hidden.k = sample_k(size, rng);

  const auto admissible = admissible_exact_settings(rec.B_exact, choices.wing2.final_selected,
                                                    params, LatticeKind::bell);
  auto [M2, pair] = sample_measurement_hv(admissible, choices.wing2, rng);
  rec.hidden.M2_exact = M2;
  rec.C = pair;
  rec.bits = BitStringSinglet::build(size, pair.n());
  std::tie(rec.outcome1, rec.outcome2) = rec.bits.outcome_pair(rec.hidden.k);
  return rec;
}

// ---------------------------------------------------------------------------

EnsembleStats& EnsembleStats::merge(const EnsembleStats& o) {
  runs += o.runs;
  product_sum += o.product_sum;
  first_sum += o.first_sum;
  second_sum += o.second_sum;
  exact_dot_sum += o.exact_dot_sum;
  first_setting_sum += o.first_setting_sum;
  second_setting_sum += o.second_setting_sum;
  initial_sum += o.initial_sum;
  return *this;
}

double EnsembleStats::E_hat() const {
  return runs == 0 ? 0.0 : static_cast<double>(product_sum) / static_cast<double>(runs);
}

double EnsembleStats::sigma() const {
  if (runs == 0) return 0.0;
  const double e = E_hat();
  return std::sqrt(std::max(0.0, 1.0 - e * e) / static_cast<double>(runs));
}

double EnsembleStats::first_marginal() const {
  return runs == 0 ? 0.0 : static_cast<double>(first_sum) / static_cast<double>(runs);
}

double EnsembleStats::second_marginal() const {
  return runs == 0 ? 0.0 : static_cast<double>(second_sum) / static_cast<double>(runs);
}

double EnsembleStats::mean_exact_dot() const {
  return runs == 0 ? 0.0 : exact_dot_sum / static_cast<double>(runs);
}

Eigen::Vector3d EnsembleStats::first_prime() const {
  return runs == 0 ? Eigen::Vector3d::Zero() : Eigen::Vector3d(first_setting_sum / runs);
}

Eigen::Vector3d EnsembleStats::second_prime() const {
  return runs == 0 ? Eigen::Vector3d::Zero() : Eigen::Vector3d(second_setting_sum / runs);
}

Eigen::Vector3d EnsembleStats::initial_prime() const {
  return runs == 0 ? Eigen::Vector3d::Zero() : Eigen::Vector3d(initial_sum / runs);
}

double EnsembleStats::model_E() const { return sign * first_prime().dot(second_prime()); }

double EnsembleStats::tolerance(double delta) const { return 2.0 * delta + 5.0 * sigma(); }

bool EnsembleStats::within_tolerance(double delta) const {
  return std::abs(E_hat() - quantum_E) < tolerance(delta);
}

EnsembleStats run_single_ensemble(const ModelParams& params, const SingleChoices& choices,
                                  std::uint64_t runs, std::uint64_t seed,
                                  const SingleRecordSink& sink) {
  require_runs(runs);
  params.require_feasible();

  EnsembleStats init;
  init.sign = 1;
  init.quantum_E = choices.preparation.final_selected.dot(choices.measurement.final_selected);

  auto one = [&](std::uint64_t r, EnsembleStats& acc) {
    Engine rng = make_engine(seed, r);
    const SingleRunRecord rec = run_single_once(params, choices, rng, r);
    acc.runs += 1;
    acc.product_sum += rec.outcome;
    acc.exact_dot_sum += rec.A_exact.dot(rec.B.exact);
    acc.first_setting_sum += rec.A_exact.vec();
    acc.second_setting_sum += rec.B.exact.vec();
    acc.initial_sum += rec.hidden.P_exact.vec();
    if (sink) sink(rec);
  };

  if (sink) {
    EnsembleStats total = init;
    for (std::uint64_t r = 0; r < runs; ++r) {
      EnsembleStats part = init;
      one(r, part);
      total.merge(part);
    }
    return total;
  }
  EnsembleStats total = detail::run_chunked(runs, init, [&](std::uint64_t r, EnsembleStats& acc) {
    one(r, acc);
  });
  return total;
}

EnsembleStats run_bell_ensemble(const ModelParams& params, const BellChoices& choices,
                                std::uint64_t runs, std::uint64_t seed,
                                const BellRecordSink& sink) {
  require_runs(runs);
  params.require_feasible();

  EnsembleStats init;
  init.sign = -1;
  init.quantum_E = -choices.wing1.final_selected.dot(choices.wing2.final_selected);

  auto one = [&](std::uint64_t r, EnsembleStats& acc) {
    Engine rng = make_engine(seed, r);
    const BellRunRecord rec = run_bell_once(params, choices, rng, r);
    acc.runs += 1;
    acc.product_sum += rec.outcome1 * rec.outcome2;
    acc.first_sum += rec.outcome1;
    acc.second_sum += rec.outcome2;
    acc.exact_dot_sum += rec.B_exact.dot(rec.C.exact);
    acc.first_setting_sum += rec.B_exact.vec();
    acc.second_setting_sum += rec.C.exact.vec();
    acc.initial_sum += rec.hidden.M1_exact.vec();
    if (sink) sink(rec);
  };

  if (sink) {
    EnsembleStats total = init;
    for (std::uint64_t r = 0; r < runs; ++r) {
      EnsembleStats part = init;
      one(r, part);
      total.merge(part);
    }
    return total;
  }
  return detail::run_chunked(runs, init, [&](std::uint64_t r, EnsembleStats& acc) { one(r, acc); });
}

// ---------------------------------------------------------------------------

ChshSettings ChshSettings::textbook() {
  return ChshSettings{UnitVector::in_plane_degrees(0.0), UnitVector::in_plane_degrees(90.0),
                      UnitVector::in_plane_degrees(45.0), UnitVector::in_plane_degrees(135.0)};
}

double ChshResult::threshold(double delta) const {
  return 2.0 * std::numbers::sqrt2 - 8.0 * delta - 20.0 * sigma_max;
}

ChshResult chsh(const ModelParams& params, const ChshSettings& s, std::uint64_t runs_per_pair,
                std::uint64_t seed) {
  const std::array<std::pair<UnitVector, UnitVector>, 4> pairs{
      {{s.b, s.c}, {s.b, s.c_prime}, {s.b_prime, s.c}, {s.b_prime, s.c_prime}}};
  ChshResult result;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    BellChoices choices{{s.wing1_initial, pairs[i].first}, {s.wing2_initial, pairs[i].second}};
    result.correlators[i] = run_bell_ensemble(params, choices, runs_per_pair, derive_seed(seed, i));
    result.sigma_max = std::max(result.sigma_max, result.correlators[i].sigma());
  }
  const auto& e = result.correlators;
  result.S = std::abs(e[0].E_hat() - e[1].E_hat() + e[2].E_hat() + e[3].E_hat());
  return result;
}

// ---------------------------------------------------------------------------

UnitVector DriftTrajectory::at(double t) const {
  const double distance = rate * (t - anchor_time);
  if (distance == 0.0) return anchor;

  const TangentFrame frame = tangent_frame(center);
  // Log map of the anchor into the chart at `center`.
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  const double r0 = center.angle(anchor);
  if (r0 > 0.0) {
    Eigen::Vector3d tangent = anchor.vec() - anchor.dot(center) * center.vec();
    tangent.normalize();
    p = r0 * Eigen::Vector2d(tangent.dot(frame.e1), tangent.dot(frame.e2));
  }

  Eigen::Vector2d d(std::cos(heading), std::sin(heading));
  if (distance < 0.0) d = -d;
  double remaining = std::abs(distance);
  const double R = cap_radius;
  for (int iter = 0; remaining > 0.0 && iter < 1'000'000; ++iter) {
    const double pd = p.dot(d);
    const double disc = pd * pd - p.squaredNorm() + R * R;
    const double s = std::max(0.0, -pd + std::sqrt(std::max(0.0, disc)));
    if (s >= remaining) {
      p += remaining * d;
      break;
    }
    p += s * d;
    remaining -= s;
    const Eigen::Vector2d normal = p.normalized();
    d -= 2.0 * d.dot(normal) * normal;
  }
  if (p.norm() > R) p *= R / p.norm();

  const double r = p.norm();
  if (r == 0.0) return center;
  const Eigen::Vector3d dir = (p.x() * frame.e1 + p.y() * frame.e2) / r;
  return UnitVector(std::cos(r) * center.vec() + std::sin(r) * dir);
}

SequenceConstraintReport check_sequence(const UnitVector& A, const UnitVector& B,
                                        const UnitVector& C, LatticeSize size) {
  SequenceConstraintReport rep;
  rep.ab = snap_cosine(A.dot(B), size, LatticeKind::single);
  rep.bc = snap_cosine(B.dot(C), size, LatticeKind::single);
  rep.phase_at_b = snap_phase(vertex_angle(B, A, C), size);
  rep.phase_on_lattice = rep.phase_at_b.residual <= kSnapTolerance;
  return rep;
}

std::array<UnitVector, 3> sequential_settings_at(const SequentialRecord& record,
                                                 const std::array<double, 3>& times) {
  std::array<UnitVector, 3> out;
  for (std::size_t i = 0; i < 3; ++i) {
    if (times[i] == record.times[i]) {
      out[i] = record.exact[i];
    } else {
      const auto& app = record.choices.apparatus[i];
      out[i] = mechanism(record.drift[i].at(times[i]), app.initial_selected, app.final_selected);
    }
  }
  return out;
}

SequentialRecord run_sequential(const ModelParams& params, const SequentialChoices& choices,
                                const std::array<double, 3>& times, const DriftModel& drift,
                                bool mechanism_error, Engine& rng, std::uint64_t run_index) {
  params.validate();
  const LatticeSize size = params.lattice();
  const auto& app = choices.apparatus;

  SequentialRecord rec;
  rec.run_index = run_index;
  rec.choices = choices;
  rec.times = times;
  rec.mechanism_error = mechanism_error;

  std::array<UnitVector, 3> M;
  if (!mechanism_error) {
    for (std::size_t i = 0; i < 3; ++i) {
      M[i] = app[i].initial_selected;
      rec.exact[i] = app[i].final_selected;
    }
  } else {
    params.require_feasible();
    M[0] = sample_cap(app[0].initial_selected, params.delta, rng);
    rec.exact[0] = mechanism(M[0], app[0].initial_selected, app[0].final_selected);

    // Later apparatuses sit on lattice rings about the previous exact
    // setting; the third one's azimuth is measured from A so that its
    // phase index is the vertex angle at B.
    auto draw = [&](std::size_t i, const std::optional<UnitVector>& reference) {
      try {
        const auto admissible = admissible_exact_settings(
            rec.exact[i - 1], app[i].final_selected, params, LatticeKind::single, reference);
        auto [Mi, pair] = sample_measurement_hv(admissible, app[i], rng);
        M[i] = Mi;
        rec.exact[i] = pair.exact;
      } catch (const InfeasibilityError&) {
        M[i] = sample_cap(app[i].initial_selected, params.delta, rng);
        rec.exact[i] = mechanism(M[i], app[i].initial_selected, app[i].final_selected);
      }
    };
    draw(1, std::nullopt);
    draw(2, rec.exact[0]);
  }

  const Engine::result_type heading_seed = derive_seed(drift.seed, run_index);
  const double cap = cap_angular_radius(params.delta);
  for (std::size_t i = 0; i < 3; ++i) {
    Engine heading_rng = make_engine(heading_seed, i);
    rec.drift[i] = DriftTrajectory{app[i].initial_selected,
                                   cap,
                                   M[i],
                                   times[i],
                                   2.0 * std::numbers::pi * uniform01(heading_rng),
                                   drift.angular_rate};
  }
  rec.report = check_sequence(rec.exact[0], rec.exact[1], rec.exact[2], size);
  return rec;
}

BellSequentialRecord run_bell_sequential(const ModelParams& params,
                                         const BellSequentialChoices& choices,
                                         bool mechanism_error, Engine& rng,
                                         std::uint64_t run_index) {
  params.validate();
  const LatticeSize size = params.lattice();

  BellSequentialRecord rec;
  rec.run_index = run_index;
  rec.choices = choices;
  rec.mechanism_error = mechanism_error;

  if (!mechanism_error) {
    rec.M1 = choices.wing1_first.initial_selected;
    rec.M1_second = choices.wing1_second.initial_selected;
    rec.M2 = choices.wing2.initial_selected;
    rec.B = choices.wing1_first.final_selected;
    rec.B_second = choices.wing1_second.final_selected;
    rec.C = choices.wing2.final_selected;
    rec.k = sample_k(size, rng);
  } else {
    params.require_feasible();
    rec.M1 = sample_cap(choices.wing1_first.initial_selected, params.delta, rng);
    rec.B = mechanism(rec.M1, choices.wing1_first.initial_selected,
                      choices.wing1_first.final_selected);
    rec.k = sample_k(size, rng);
    try {
      const auto for_c = admissible_exact_settings(rec.B, choices.wing2.final_selected, params,
                                                   LatticeKind::bell);
      ExactSettingPair c_pick;
      std::tie(rec.M2, c_pick) = sample_measurement_hv(for_c, choices.wing2, rng);
      rec.C = c_pick.exact;
      const auto for_b2 = admissible_exact_settings(
          rec.B, choices.wing1_second.final_selected, params, LatticeKind::single, rec.C);
      ExactSettingPair pick;
      std::tie(rec.M1_second, pick) = sample_measurement_hv(for_b2, choices.wing1_second, rng);
      rec.B_second = pick.exact;
    } catch (const InfeasibilityError&) {
      rec.feasible = false;
      rec.M2 = sample_cap(choices.wing2.initial_selected, params.delta, rng);
      rec.C = mechanism(rec.M2, choices.wing2.initial_selected, choices.wing2.final_selected);
      rec.M1_second = sample_cap(choices.wing1_second.initial_selected, params.delta, rng);
      rec.B_second = mechanism(rec.M1_second, choices.wing1_second.initial_selected,
                               choices.wing1_second.final_selected);
    }
  }

  const LatticeSnap bc = snap_cosine(rec.B.dot(rec.C), size, LatticeKind::bell);
  rec.feasible = rec.feasible && bc.on_lattice;
  const BitStringSinglet bits = BitStringSinglet::build(size, bc.point.n);
  std::tie(rec.outcome1, rec.outcome2) = bits.outcome_pair(rec.k);
  return rec;
}

}  // namespace istsim
