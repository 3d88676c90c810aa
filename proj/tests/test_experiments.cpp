#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "golden_compare.hpp"
#include "istsim/errors.hpp"
#include "istsim/experiments.hpp"
#include "istsim/report.hpp"

using namespace istsim;

namespace {

const UnitVector kY(0.0, 1.0, 0.0);

UnitVector deg(double d) { return UnitVector::in_plane_degrees(d); }

SingleChoices single_choices(double a_deg, double b_deg) {
  return SingleChoices{ExperimenterChoice{kY, deg(a_deg)}, ExperimenterChoice{kY, deg(b_deg)}, {}};
}

BellChoices bell_choices(double b_deg, double c_deg) {
  return BellChoices{ExperimenterChoice{kY, deg(b_deg)}, ExperimenterChoice{kY, deg(c_deg)}};
}

SequentialChoices sequential_choices(double a, double b, double c) {
  return SequentialChoices{{ExperimenterChoice{kY, deg(a)}, ExperimenterChoice{kY, deg(b)},
                            ExperimenterChoice{kY, deg(c)}}};
}

}  // namespace

TEST(SingleRun, RecordIsConsistentAndConstrained) {
  const ModelParams params;
  const auto choices = single_choices(0, 60);
  for (std::uint64_t r = 0; r < 2000; ++r) {
    Engine rng = make_engine(9, r);
    const auto rec = run_single_once(params, choices, rng, r);
    ASSERT_TRUE(rec.self_consistent());
    ASSERT_TRUE(rec.outcome == 1 || rec.outcome == -1);
    ASSERT_LT(rec.hidden.P_exact.chord(kY), params.delta);
    ASSERT_LT(rec.hidden.M_exact.chord(kY), params.delta);
    ASSERT_LT(rec.B.exact.chord(deg(60)), params.delta);
    const auto snap = snap_cosine(rec.A_exact.dot(rec.B.exact), params.lattice(), LatticeKind::single);
    ASSERT_TRUE(snap.on_lattice);
    ASSERT_EQ(snap.point.n, rec.B.n());
    ASSERT_EQ(rec.bits.n(), rec.B.n());
    ASSERT_EQ(rec.bits.phase(), 0);
  }
}

TEST(SingleRun, GoldenRecords) {
  const ModelParams params;
  Json out = Json::array();
  for (std::uint64_t r = 0; r < 4; ++r) {
    Engine rng = make_engine(2024, r);
    out.push_back(to_json(run_single_once(params, single_choices(0, 60), rng, r)));
  }
  golden::check("single_runs", out);
}

TEST(BellRun, RecordIsConsistentAndConstrained) {
  const ModelParams params;
  const auto choices = bell_choices(0, 45);
  for (std::uint64_t r = 0; r < 2000; ++r) {
    Engine rng = make_engine(4, r);
    const auto rec = run_bell_once(params, choices, rng, r);
    ASSERT_TRUE(rec.self_consistent());
    ASSERT_LT(rec.hidden.M1_exact.chord(kY), params.delta);
    ASSERT_LT(rec.hidden.M2_exact.chord(kY), params.delta);
    const double scaled = params.N * (1.0 - rec.B_exact.dot(rec.C.exact)) / 4.0;
    ASSERT_NEAR(scaled, rec.C.n(), 1e-6);
    ASSERT_GT(rec.C.n(), 0);
  }
}

TEST(BellRun, GoldenRecords) {
  const ModelParams params;
  Json out = Json::array();
  for (std::uint64_t r = 0; r < 4; ++r) {
    Engine rng = make_engine(2024, r);
    out.push_back(to_json(run_bell_once(params, bell_choices(0, 45), rng, r)));
  }
  golden::check("bell_runs", out);
}

TEST(BellRun, WingOneOutcomeIgnoresWingTwoSetting) {
  const ModelParams params;
  for (std::uint64_t r = 0; r < 3000; ++r) {
    Engine rng1 = make_engine(17, r), rng2 = make_engine(17, r);
    const auto a = run_bell_once(params, bell_choices(0, 45), rng1, r);
    const auto b = run_bell_once(params, bell_choices(0, 120), rng2, r);
    ASSERT_EQ(a.hidden.M1_exact, b.hidden.M1_exact);
    ASSERT_EQ(a.hidden.k.k, b.hidden.k.k);
    ASSERT_EQ(a.outcome1, b.outcome1);
  }
}

TEST(Ensemble, RejectsTooFewRuns) {
  EXPECT_THROW(run_single_ensemble(ModelParams{}, single_choices(0, 60), 999, 1), ParameterError);
  EXPECT_THROW(run_bell_ensemble(ModelParams{}, bell_choices(0, 60), 10, 1), ParameterError);
}

TEST(Ensemble, SingleWithinToleranceAndEstimatorConsistent) {
  const ModelParams params;
  for (double b : {60.0, 90.0, 120.0}) {
    double dot_sum = 0.0;
    std::int64_t outcome_sum = 0;
    const auto stats = run_single_ensemble(params, single_choices(0, b), 20000, 5,
                                           [&](const SingleRunRecord& r) {
                                             dot_sum += r.A_exact.dot(r.B.exact);
                                             outcome_sum += r.outcome;
                                           });
    EXPECT_NEAR(stats.quantum_E, std::cos(b * std::numbers::pi / 180.0), 1e-12);
    EXPECT_TRUE(stats.within_tolerance(params.delta)) << "b=" << b << " E=" << stats.E_hat();
    EXPECT_LE(std::abs(stats.E_hat()), 1.0);
    EXPECT_EQ(stats.product_sum, outcome_sum);
    EXPECT_NEAR(stats.sigma(), std::sqrt((1 - stats.E_hat() * stats.E_hat()) / 20000.0), 1e-15);
    // The outcome mean estimates the mean exact-setting dot product.
    EXPECT_LT(std::abs(stats.E_hat() - dot_sum / 20000.0), 3 * stats.sigma());
    EXPECT_NEAR(stats.mean_exact_dot(), dot_sum / 20000.0, 1e-12);
    EXPECT_LT((stats.first_prime() - deg(0).vec()).norm(), params.delta);
    EXPECT_LT((stats.second_prime() - deg(b).vec()).norm(), params.delta);
  }
}

TEST(Ensemble, SinkAndChunkedPathsAgree) {
  const ModelParams params;
  const auto parallel = run_single_ensemble(params, single_choices(0, 75), 9000, 3);
  const auto serial = run_single_ensemble(params, single_choices(0, 75), 9000, 3,
                                          [](const SingleRunRecord&) {});
  EXPECT_EQ(parallel.runs, serial.runs);
  EXPECT_EQ(parallel.product_sum, serial.product_sum);
  EXPECT_NEAR(parallel.exact_dot_sum, serial.exact_dot_sum, 1e-9);
  EXPECT_LT((parallel.second_setting_sum - serial.second_setting_sum).norm(), 1e-9);

  const auto again = run_single_ensemble(params, single_choices(0, 75), 9000, 3);
  EXPECT_EQ(again.product_sum, parallel.product_sum);
  EXPECT_EQ(again.exact_dot_sum, parallel.exact_dot_sum);

  const auto bell_a = run_bell_ensemble(params, bell_choices(0, 75), 5000, 8);
  const auto bell_b = run_bell_ensemble(params, bell_choices(0, 75), 5000, 8, [](const BellRunRecord&) {});
  EXPECT_EQ(bell_a.product_sum, bell_b.product_sum);
  EXPECT_EQ(bell_a.first_sum, bell_b.first_sum);
}

TEST(Ensemble, BellCorrelationsAndMarginals) {
  const ModelParams params;
  for (double c : {60.0, 90.0, 120.0, 180.0}) {
    const auto stats = run_bell_ensemble(params, bell_choices(0, c), 20000, 12);
    EXPECT_NEAR(stats.quantum_E, -std::cos(c * std::numbers::pi / 180.0), 1e-12);
    EXPECT_TRUE(stats.within_tolerance(params.delta)) << "c=" << c << " E=" << stats.E_hat();
    const double s = 1.0 / std::sqrt(20000.0);
    EXPECT_LT(std::abs(stats.first_marginal()), 5 * s);
    EXPECT_LT(std::abs(stats.second_marginal()), 5 * s);
  }
}

TEST(Ensemble, AntiparallelSettingsReachTheAntipodeRing) {
  const ModelParams params;
  bool antipode = false;
  const auto stats = run_bell_ensemble(params, bell_choices(0, 180), 5000, 6, [&](const BellRunRecord& r) {
    antipode |= r.C.n() == params.N / 2;
  });
  EXPECT_TRUE(antipode);
  EXPECT_GT(stats.E_hat(), 1 - stats.tolerance(params.delta));
  EXPECT_LE(stats.E_hat(), 1.0);
}

TEST(Chsh, ExceedsClassicalBoundAtTextbookAngles) {
  const ModelParams params;
  const auto result = chsh(params, ChshSettings::textbook(), 100000, 21);
  EXPECT_GE(result.S, result.threshold(params.delta));
  EXPECT_GT(result.S, 2.0);
  EXPECT_NEAR(result.threshold(params.delta),
              2 * std::sqrt(2.0) - 8 * params.delta - 20 * result.sigma_max, 1e-12);

  // Equal settings need a cap wide enough to reach the first bell ring.
  ModelParams wide;
  wide.delta = 0.2;
  ChshSettings same = ChshSettings::textbook();
  same.b_prime = same.c = same.c_prime = same.b;
  const auto degenerate = chsh(wide, same, 5000, 21);
  EXPECT_LE(degenerate.S, 2.0 + 20 * degenerate.sigma_max);
  EXPECT_THROW(chsh(params, same, 1000, 21), InfeasibilityError);
}

TEST(Drift, StaysInCapAndPassesThroughAnchor) {
  const ModelParams params;
  Engine rng(8);
  const double cap = cap_angular_radius(params.delta);
  for (int trial = 0; trial < 200; ++trial) {
    const UnitVector center = deg(360.0 * uniform01(rng));
    const UnitVector anchor = sample_cap(center, params.delta, rng);
    const DriftTrajectory d{center, cap, anchor, 2.0, 2 * std::numbers::pi * uniform01(rng), 0.01};
    EXPECT_EQ(d.at(2.0), anchor);
    UnitVector prev = d.at(-5.0);
    for (double t = -5.0; t <= 9.0; t += 0.05) {
      const UnitVector v = d.at(t);
      ASSERT_LE(center.angle(v), cap + 1e-12);
      // Unit speed in the chart: the chord step never exceeds rate * dt.
      ASSERT_LE(prev.chord(v), 0.01 * 0.05 + 1e-9);
      prev = v;
    }
    ASSERT_LT(d.at(2.0 + 1e-7).chord(anchor), 1e-8);
  }
  const DriftTrajectory still{deg(0), cap, deg(0), 0.0, 1.0, 0.0};
  EXPECT_EQ(still.at(100.0), deg(0));
}

TEST(Sequential, ZeroErrorUsesSelectedSettings) {
  const ModelParams params;
  Engine rng(1);
  const auto choices = sequential_choices(0, 60, 120);
  const auto rec = run_sequential(params, choices, {1, 2, 3}, DriftModel{0.0, 7}, false, rng);
  EXPECT_EQ(rec.exact[0], deg(0));
  EXPECT_EQ(rec.exact[1], deg(60));
  EXPECT_EQ(rec.exact[2], deg(120));
  const auto snap = snap_cosine(deg(0).dot(deg(60)), params.lattice(), LatticeKind::single);
  EXPECT_DOUBLE_EQ(rec.report.ab.residual, snap.residual);
  EXPECT_FALSE(rec.report.ab.on_lattice);
  EXPECT_EQ(sequential_settings_at(rec, {1, 3, 2}), rec.exact);
}

TEST(Sequential, MechanismErrorSatisfiesConstraints) {
  const ModelParams params;
  const auto choices = sequential_choices(0, 60, 120);
  int satisfied = 0;
  for (std::uint64_t r = 0; r < 300; ++r) {
    Engine rng = make_engine(31, r);
    const auto rec = run_sequential(params, choices, {1, 2, 3}, DriftModel{0.01, 7}, true, rng, r);
    for (std::size_t i = 0; i < 3; ++i) {
      ASSERT_LT(rec.drift[i].anchor.chord(kY), params.delta);
      ASSERT_LT(rec.exact[i].chord(choices.apparatus[i].final_selected), params.delta);
    }
    ASSERT_TRUE(rec.report.ab.on_lattice);
    ASSERT_TRUE(rec.report.bc.on_lattice);
    satisfied += rec.report.satisfied();
    EXPECT_EQ(sequential_settings_at(rec, rec.times), rec.exact);
  }
  EXPECT_EQ(satisfied, 300);
}

TEST(Sequential, SwappingTimesBreaksConstraints) {
  const ModelParams params;
  const auto choices = sequential_choices(0, 60, 120);
  int broken = 0;
  const int runs = 200;
  for (std::uint64_t r = 0; r < runs; ++r) {
    Engine rng = make_engine(32, r);
    const auto rec = run_sequential(params, choices, {1, 2, 3}, DriftModel{0.01, 7}, true, rng, r);
    const auto swapped = sequential_settings_at(rec, {1, 3, 2});
    EXPECT_NE(swapped[1], rec.exact[1]);
    const auto report = check_sequence(swapped[0], swapped[1], swapped[2], params.lattice());
    broken += report.satisfied() != rec.report.satisfied();
  }
  EXPECT_GT(broken, runs * 9 / 10);
}

TEST(Sequential, GoldenRecord) {
  const ModelParams params;
  Engine rng = make_engine(2024, 0);
  const auto rec = run_sequential(params, sequential_choices(0, 60, 120), {1, 2, 3},
                                  DriftModel{0.01, 7}, true, rng, 0);
  golden::check("sequential_run", to_json(rec));
}

TEST(BellSequential, RecordsSatisfyBothLattices) {
  const ModelParams params;
  const BellSequentialChoices choices{ExperimenterChoice{kY, deg(0)}, ExperimenterChoice{kY, deg(90)},
                                      ExperimenterChoice{kY, deg(45)}};
  for (std::uint64_t r = 0; r < 300; ++r) {
    Engine rng = make_engine(40, r);
    const auto rec = run_bell_sequential(params, choices, true, rng, r);
    ASSERT_TRUE(rec.feasible);
    ASSERT_TRUE(snap_cosine(rec.B.dot(rec.C), params.lattice(), LatticeKind::bell).on_lattice);
    ASSERT_TRUE(snap_cosine(rec.B.dot(rec.B_second), params.lattice(), LatticeKind::single).on_lattice);
    ASSERT_TRUE(rec.outcome1 == 1 || rec.outcome1 == -1);
  }
  Engine rng(1);
  const auto ideal = run_bell_sequential(params, choices, false, rng);
  EXPECT_EQ(ideal.B, deg(0));
  EXPECT_EQ(ideal.C, deg(45));
}
