#include "istsim/report.hpp"

namespace istsim {

namespace {

Json vec3(const Eigen::Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

}  // namespace

Json to_json(const UnitVector& v) { return vec3(v.vec()); }

Json to_json(const RationalCosine& r) {
  return Json{{"n", r.n},
              {"numerator", r.numerator},
              {"denominator", r.denominator},
              {"kind", to_string(r.kind)}};
}

Json to_json(const ModelParams& p) {
  return Json{{"N", p.N}, {"delta", p.delta}, {"azimuth_steps", p.azimuth()}, {"seed", p.seed}};
}

Json to_json(const EnsembleStats& s) {
  Json j{{"runs", s.runs},
         {"E_hat", s.E_hat()},
         {"sigma", s.sigma()},
         {"quantum_E", s.quantum_E},
         {"model_E", s.model_E()},
         {"mean_exact_dot", s.mean_exact_dot()},
         {"first_prime", vec3(s.first_prime())},
         {"second_prime", vec3(s.second_prime())},
         {"initial_prime", vec3(s.initial_prime())}};
  if (s.sign < 0) {
    j["marginal_1"] = s.first_marginal();
    j["marginal_2"] = s.second_marginal();
  }
  return j;
}

Json to_json(const ChshResult& r) {
  static constexpr const char* kLabels[] = {"E(b,c)", "E(b,c')", "E(b',c)", "E(b',c')"};
  Json correlators = Json::array();
  for (std::size_t i = 0; i < r.correlators.size(); ++i) {
    Json c = to_json(r.correlators[i]);
    c["label"] = kLabels[i];
    correlators.push_back(std::move(c));
  }
  return Json{{"S", r.S}, {"sigma_max", r.sigma_max}, {"correlators", std::move(correlators)}};
}

Json to_json(const SequenceConstraintReport& r) {
  return Json{{"ab", {{"n", r.ab.point.n}, {"residual", r.ab.residual}, {"on_lattice", r.ab.on_lattice}}},
              {"bc", {{"n", r.bc.point.n}, {"residual", r.bc.residual}, {"on_lattice", r.bc.on_lattice}}},
              {"phase_at_b",
               {{"l", r.phase_at_b.phase.l},
                {"residual", r.phase_at_b.residual},
                {"on_lattice", r.phase_on_lattice}}},
              {"satisfied", r.satisfied()}};
}

Json to_json(const SingleRunRecord& r) {
  return Json{{"run_index", r.run_index},
              {"P", to_json(r.hidden.P_exact)},
              {"M", to_json(r.hidden.M_exact)},
              {"k", r.hidden.k.k},
              {"A", to_json(r.A_exact)},
              {"B", to_json(r.B.exact)},
              {"lattice", to_json(r.B.lattice_point)},
              {"azimuth_index", r.B.azimuth_index},
              {"outcome", r.outcome}};
}

Json to_json(const BellRunRecord& r) {
  return Json{{"run_index", r.run_index},
              {"M1", to_json(r.hidden.M1_exact)},
              {"M2", to_json(r.hidden.M2_exact)},
              {"k", r.hidden.k.k},
              {"B", to_json(r.B_exact)},
              {"C", to_json(r.C.exact)},
              {"lattice", to_json(r.C.lattice_point)},
              {"azimuth_index", r.C.azimuth_index},
              {"outcome1", r.outcome1},
              {"outcome2", r.outcome2}};
}

Json to_json(const SequentialRecord& r) {
  Json initial = Json::array();
  for (const auto& d : r.drift) initial.push_back(to_json(d.anchor));
  return Json{{"run_index", r.run_index},
              {"times", r.times},
              {"mechanism_error", r.mechanism_error},
              {"M", std::move(initial)},
              {"A", to_json(r.exact[0])},
              {"B", to_json(r.exact[1])},
              {"C", to_json(r.exact[2])},
              {"constraints", to_json(r.report)}};
}

Json to_json(const DependenceReport& r) {
  return Json{{"variant", r.variant},
              {"setting1", to_json(r.setting1)},
              {"setting2", to_json(r.setting2)},
              {"distance", r.distance},
              {"interval", {{"lower", r.interval.lower}, {"upper", r.interval.upper}, {"level", r.interval.level}}},
              {"samples", {r.samples1, r.samples2}},
              {"admissible", {r.admissible1, r.admissible2}},
              {"alphabet", r.alphabet},
              {"verdict", to_string(r.verdict)}};
}

Json to_json(const NonlocalityWitness& w) {
  Json j{{"found", w.found}, {"trials", w.trials}, {"lattice_only", w.lattice_only}};
  if (!w.found) return j;
  if (w.M2) j["M2"] = to_json(*w.M2);
  j["C"] = to_json(w.C);
  j["k"] = w.k.k;
  j["B1"] = to_json(w.B1);
  j["B2"] = to_json(w.B2);
  j["n"] = {w.n1, w.n2};
  j["O2"] = {w.o2_first, w.o2_second};
  return j;
}

Json to_json(const PsiOnticReport& r) {
  return Json{{"a1", to_json(r.a1)},
              {"a2", to_json(r.a2)},
              {"samples", r.samples},
              {"separation", r.separation},
              {"sub_resolution", r.sub_resolution},
              {"empirical_overlap", r.empirical_overlap},
              {"cap_overlap", r.cap_overlap},
              {"disjoint", r.disjoint},
              {"recomputable", r.recomputable}};
}

Json to_json(const TriangleArgument& t) {
  Json j{{"vertices", {to_json(t.vertices[0]), to_json(t.vertices[1]), to_json(t.vertices[2])}},
         {"xy", {{"kind", to_string(t.xy_kind)}, {"n", t.xy.point.n}, {"residual", t.xy.residual}, {"on_lattice", t.xy.on_lattice}}},
         {"yz", {{"kind", to_string(t.yz_kind)}, {"n", t.yz.point.n}, {"residual", t.yz.residual}, {"on_lattice", t.yz.on_lattice}}}};
  if (t.degeneracy) {
    j["degeneracy"] = *t.degeneracy;
  } else {
    j["angles"] = t.angles;
    j["angle_niven_rational"] = t.angle_niven_rational;
    j["phase"] = {{"l", t.phase.phase.l},
                  {"residual", t.phase.residual},
                  {"on_lattice", t.phase_on_lattice},
                  {"cosine_rational", t.phase_cosine_rational}};
  }
  j["verdict"] = to_string(t.verdict);
  return j;
}

Json to_json(const CounterfactualVerdict& v) {
  return Json{{"scenario", v.scenario},
              {"mode", v.mode},
              {"naive", to_json(v.naive)},
              {"model", to_json(v.model)},
              {"counterfactual_satisfies_constraints", v.counterfactual_satisfies_constraints},
              {"disagree", v.disagree()}};
}

Json to_json(const CensusReport& r) {
  return Json{{"scenario", r.scenario},
              {"mode", r.mode},
              {"runs", r.runs},
              {"disagreements", r.disagreements},
              {"disagreement_fraction", r.disagreement_fraction()},
              {"naive_ruled_out", r.naive_ruled_out},
              {"model_ruled_out", r.model_ruled_out},
              {"original_satisfied", r.original_satisfied},
              {"counterfactual_satisfied", r.counterfactual_satisfied},
              {"degenerate", r.degenerate}};
}

Json to_json(const NoncommutativityReport& r) {
  return Json{{"N", r.N},
              {"kind", to_string(r.kind)},
              {"orthogonal_triples", r.orthogonal_triples},
              {"realizable_pairs", r.realizable_pairs},
              {"pair_examples", r.pair_examples},
              {"trials", r.trials},
              {"max_abs_pairwise_dot", r.max_abs_pairwise_dot},
              {"on_lattice_with_A", r.on_lattice_with_A},
              {"tension_flag", r.tension_flag},
              {"note", r.note}};
}

Json to_json(const ConspiracyReport& r) {
  return Json{{"apparatus_count", r.apparatus_count},
              {"runs", r.runs},
              {"choice_model", r.choice_model},
              {"mutual_information", r.mutual_information},
              {"log2_apparatus", r.log2_apparatus},
              {"bias_bound", r.bias_bound},
              {"correlation_fraction", r.correlation_fraction},
              {"ambiguous_runs", r.ambiguous_runs}};
}

}  // namespace istsim
