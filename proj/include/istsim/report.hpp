#pragma once

#include <json.hpp>

#include "istsim/analysis.hpp"
#include "istsim/experiments.hpp"

namespace istsim {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

Json to_json(const UnitVector& v);
Json to_json(const RationalCosine& r);
Json to_json(const ModelParams& p);
Json to_json(const EnsembleStats& s);
Json to_json(const ChshResult& r);
Json to_json(const SequenceConstraintReport& r);
Json to_json(const SingleRunRecord& r);
Json to_json(const BellRunRecord& r);
Json to_json(const SequentialRecord& r);
Json to_json(const DependenceReport& r);
Json to_json(const NonlocalityWitness& w);
Json to_json(const PsiOnticReport& r);
Json to_json(const TriangleArgument& t);
Json to_json(const CounterfactualVerdict& v);
Json to_json(const CensusReport& r);
Json to_json(const NoncommutativityReport& r);
Json to_json(const ConspiracyReport& r);

}  // namespace istsim
